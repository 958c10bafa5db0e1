"""Database construction: generate candidates, gate them for uniqueness, augment.

The dataset on disk looks like::

    <dir>/manifest.json
    <dir>/<subject_id>/primary.png
    <dir>/<subject_id>/sample_1.png ... sample_6.png

Candidate ``k`` of a dataset always derives its seed from ``(master_seed, k)``
and admission is strictly sequential, so the admitted subjects are a pure
function of the master seed. Re-running with a larger count resumes from the
stored candidate cursor.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import ndimage
from skimage.morphology import skeletonize

from .raster import box_blur, load_image, save_image, to_uint8
from .vig import GENERATORS, generate_vein_image

log = logging.getLogger(__name__)

UNIQUENESS_THRESHOLD = 0.1
SAMPLES_PER_SUBJECT = 6
MAX_CONSECUTIVE_REJECTIONS = 50
SEARCH_RADIUS = 4
MANIFEST_NAME = "manifest.json"


class CorruptDatasetError(RuntimeError):
    pass


class GeneratorExhaustedError(RuntimeError):
    def __init__(self, message: str, attempts: int, rejections: int):
        super().__init__(message)
        self.attempts = attempts
        self.rejections = rejections

    @property
    def rejection_rate(self) -> float:
        return self.rejections / max(self.attempts, 1)


def thread_count(default: Optional[int] = None) -> int:
    env = os.environ.get("VEINFORGE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer VEINFORGE_THREADS=%r", env)
    return default or min(8, os.cpu_count() or 1)


# --------------------------------------------------------------------------
# similarity

def binarize_veins(image: np.ndarray, window: int = 25, offset: float = 0.5) -> np.ndarray:
    """One-pixel vein centrelines.

    The image is standardized first, so ``offset`` is in units of its standard
    deviation and brightness/contrast jitter does not move the threshold.
    Pixels darker than their local mean by ``offset`` are vein candidates and
    the candidate mask is skeletonized.
    """
    image = np.asarray(image, dtype=float)
    std = image.std()
    if std == 0:
        return np.zeros_like(image)
    z = (image - image.mean()) / std
    local = ndimage.uniform_filter(z, size=window, mode="reflect")
    return skeletonize(z < local - offset).astype(float)


def _shifted_ncc(a: np.ndarray, b: np.ndarray, radius: int) -> float:
    h, w = a.shape
    best = -1.0
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            ya, yb = max(dy, 0), max(-dy, 0)
            xa, xb = max(dx, 0), max(-dx, 0)
            pa = a[ya:h - yb, xa:w - xb]
            pb = b[yb:h - ya, xb:w - xa]
            n = pa.size
            sa, sb = pa.sum(), pb.sum()
            va = sa - sa * sa / n
            vb = sb - sb * sb / n
            if va <= 0 or vb <= 0:
                continue
            r = (np.vdot(pa, pb) - sa * sb / n) / np.sqrt(va * vb)
            best = max(best, float(r))
    return best


def map_similarity(map_a: np.ndarray, map_b: np.ndarray, radius: int = SEARCH_RADIUS) -> float:
    """Similarity of two centreline maps, in [0, 1].

    Each thin map is correlated against the other map widened by one pixel,
    and the two directions are averaged. The one-sided tolerance absorbs small
    rotations without letting unrelated thick maps line up by chance.
    """
    if map_a.shape != map_b.shape:
        raise ValueError(f"shape mismatch: {map_a.shape} vs {map_b.shape}")
    if np.array_equal(map_a, map_b):
        return 1.0
    a = np.asarray(map_a, dtype=float)
    b = np.asarray(map_b, dtype=float)
    wide_a = ndimage.binary_dilation(a > 0).astype(float)
    wide_b = ndimage.binary_dilation(b > 0).astype(float)
    r = 0.5 * (_shifted_ncc(a, wide_b, radius) + _shifted_ncc(wide_a, b, radius))
    return float(min(max(r, 0.0), 1.0))


def similarity_score(a: np.ndarray, b: np.ndarray, radius: int = SEARCH_RADIUS) -> float:
    """Best normalized cross-correlation of vein centreline maps over +-``radius`` px shifts.

    Negative correlations map to 0. Symmetric, and 1.0 for identical images.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if np.array_equal(a, b):
        return 1.0
    return map_similarity(binarize_veins(a), binarize_veins(b), radius)


# --------------------------------------------------------------------------
# manifest / dataset

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class SubjectRecord:
    subject_id: int
    generator_kind: str
    provenance: dict
    primary_image: np.ndarray
    samples: list

    def __post_init__(self):
        if len(self.samples) != SAMPLES_PER_SUBJECT:
            raise ValueError(f"a subject needs exactly {SAMPLES_PER_SUBJECT} samples")


@dataclass
class DatasetManifest:
    name: str
    generator: str
    seed: int
    size: int
    uniqueness_threshold: float = UNIQUENESS_THRESHOLD
    next_candidate: int = 0
    attempts: int = 0
    rejections: int = 0
    created: str = ""
    updated: str = ""
    subjects: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        data = json.loads(text)
        return cls(**data)

    def write(self, root) -> None:
        path = Path(root) / MANIFEST_NAME
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(self.to_json(), encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def read(cls, root) -> "DatasetManifest":
        return cls.from_json((Path(root) / MANIFEST_NAME).read_text(encoding="utf-8"))


class Dataset:
    """A manifest on disk plus a cache of binarized primary vein maps."""

    def __init__(self, root, manifest: DatasetManifest):
        self.root = Path(root)
        self.manifest = manifest
        self._maps: dict[int, np.ndarray] = {}

    @classmethod
    def open(cls, root) -> "Dataset":
        return cls(root, DatasetManifest.read(root))

    def __len__(self):
        return len(self.manifest.subjects)

    def verify(self) -> None:
        for subj in self.manifest.subjects:
            for rel, digest in subj["sha256"].items():
                path = self.root / rel
                if not path.is_file():
                    raise CorruptDatasetError(f"missing file {path}")
                if sha256_file(path) != digest:
                    raise CorruptDatasetError(f"hash mismatch for {path}")

    def primary_path(self, subj: dict) -> Path:
        return self.root / subj["files"]["primary"]

    def primary_maps(self) -> list[tuple[int, np.ndarray]]:
        out = []
        for subj in self.manifest.subjects:
            sid = subj["id"]
            if sid not in self._maps:
                path = self.primary_path(subj)
                rel = subj["files"]["primary"]
                if not path.is_file() or sha256_file(path) != subj["sha256"][rel]:
                    raise CorruptDatasetError(f"primary image of subject {sid} is missing or corrupted")
                self._maps[sid] = binarize_veins(load_image(path))
            out.append((sid, self._maps[sid]))
        return out

    def remember(self, subject_id: int, image: np.ndarray) -> None:
        # store the map of the quantized image, exactly what a reload would see
        self._maps[subject_id] = binarize_veins(to_uint8(image) / 255.0)


# --------------------------------------------------------------------------
# IUD

class IudResult(NamedTuple):
    accepted: bool
    matching_id: Optional[int] = None
    score: float = 0.0


def iud_check(candidate: np.ndarray, dataset, threshold: float = UNIQUENESS_THRESHOLD,
              workers: Optional[int] = None) -> IudResult:
    """Exhaustive uniqueness check of ``candidate`` against every stored primary.

    ``dataset`` is a :class:`Dataset` or a sequence of ``(id, image)`` pairs.
    Comparisons run on a thread pool; the verdict names the lowest matching
    subject id, so it does not depend on scheduling.
    """
    if isinstance(dataset, Dataset):
        maps = dataset.primary_maps()
    else:
        maps = [(sid, binarize_veins(img)) for sid, img in dataset]
    if not maps:
        return IudResult(True)
    cand = binarize_veins(candidate)
    workers = workers or thread_count()

    def score(entry):
        sid, m = entry
        return sid, map_similarity(cand, m)

    if workers > 1 and len(maps) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(score, maps))
    else:
        scores = [score(e) for e in maps]
    hits = [(sid, s) for sid, s in scores if s > threshold]
    if hits:
        sid, s = min(hits)
        return IudResult(False, sid, s)
    return IudResult(True, None, max(s for _, s in scores))


# --------------------------------------------------------------------------
# VSA

@dataclass
class AugmentConfig:
    """Ranges for the per-sample random transforms; each is ``(low, high)``."""

    contrast_gain: tuple = (0.9, 1.1)
    brightness_offset: tuple = (-0.05, 0.05)
    blur_radius: tuple = (0, 1)
    translation_px: tuple = (-3.0, 3.0)
    rotation_deg: tuple = (-3.0, 3.0)
    crop_margin_px: tuple = (0.0, 4.0)
    shear: tuple = (-0.05, 0.05)
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("contrast_gain", "brightness_offset", "blur_radius", "translation_px",
                     "rotation_deg", "crop_margin_px", "shear"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name}: low must not exceed high")
            setattr(self, name, (lo, hi))
        if max(abs(v) for v in self.rotation_deg) > 15:
            raise ValueError("rotation bound must be <= 15 degrees")
        if self.crop_margin_px[0] < 0 or self.blur_radius[0] < 0:
            raise ValueError("crop margin and blur radius must be non-negative")

    @classmethod
    def identity(cls, rng_seed: int = 0) -> "AugmentConfig":
        return cls((1.0, 1.0), (0.0, 0.0), (0, 0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0), rng_seed)

    def is_identity(self) -> bool:
        return self == AugmentConfig.identity(self.rng_seed)


def _affine(image: np.ndarray, angle_deg: float, shear: float, tx: float, ty: float,
            margin: float) -> np.ndarray:
    h, w = image.shape
    if angle_deg == 0 and shear == 0 and tx == 0 and ty == 0 and margin == 0:
        return image.copy()
    zoom = (w - 2.0 * margin) / w
    t = np.deg2rad(angle_deg)
    rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    sh = np.array([[1.0, 0.0], [shear, 1.0]])
    # maps output (row, col) to input (row, col) about the centre
    mat = zoom * rot @ sh
    centre = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
    offset = centre - mat @ centre - np.array([ty, tx])
    return ndimage.affine_transform(image, mat, offset=offset, order=1, mode="reflect")


def _photometric(image: np.ndarray, gain: float, offset: float, blur: int) -> np.ndarray:
    m = image.mean()
    out = (image - m) * gain + m + offset
    if blur > 0:
        out = box_blur(out, blur)
    return np.clip(out, 0.0, 1.0)


def _draw_sample(primary: np.ndarray, cfg: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    u = lambda rng_pair: float(rng.uniform(*rng_pair))
    angle = u(cfg.rotation_deg)
    shear = u(cfg.shear)
    tx, ty = u(cfg.translation_px), u(cfg.translation_px)
    margin = u(cfg.crop_margin_px)
    gain = u(cfg.contrast_gain)
    offset = u(cfg.brightness_offset)
    blur = int(rng.integers(cfg.blur_radius[0], cfg.blur_radius[1], endpoint=True))
    return _photometric(_affine(primary, angle, shear, tx, ty, margin), gain, offset, blur)


def vsa_augment(primary: np.ndarray, config: Optional[AugmentConfig] = None,
                n_samples: int = SAMPLES_PER_SUBJECT, max_redraws: int = 20) -> list[np.ndarray]:
    """Six randomly transformed samples of one subject.

    Each sample is an affine jitter followed by a photometric jitter, with
    parameters drawn independently. With non-degenerate ranges, redraws keep
    every sample distinct from the primary and from each other at 8 bits.
    """
    cfg = config or AugmentConfig()
    primary = np.asarray(primary, dtype=float)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, 11]))
    if cfg.is_identity():
        return [primary.copy() for _ in range(n_samples)]
    seen = {to_uint8(primary).tobytes()}
    samples = []
    for _ in range(n_samples):
        for _ in range(max_redraws):
            s = _draw_sample(primary, cfg, rng)
            key = to_uint8(s).tobytes()
            if key not in seen:
                break
        seen.add(key)
        samples.append(s)
    return samples


# --------------------------------------------------------------------------
# ROI augmentation of raw captures

def roi_augment(raw: np.ndarray, roi_side: int, shift_step: int = 5, shift_extent: int = 20,
                angle_step: float = 5, angle_max: float = 15) -> list[np.ndarray]:
    """Translated and rotated crops around the central ROI of a raw palm image.

    A ``(2*extent/step + 1)**2`` grid of shifted crops comes first (row-major,
    top-left shift first), followed by the rotated centre crops
    ``+step, -step, +2*step, -2*step, ...`` up to ``angle_max``. Defaults give
    81 + 6 = 87 crops.
    """
    raw = np.asarray(raw, dtype=float)
    h, w = raw.shape
    if roi_side < 1:
        raise ValueError("roi_side must be positive")
    if shift_extent % shift_step or (angle_max and angle_max % angle_step):
        raise ValueError("extents must be multiples of their steps")
    cy, cx = (h - roi_side) / 2.0, (w - roi_side) / 2.0
    top0, left0 = int(round(cy)), int(round(cx))

    shifts = range(-shift_extent, shift_extent + 1, shift_step) if shift_extent else [0]
    out = []
    for dy in shifts:
        for dx in shifts:
            top, left = top0 + dy, left0 + dx
            if top < 0 or left < 0 or top + roi_side > h or left + roi_side > w:
                raise ValueError("shifted ROI exceeds the image bounds")
            out.append(raw[top:top + roi_side, left:left + roi_side].copy())

    n_angles = int(round(angle_max / angle_step)) if angle_max else 0
    centre = np.array([top0 + (roi_side - 1) / 2.0, left0 + (roi_side - 1) / 2.0])
    half = (roi_side - 1) / 2.0
    grid = np.mgrid[0:roi_side, 0:roi_side].reshape(2, -1) - half
    corners = np.array([[-half, -half], [-half, half], [half, -half], [half, half]]).T
    for k in range(1, n_angles + 1):
        for sign in (1, -1):
            t = np.deg2rad(sign * k * angle_step)
            rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
            cc = rot @ corners + centre[:, None]
            if cc.min() < 0 or cc[0].max() > h - 1 or cc[1].max() > w - 1:
                raise ValueError("rotated ROI exceeds the image bounds")
            coords = rot @ grid + centre[:, None]
            crop = ndimage.map_coordinates(raw, coords, order=1, mode="nearest")
            out.append(crop.reshape(roi_side, roi_side))
    return out


def roi_count(shift_step: int = 5, shift_extent: int = 20, angle_step: float = 5,
              angle_max: float = 15) -> int:
    side = 2 * shift_extent // shift_step + 1
    return side * side + 2 * int(round(angle_max / angle_step))


# --------------------------------------------------------------------------
# database generation

def candidate_seed(master_seed: int, index: int) -> int:
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def _write_subject(root: Path, sid: int, primary: np.ndarray, samples: Sequence[np.ndarray]) -> dict:
    subdir = root / f"{sid:06d}"
    subdir.mkdir(parents=True, exist_ok=True)
    files = {"primary": f"{sid:06d}/primary.png", "samples": []}
    save_image(primary, root / files["primary"])
    for k, s in enumerate(samples, start=1):
        rel = f"{sid:06d}/sample_{k}.png"
        save_image(s, root / rel)
        files["samples"].append(rel)
    digests = {rel: sha256_file(root / rel) for rel in [files["primary"], *files["samples"]]}
    return {"files": files, "sha256": digests}


def generate_database(count: int, generator_kind: str = "physarum", seed: int = 0,
                      output_dir=".", size: int = 128, name: Optional[str] = None,
                      augment: Optional[AugmentConfig] = None,
                      threshold: float = UNIQUENESS_THRESHOLD,
                      max_consecutive_rejections: int = MAX_CONSECUTIVE_REJECTIONS,
                      workers: Optional[int] = None, progress=None) -> DatasetManifest:
    """Grow (or extend) a dataset under ``output_dir`` until it holds ``count`` subjects."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if generator_kind not in GENERATORS:
        raise ValueError(f"unknown generator {generator_kind!r}")
    root = Path(output_dir)
    root.mkdir(parents=True, exist_ok=True)

    if (root / MANIFEST_NAME).exists():
        dataset = Dataset.open(root)
        m = dataset.manifest
        if (m.generator, m.seed, m.size) != (generator_kind, int(seed), int(size)):
            raise ValueError(
                f"existing dataset was built with generator={m.generator} seed={m.seed} size={m.size}"
            )
        dataset.verify()
    else:
        stamp = _now()
        m = DatasetManifest(name=name or root.resolve().name, generator=generator_kind,
                            seed=int(seed), size=int(size), uniqueness_threshold=threshold,
                            created=stamp, updated=stamp)
        dataset = Dataset(root, m)

    consecutive = 0
    while len(m.subjects) < count:
        k = m.next_candidate
        cseed = candidate_seed(seed, k)
        image, provenance = generate_vein_image(generator_kind, cseed, size)
        # judge the image exactly as it will be stored
        stored = to_uint8(image) / 255.0
        verdict = iud_check(stored, dataset, m.uniqueness_threshold, workers)
        m.next_candidate = k + 1
        m.attempts += 1
        if not verdict.accepted:
            m.rejections += 1
            consecutive += 1
            log.info("candidate %d rejected: matches subject %d (score %.3f)",
                     k, verdict.matching_id, verdict.score)
            if consecutive >= max_consecutive_rejections:
                m.updated = _now()
                m.write(root)
                raise GeneratorExhaustedError(
                    f"{consecutive} consecutive rejections; overall rejection rate "
                    f"{m.rejections}/{m.attempts}", m.attempts, m.rejections)
            continue
        consecutive = 0
        sid = len(m.subjects)
        aug = replace_seed(augment or AugmentConfig(), candidate_seed(seed, k) ^ 0x5A5A)
        samples = vsa_augment(stored, aug)
        entry = {"id": sid, "generator": generator_kind, "seed": cseed, "candidate": k,
                 "provenance": provenance, "augment": asdict(aug)}
        entry.update(_write_subject(root, sid, stored, samples))
        m.subjects.append(entry)
        dataset.remember(sid, stored)
        m.updated = _now()
        m.write(root)
        log.info("candidate %d admitted as subject %d", k, sid)
        if progress is not None:
            progress(len(m.subjects), m.attempts, m.rejections)
    m.updated = _now()
    m.write(root)
    return m


def replace_seed(cfg: AugmentConfig, rng_seed: int) -> AugmentConfig:
    d = asdict(cfg)
    d["rng_seed"] = int(rng_seed) & 0xFFFFFFFFFFFFFFFF
    return AugmentConfig(**d)


def load_subject(root, subject: dict) -> SubjectRecord:
    root = Path(root)
    return SubjectRecord(
        subject_id=subject["id"],
        generator_kind=subject["generator"],
        provenance=subject["provenance"],
        primary_image=load_image(root / subject["files"]["primary"]),
        samples=[load_image(root / rel) for rel in subject["files"]["samples"]],
    )


def iter_images(paths: Iterable) -> list[Path]:
    """All PNG/PGM files under the given files or directories, sorted."""
    found = []
    for p in map(Path, paths):
        if p.is_dir():
            found.extend(q for q in p.rglob("*") if q.suffix.lower() in (".png", ".pgm"))
        elif p.suffix.lower() in (".png", ".pgm"):
            found.append(p)
    return sorted(found)
