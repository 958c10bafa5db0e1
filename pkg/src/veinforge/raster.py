"""Grayscale ROI rendering: vein strokes, NIR-style enhancement, palm texture.

Images are plain ``float64`` arrays of shape ``(height, width)`` with values
in [0, 1]; white is 1. Quantization to 8 bits happens only on export.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage
from skimage.morphology import skeletonize

from .dla import Aggregate

REFERENCE_SIZE = 128
VEIN_DEPTH = 0.65


def rasterize(network, width: int = REFERENCE_SIZE, height: int = REFERENCE_SIZE,
              depth: float = VEIN_DEPTH, stroke_scale: float = 1.0, **placement) -> np.ndarray:
    """Draw dark anti-aliased strokes on white.

    Node ``y`` grows upwards (y=1 is the top row). Stroke half-width is
    ``stroke_scale * radius``, with radii given in pixels at 128 px and scaled
    with ``width``; strokes are never thinner than half a pixel. Aggregates
    go to :func:`rasterize_aggregate`, which also takes the ``placement``
    keywords.
    """
    if isinstance(network, Aggregate):
        return rasterize_aggregate(network, width, height, depth, stroke_scale, **placement)
    if placement:
        raise TypeError(f"unexpected arguments for a network: {sorted(placement)}")
    cover = np.zeros((height, width))
    if network.n_edges == 0:
        return np.ones((height, width))

    scale = stroke_scale * width / REFERENCE_SIZE
    px = network.nodes[:, 0] * width
    py = (1.0 - network.nodes[:, 1]) * height
    for (i, j), r in zip(network.edges, network.radii):
        hw = max(float(r) * scale, 0.5)
        ax, ay, bx, by = px[i], py[i], px[j], py[j]
        pad = hw + 1.5
        x0 = max(int(np.floor(min(ax, bx) - pad)), 0)
        x1 = min(int(np.ceil(max(ax, bx) + pad)), width)
        y0 = max(int(np.floor(min(ay, by) - pad)), 0)
        y1 = min(int(np.ceil(max(ay, by) + pad)), height)
        if x0 >= x1 or y0 >= y1:
            continue
        gx, gy = np.meshgrid(np.arange(x0, x1) + 0.5, np.arange(y0, y1) + 0.5)
        dx, dy = bx - ax, by - ay
        seg2 = dx * dx + dy * dy
        if seg2 > 0:
            t = np.clip(((gx - ax) * dx + (gy - ay) * dy) / seg2, 0.0, 1.0)
        else:
            t = 0.0
        dist = np.hypot(gx - (ax + t * dx), gy - (ay + t * dy))
        c = np.clip(hw + 0.5 - dist, 0.0, 1.0)
        np.maximum(cover[y0:y1, x0:x1], c, out=cover[y0:y1, x0:x1])
    return 1.0 - depth * cover


def rasterize_aggregate(aggregate: Aggregate, width: int = REFERENCE_SIZE,
                        height: int = REFERENCE_SIZE, depth: float = VEIN_DEPTH,
                        stroke_scale: float = 1.0, offset=(0.0, 0.0), angle: float = 0.0,
                        zoom: float = 1.0) -> np.ndarray:
    """Thin the DLA cluster to its skeleton, then resample onto the ROI grid.

    The skeleton is drawn with a half-width of ``stroke_scale`` output pixels.
    ``offset`` moves the seed away from the ROI centre (fractions of the ROI,
    ``(row, col)``), ``angle`` rotates the cluster (radians) and ``zoom`` is
    the fraction of the lattice visible across the ROI.
    """
    if zoom <= 0:
        raise ValueError("zoom must be positive")
    skel = skeletonize(aggregate.grid)
    if not skel.any():
        return np.ones((height, width))
    n = aggregate.grid.shape[0]
    dist_cells = ndimage.distance_transform_edt(~skel)
    # output pixel centres -> lattice coordinates
    u = ((np.arange(height) + 0.5) / height - 0.5 - offset[0]) * n * zoom
    v = ((np.arange(width) + 0.5) / width - 0.5 - offset[1]) * n * zoom
    uu, vv = np.meshgrid(u, v, indexing="ij")
    c, s = np.cos(angle), np.sin(angle)
    rows = c * uu - s * vv + (n - 1) / 2.0
    cols = s * uu + c * vv + (n - 1) / 2.0
    far = float(2 * n)
    d = ndimage.map_coordinates(dist_cells, [rows, cols], order=1, mode="constant", cval=far)
    d *= width / (n * zoom)
    cover = np.clip(max(stroke_scale, 0.5) + 0.5 - d, 0.0, 1.0)
    return 1.0 - depth * cover


@dataclass
class EnhanceConfig:
    brightness_factor: float = 1.5
    blur_radius: int = 3
    blur_passes: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if not 1.2 <= self.brightness_factor <= 1.8:
            raise ValueError("brightness_factor must lie in [1.2, 1.8]")
        if not 3 <= self.blur_radius <= 5:
            raise ValueError("blur_radius must lie in [3, 5]")
        if self.blur_passes < 1:
            raise ValueError("blur_passes must be >= 1")

    @classmethod
    def draw(cls, rng_seed: int, blur_passes: int = 3) -> "EnhanceConfig":
        rng = np.random.default_rng(np.random.SeedSequence([rng_seed, 0]))
        return cls(
            brightness_factor=float(rng.uniform(1.2, 1.8)),
            blur_radius=int(rng.integers(3, 5, endpoint=True)),
            blur_passes=blur_passes,
            rng_seed=rng_seed,
        )


def box_blur(image: np.ndarray, radius: int, passes: int = 1) -> np.ndarray:
    out = np.asarray(image, dtype=float)
    for _ in range(passes):
        out = ndimage.uniform_filter(out, size=2 * radius + 1, mode="reflect")
    return out


def enhance(image: np.ndarray, config: EnhanceConfig) -> np.ndarray:
    """Brighten by a constant factor (clamped), then repeated box blur."""
    bright = np.clip(np.asarray(image, dtype=float) * config.brightness_factor, 0.0, 1.0)
    return np.clip(box_blur(bright, config.blur_radius, config.blur_passes), 0.0, 1.0)


def _smoothstep(t):
    return t * t * (3.0 - 2.0 * t)


def _value_noise(rng, width: int, height: int, cells: int) -> np.ndarray:
    lattice = rng.random((cells + 1, cells + 1))
    u = np.linspace(0, cells, width, endpoint=False) + 0.5 * cells / width
    v = np.linspace(0, cells, height, endpoint=False) + 0.5 * cells / height
    iu = np.minimum(u.astype(int), cells - 1)
    iv = np.minimum(v.astype(int), cells - 1)
    fu = _smoothstep(u - iu)[None, :]
    fv = _smoothstep(v - iv)[:, None]
    a = lattice[iv[:, None], iu[None, :]]
    b = lattice[iv[:, None], iu[None, :] + 1]
    c = lattice[iv[:, None] + 1, iu[None, :]]
    d = lattice[iv[:, None] + 1, iu[None, :] + 1]
    top = a + (b - a) * fu
    bottom = c + (d - c) * fu
    return top + (bottom - top) * fv


def gen_texture(width: int = REFERENCE_SIZE, height: int = REFERENCE_SIZE, rng_seed: int = 0,
                octaves: int = 5, n_creases: int = 4) -> np.ndarray:
    """Procedural palm skin: multi-octave value noise plus faint crease lines.

    Mean intensity stays inside [0.55, 0.8].
    """
    rng = np.random.default_rng(np.random.SeedSequence([rng_seed, 7]))
    noise = np.zeros((height, width))
    total = 0.0
    for k in range(octaves):
        amp = 0.55**k
        noise += amp * _value_noise(rng, width, height, 3 * 2**k)
        total += amp
    noise /= total
    noise = (noise - noise.mean()) / (noise.std() + 1e-12)
    tex = 0.68 + 0.035 * np.clip(noise, -3.0, 3.0)

    # creases: gently curved lines, mostly running diagonally across the palm
    gy, gx = np.mgrid[0:height, 0:width] + 0.5
    crease = np.zeros_like(tex)
    base = rng.uniform(0, np.pi)
    for _ in range(n_creases):
        angle = base + rng.normal(scale=0.35)
        nx, ny = -np.sin(angle), np.cos(angle)
        offset = rng.uniform(-0.35, 0.35) * min(width, height)
        bend = rng.uniform(-1.5, 1.5) / max(width, height)
        cx, cy = width / 2, height / 2
        along = (gx - cx) * np.cos(angle) + (gy - cy) * np.sin(angle)
        across = (gx - cx) * nx + (gy - cy) * ny - offset - bend * along**2
        crease = np.maximum(crease, np.exp(-0.5 * (across / rng.uniform(0.8, 1.6)) ** 2) * rng.uniform(0.012, 0.025))
    tex = tex - crease
    return np.clip(tex, 0.0, 1.0)


def blend(vein_image: np.ndarray, texture: np.ndarray) -> np.ndarray:
    """Multiplicative blend: veins act as absorption shadows over the skin."""
    vein_image = np.asarray(vein_image, dtype=float)
    texture = np.asarray(texture, dtype=float)
    if vein_image.shape != texture.shape:
        raise ValueError(f"shape mismatch: {vein_image.shape} vs {texture.shape}")
    return np.clip(vein_image * texture, 0.0, 1.0)


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(image: np.ndarray, path) -> None:
    """Write 8-bit grayscale; the format follows the suffix (.png or .pgm)."""
    path = Path(path)
    fmt = "PPM" if path.suffix.lower() in (".pgm", ".pnm") else "PNG"
    Image.fromarray(to_uint8(image)).save(path, format=fmt)


def load_image(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=float)
    return arr / 255.0
