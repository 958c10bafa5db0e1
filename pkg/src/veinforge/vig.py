"""Vein image generators: network growth -> strokes -> enhancement -> texture blend."""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from .colonization import ColonizationConfig, run_colonization
from .dla import DlaConfig, run_dla
from .physarum import PhysarumConfig, run_physarum
from .raster import EnhanceConfig, blend, enhance, gen_texture, rasterize

GENERATORS = ("physarum", "colonization", "dla")

# stroke thickening per generator so veins survive the enhancement blur
STROKE_SCALE = {"physarum": 1.6, "colonization": 2.5, "dla": 2.5}

# Physarum settings for image generation: a coarser mesh and a faster time
# step contract the mesh into a few distinct veins within the 350-700 step
# budget; the library defaults keep most of the mesh alive at this scale.
PHYSARUM_PROFILE = {"node_count": 60, "dt": 0.1, "total_flux": 5.0}

# DLA clusters all radiate from the lattice centre; a random placement per
# subject stops the dense cores of unrelated subjects from lining up.
DLA_OFFSET = 0.35
DLA_ZOOM = 0.7


def _dla_placement(seed: int) -> dict:
    rng = np.random.default_rng(_sub_seed(seed, 4))
    offset = rng.uniform(-DLA_OFFSET, DLA_OFFSET, size=2)
    return {"offset": [float(offset[0]), float(offset[1])],
            "angle": float(rng.uniform(0.0, 2.0 * np.pi)), "zoom": DLA_ZOOM}


def _sub_seed(seed: int, stream: int) -> int:
    ss = np.random.SeedSequence([int(seed), stream])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generate_pattern(kind: str, seed: int):
    """Grow one vein structure; returns ``(structure, config)``."""
    s = _sub_seed(seed, 1)
    if kind == "physarum":
        cfg = PhysarumConfig(rng_seed=s, **PHYSARUM_PROFILE)
        cfg.iterations = cfg.resolved_iterations()
        return run_physarum(cfg), cfg
    if kind == "colonization":
        cfg = ColonizationConfig(rng_seed=s)
        return run_colonization(cfg), cfg
    if kind == "dla":
        cfg = DlaConfig(rng_seed=s)
        return run_dla(cfg), cfg
    raise ValueError(f"unknown generator {kind!r}; choose from {', '.join(GENERATORS)}")


def generate_vein_image(kind: str, seed: int, size: int = 128) -> tuple[np.ndarray, dict]:
    """Full VIG pass for one candidate subject.

    Returns the blended ROI image and a JSON-ready provenance record that is
    enough to regenerate it.
    """
    structure, cfg = generate_pattern(kind, seed)
    placement = _dla_placement(seed) if kind == "dla" else {}
    strokes = rasterize(structure, size, size, stroke_scale=STROKE_SCALE[kind], **placement)
    enh_cfg = EnhanceConfig.draw(_sub_seed(seed, 2))
    texture_seed = _sub_seed(seed, 3)
    image = blend(enhance(strokes, enh_cfg), gen_texture(size, size, texture_seed))
    provenance = {
        "generator": kind,
        "seed": int(seed),
        "size": int(size),
        "pattern": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()},
        "enhance": asdict(enh_cfg),
        "texture_seed": texture_seed,
        "stroke_scale": STROKE_SCALE[kind],
    }
    if placement:
        provenance["placement"] = placement
    return image, provenance
