"""Synthetic palm-vein ROI databases from nature-inspired vascular growth models."""

__version__ = "0.1.0"

from .colonization import ColonizationConfig, run_colonization
from .dla import Aggregate, DlaConfig, run_dla
from .network import VeinNetwork, VeinTree
from .physarum import DisconnectedNetworkError, PhysarumConfig, run_physarum
from .pipeline import (
    AugmentConfig,
    Dataset,
    GeneratorExhaustedError,
    generate_database,
    iud_check,
    roi_augment,
    similarity_score,
    vsa_augment,
)
from .raster import EnhanceConfig, blend, enhance, gen_texture, rasterize
from .vig import GENERATORS, generate_vein_image

__all__ = [
    "__version__",
    "ColonizationConfig", "run_colonization",
    "Aggregate", "DlaConfig", "run_dla",
    "VeinNetwork", "VeinTree",
    "DisconnectedNetworkError", "PhysarumConfig", "run_physarum",
    "AugmentConfig", "Dataset", "GeneratorExhaustedError", "generate_database", "iud_check",
    "roi_augment", "similarity_score", "vsa_augment",
    "EnhanceConfig", "blend", "enhance", "gen_texture", "rasterize",
    "GENERATORS", "generate_vein_image",
]
