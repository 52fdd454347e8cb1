"""genmatte: diffusion-based alpha matting.

Low-resolution ensemble sampling plus uncertainty-driven
high-resolution patch refinement around a pluggable denoiser interface,
with analytic oracle denoisers, a toy trainable model, matting metrics,
a CLI and an HTTP service.
"""

from genmatte.backend import active_backend
from genmatte.codec import LatentCodec, decode, encode
from genmatte.config import EngineConfig, load_config
from genmatte.denoiser import (DenoiserInput, GaussianOracle, ProceduralOracle,
                               TextEmbedder, ToyMlpDenoiser, extend_conditional)
from genmatte.engine import MattingEngine
from genmatte.hires import HiresParams, matte_hr
from genmatte.metrics import MetricReport, evaluate
from genmatte.sampler import GuidanceLatent, SamplerConfig, ancestral_step, sample
from genmatte.schedule import DiffusionSchedule, make_schedule, q_sample
from genmatte.tensor import PatchBox, SeededRng, crop, derive_seed, randn, uncrop

__version__ = "0.1.0"

__all__ = [
    "active_backend",
    "LatentCodec", "decode", "encode",
    "EngineConfig", "load_config",
    "DenoiserInput", "GaussianOracle", "ProceduralOracle", "TextEmbedder",
    "ToyMlpDenoiser", "extend_conditional",
    "MattingEngine",
    "HiresParams", "matte_hr",
    "MetricReport", "evaluate",
    "GuidanceLatent", "SamplerConfig", "ancestral_step", "sample",
    "DiffusionSchedule", "make_schedule", "q_sample",
    "PatchBox", "SeededRng", "crop", "derive_seed", "randn", "uncrop",
]
