"""Ancestral sampling with guidance-aware initialization.

The reverse update is the eta-parameterized family: eta=1 matches
stochastic ancestral sampling, eta=0 is the deterministic limit.  When
eta > 0 and the denoiser exposes an exact z0 posterior std (the
analytic oracles do), each step draws z0 from that posterior instead of
collapsing it to the mean; this keeps strided sampling distributionally
exact instead of variance-starved.  Trained denoisers have no such
closed form and step from the point estimate.
"""

from dataclasses import dataclass

import numpy as np

from genmatte import backend
from genmatte.denoiser import Denoiser, DenoiserInput
from genmatte.errors import ConfigError, ShapeError, StepError
from genmatte.schedule import DiffusionSchedule
from genmatte.tensor import SeededRng, Tensor3, randn

GUIDANCE_MODES = ("literal", "normalized")


def default_step_indices(T: int, steps: int) -> tuple:
    """Evenly strided step subset from T down to 1, endpoints included."""
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    if steps > T:
        raise ConfigError(f"steps={steps} exceeds schedule length T={T}")
    if steps == 1:
        return (1,)
    idx = np.unique(np.round(np.linspace(T, 1, steps)).astype(int))[::-1]
    return tuple(int(i) for i in idx)


@dataclass(frozen=True)
class SamplerConfig:
    """Inference-time sampling parameters."""

    step_indices: tuple
    eta: float = 1.0
    guidance_mode: str = "normalized"

    def __post_init__(self):
        idx = tuple(int(i) for i in self.step_indices)
        if not idx:
            raise ConfigError("step_indices must be non-empty")
        if idx[-1] != 1:
            raise ConfigError("step_indices must end at 1")
        if any(a <= b for a, b in zip(idx, idx[1:])):
            raise ConfigError("step_indices must be strictly decreasing")
        if idx[0] < 1:
            raise ConfigError("step indices must be >= 1")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        if self.guidance_mode not in GUIDANCE_MODES:
            raise ConfigError(f"guidance_mode must be one of {GUIDANCE_MODES}")
        object.__setattr__(self, "step_indices", idx)

    @property
    def steps(self) -> int:
        return len(self.step_indices)

    @classmethod
    def create(cls, T: int, steps: int = 10, eta: float = 1.0,
               guidance_mode: str = "normalized") -> "SamplerConfig":
        return cls(default_step_indices(T, steps), eta, guidance_mode)


@dataclass(frozen=True)
class GuidanceLatent:
    """Latent-space guide plus the mask of unknown latent sites (1 = unknown)."""

    g: Tensor3
    m_unknown: Tensor3

    def __post_init__(self):
        if self.g.shape[1:] != self.m_unknown.shape[1:]:
            raise ShapeError(
                f"guide {self.g.shape} and mask {self.m_unknown.shape} spatial dims differ"
            )
        if np.any(self.m_unknown < 0) or np.any(self.m_unknown > 1):
            raise ShapeError("m_unknown values must lie in [0, 1]")
        fully_unknown = self.m_unknown[0] >= 1.0
        if np.any(np.abs(self.g[:, fully_unknown]) > 0):
            raise ShapeError("guide must be zero on fully unknown sites")


def init_state(cfg: SamplerConfig, schedule: DiffusionSchedule,
               guide: GuidanceLatent | None, rng: SeededRng,
               shape=None) -> Tensor3:
    """Initial noisy latent for the reverse process.

    Without a guide this is a pure standard-normal field.  With a guide
    g and noise eps at signal level ab = alpha_bar(first step):

      literal:    sqrt((1-ab)/ab) * eps + (1-m) * g
      normalized: sqrt(1-ab) * eps + sqrt(ab) * (1-m) * g

    normalized is exactly sqrt(ab) times literal and matches the scale
    of a forward-noised training sample; literal is kept behind the
    mode flag.
    """
    ab = schedule.alpha_bar(cfg.step_indices[0])
    if guide is None:
        if shape is None:
            raise ShapeError("latent shape required when sampling without a guide")
        return randn(rng, shape)
    if shape is not None and tuple(shape) != guide.g.shape:
        raise ShapeError(f"shape {shape} conflicts with guide shape {guide.g.shape}")
    eps = randn(rng, guide.g.shape)
    masked = (1.0 - np.broadcast_to(guide.m_unknown, guide.g.shape)) * guide.g
    return guided_init(eps, masked, ab, cfg.guidance_mode)


def guided_init(eps: Tensor3, masked_guide: Tensor3, ab: float, mode: str) -> Tensor3:
    """Combine a noise field with a masked latent guide at signal level ab."""
    if mode == "literal":
        return backend.lincomb(np.sqrt((1.0 - ab) / ab), eps, 1.0, masked_guide)
    if mode == "normalized":
        return backend.lincomb(np.sqrt(1.0 - ab), eps, np.sqrt(ab), masked_guide)
    raise ConfigError(f"guidance_mode must be one of {GUIDANCE_MODES}")


def implied_z0(z_t: Tensor3, eps_hat: Tensor3, ab: float) -> Tensor3:
    """Clean-latent estimate (z_t - sqrt(1-ab) eps_hat) / sqrt(ab)."""
    inv = 1.0 / np.sqrt(ab)
    return backend.lincomb(inv, z_t, -np.sqrt(1.0 - ab) * inv, eps_hat)


def ancestral_step(z_t: Tensor3, t_cur: int, t_prev: int, eps_hat: Tensor3,
                   schedule: DiffusionSchedule, eta: float, rng: SeededRng,
                   noise: Tensor3 | None = None) -> Tensor3:
    """One reverse transition from step t_cur to t_prev (0 returns z0-hat).

    The stochastic term draws from rng unless a pre-drawn noise tensor
    is supplied (the patch pipeline passes crops of shared fields).
    """
    if not (t_cur > t_prev >= 0):
        raise StepError(f"need t_cur > t_prev >= 0, got {t_cur} -> {t_prev}")
    if z_t.shape != eps_hat.shape:
        raise ShapeError(f"z_t shape {z_t.shape} != eps_hat shape {eps_hat.shape}")
    ab_c = schedule.alpha_bar(t_cur)
    z0 = implied_z0(z_t, eps_hat, ab_c)
    if t_prev == 0:
        return z0
    ab_p = schedule.alpha_bar(t_prev)
    v = (eta * eta) * (1.0 - ab_p) / (1.0 - ab_c) * (1.0 - ab_c / ab_p)
    v = min(max(v, 0.0), 1.0 - ab_p)
    coef_eps = np.sqrt(1.0 - ab_p - v)
    if v > 0.0:
        if noise is None:
            noise = randn(rng, z_t.shape)
        return backend.lincomb3(np.sqrt(ab_p), z0, coef_eps, eps_hat, np.sqrt(v), noise)
    return backend.lincomb(np.sqrt(ab_p), z0, coef_eps, eps_hat)


def _predict(denoiser: Denoiser, state: Tensor3, cond, t: int, text,
             eta: float, rng: SeededRng, ab: float) -> Tensor3:
    """Noise prediction, with the posterior-sampling completion for oracles."""
    eps_hat = denoiser.predict_eps(DenoiserInput(state, cond, t, text))
    if eta > 0.0:
        std = denoiser.z0_posterior_std(t)
        if std is not None and std > 0.0:
            z0_draw = implied_z0(state, eps_hat, ab) + std * randn(rng, state.shape)
            inv = 1.0 / np.sqrt(1.0 - ab)
            eps_hat = backend.lincomb(inv, state, -np.sqrt(ab) * inv, z0_draw)
    return eps_hat


def sample(denoiser: Denoiser, cond_latent: Tensor3 | None, cfg: SamplerConfig,
           schedule: DiffusionSchedule, rng: SeededRng,
           guide: GuidanceLatent | None = None, text: np.ndarray | None = None,
           latent_shape=None) -> Tensor3:
    """Full reverse process; returns the final clean-latent estimate.

    Pure function of (denoiser, cond, guide, text, cfg, schedule, rng
    seed).  Per transition the rng is consumed in a fixed order:
    posterior draw (oracles, eta > 0 only), then step noise (v > 0
    only); the initial field is drawn first of all.
    """
    state = init_state(cfg, schedule, guide, rng, shape=latent_shape)
    if cond_latent is not None and cond_latent.shape[1:] != state.shape[1:]:
        raise ShapeError(
            f"conditioning spatial dims {cond_latent.shape[1:]} != latent {state.shape[1:]}"
        )
    idx = cfg.step_indices
    for i, t_cur in enumerate(idx):
        t_prev = idx[i + 1] if i + 1 < len(idx) else 0
        ab = schedule.alpha_bar(t_cur)
        eps_hat = _predict(denoiser, state, cond_latent, t_cur, text, cfg.eta, rng, ab)
        state = ancestral_step(state, t_cur, t_prev, eps_hat, schedule, cfg.eta, rng)
    return state
