"""Variance schedule and the forward noising process."""

from dataclasses import dataclass, field

import numpy as np

from genmatte import backend
from genmatte.errors import ConfigError, ShapeError, StepError
from genmatte.tensor import Tensor3


@dataclass(frozen=True)
class DiffusionSchedule:
    """Per-step variances beta_t and cumulative signal coefficients.

    alpha_bars[t-1] = prod_{s<=t} (1 - beta_s); strictly decreasing,
    each in (0, 1).  Step indices are 1-based everywhere.
    """

    betas: np.ndarray
    alpha_bars: np.ndarray = field(init=False)

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size < 1:
            raise ConfigError("betas must be a non-empty 1-D array")
        if np.any(betas <= 0.0) or np.any(betas >= 1.0):
            raise ConfigError("every beta must lie strictly inside (0, 1)")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alpha_bars", np.cumprod(1.0 - betas))

    @property
    def T(self) -> int:
        return int(self.betas.size)

    def alpha_bar(self, t: int) -> float:
        """Cumulative signal coefficient at step t (1-based); 1.0 at t=0."""
        if t == 0:
            return 1.0
        if not 1 <= t <= self.T:
            raise StepError(f"step {t} outside [1, {self.T}]")
        return float(self.alpha_bars[t - 1])


def make_schedule(T: int, beta_start: float, beta_end: float, kind: str = "linear") -> DiffusionSchedule:
    """Linear variance schedule inclusive of both endpoints."""
    if kind != "linear":
        raise ConfigError(f"unsupported schedule kind {kind!r}")
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ConfigError(
            f"betas must satisfy 0 < start <= end < 1, got [{beta_start}, {beta_end}]"
        )
    if T == 1:
        betas = np.array([beta_start], dtype=np.float64)
    else:
        betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    return DiffusionSchedule(betas)


def q_sample(z0: Tensor3, t: int, eps: Tensor3, s: DiffusionSchedule) -> Tensor3:
    """Noised latent sqrt(ab_t) * z0 + sqrt(1 - ab_t) * eps."""
    if z0.shape != eps.shape:
        raise ShapeError(f"z0 shape {z0.shape} != eps shape {eps.shape}")
    if not 1 <= t <= s.T:
        raise StepError(f"step {t} outside [1, {s.T}]")
    ab = s.alpha_bar(t)
    return backend.lincomb(np.sqrt(ab), z0, np.sqrt(1.0 - ab), eps)
