"""Matting error metrics and the randomness-vs-steps analysis.

SAD is reported both as the raw absolute sum and divided by 1000 (the
convention used by matting benchmarks); MSE and MAD are scaled by 10^3.
Connectivity follows the de-facto reference procedure: thresholded
joint largest components with 4-connectivity, theta step 0.1 and a phi
threshold of 0.15.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from genmatte import codec as codec_mod
from genmatte import sampler as sampler_mod
from genmatte.denoiser import Denoiser
from genmatte.errors import ConfigError, ShapeError
from genmatte.schedule import DiffusionSchedule
from genmatte.tensor import SeededRng, Tensor3, derive_seed

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class MetricReport:
    sad: float          # raw absolute sum
    sad_scaled: float   # raw / 1000, the benchmark convention
    mse: float          # mean squared error * 10^3
    mad: float          # mean absolute difference * 10^3
    conn: float

    def to_dict(self) -> dict:
        return {
            "sad": self.sad,
            "sad_scaled": self.sad_scaled,
            "mse": self.mse,
            "mad": self.mad,
            "conn": self.conn,
        }


def _as_single_channel(a: Tensor3) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 3:
        if a.shape[0] != 1:
            raise ShapeError(f"matte must be single channel, got {a.shape}")
        a = a[0]
    if a.ndim != 2:
        raise ShapeError(f"matte must be a 2-D grid, got shape {a.shape}")
    return a


def evaluate(pred: Tensor3, gt: Tensor3) -> MetricReport:
    """Whole-image SAD / MSE / MAD / Conn between two mattes in [0, 1]."""
    p = _as_single_channel(pred)
    g = _as_single_channel(gt)
    if p.shape != g.shape:
        raise ShapeError(f"matte shapes differ: {p.shape} vs {g.shape}")
    diff = p - g
    sad = float(np.abs(diff).sum())
    mse = float(np.mean(diff * diff) * 1e3)
    mad = float(np.mean(np.abs(diff)) * 1e3)
    return MetricReport(sad=sad, sad_scaled=sad / 1000.0, mse=mse, mad=mad,
                        conn=connectivity(p, g))


def _largest_component(mask: np.ndarray) -> np.ndarray:
    labels, n = ndimage.label(mask, structure=_FOUR_CONN)
    if n == 0:
        return np.zeros_like(mask, dtype=bool)
    counts = np.bincount(labels.reshape(-1))
    counts[0] = 0
    return labels == int(np.argmax(counts))


def connectivity(pred, gt, theta_step: float = 0.1, phi_threshold: float = 0.15) -> float:
    """Connectivity error between two mattes.

    For each threshold theta, Omega_theta is the largest 4-connected
    component of {pred >= theta and gt >= theta}; per pixel l is the
    largest theta whose component contains it (0 if none).  phi(value)
    is 1 - (value - l) when value - l >= phi_threshold, else 1; the
    metric is sum |phi(pred) - phi(gt)| / 1000.
    """
    if not 0.0 < theta_step < 1.0:
        raise ConfigError(f"theta_step must lie in (0, 1), got {theta_step}")
    p = _as_single_channel(pred)
    g = _as_single_channel(gt)
    if p.shape != g.shape:
        raise ShapeError(f"matte shapes differ: {p.shape} vs {g.shape}")
    l_map = np.zeros_like(p)
    n_levels = int(np.floor(1.0 / theta_step + 1e-9))
    for k in range(1, n_levels + 1):
        theta = k * theta_step
        omega = _largest_component((p >= theta) & (g >= theta))
        l_map[omega] = theta
    def phi(values):
        d = values - l_map
        return np.where(d >= phi_threshold, 1.0 - d, 1.0)
    return float(np.abs(phi(p) - phi(g)).sum() / 1000.0)


def randomness_curve(image: Tensor3, denoiser: Denoiser,
                     matte_codec: codec_mod.LatentCodec,
                     image_codec: codec_mod.LatentCodec,
                     schedule: DiffusionSchedule, step_list, n_seeds: int,
                     gt: Tensor3, base_seed: int = 0, eta: float = 1.0):
    """Mean and population std of SAD vs ground truth per step count.

    Runs the sampler n_seeds times per entry of step_list and returns
    rows of (steps, mean_sad, std_sad).  The spread over seeds is the
    stochasticity figure the step count is traded against.
    """
    if n_seeds < 2:
        raise ConfigError(f"n_seeds must be >= 2, got {n_seeds}")
    if not step_list:
        raise ConfigError("step_list must be non-empty")
    cond = codec_mod.encode(image, image_codec)
    latent_shape = (matte_codec.latent_channels, cond.shape[1], cond.shape[2])
    gt2 = _as_single_channel(gt)
    rows = []
    for steps in step_list:
        cfg = sampler_mod.SamplerConfig.create(schedule.T, steps=steps, eta=eta)
        sads = []
        for s in range(n_seeds):
            rng = SeededRng(derive_seed(base_seed, steps * 100_003 + s))
            z0 = sampler_mod.sample(denoiser, cond, cfg, schedule, rng,
                                    latent_shape=latent_shape)
            matte = np.clip(codec_mod.decode(z0, matte_codec)[0], 0.0, 1.0)
            sads.append(float(np.abs(matte - gt2).sum()))
        sads = np.asarray(sads)
        rows.append((int(steps), float(sads.mean()), float(sads.std())))
    return rows


def format_report_table(reports: dict) -> str:
    """Aligned-column text table for one or more named metric reports."""
    headers = ["name", "SAD", "SAD(raw)", "MSE(x1e3)", "MAD(x1e3)", "Conn"]
    rows = [
        [name, f"{r.sad_scaled:.4f}", f"{r.sad:.3f}", f"{r.mse:.3f}",
         f"{r.mad:.3f}", f"{r.conn:.4f}"]
        for name, r in reports.items()
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)
