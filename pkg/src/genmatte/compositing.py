"""Alpha compositing: C = alpha * F + (1 - alpha) * B."""

import numpy as np

from genmatte.errors import ShapeError
from genmatte.tensor import Tensor3


def image_buffer(values) -> Tensor3:
    """Pixel buffer in [0, 1]: 1 or 3 channels, clamped on construction."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3 or a.shape[0] not in (1, 3):
        raise ShapeError(f"image buffer must be (1|3,H,W), got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeError("image buffer contains non-finite values")
    return np.clip(a, 0.0, 1.0)


def _broadcast_alpha(alpha: Tensor3, channels: int) -> np.ndarray:
    a = np.asarray(alpha, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
    if a.shape[0] != 1:
        raise ShapeError(f"alpha must be single channel, got shape {a.shape}")
    return np.broadcast_to(a, (channels,) + a.shape[1:])


def composite(alpha: Tensor3, fg: Tensor3, bg: Tensor3) -> Tensor3:
    """Per-pixel alpha blend of foreground over background."""
    if fg.shape != bg.shape:
        raise ShapeError(f"fg shape {fg.shape} != bg shape {bg.shape}")
    a = _broadcast_alpha(alpha, fg.shape[0])
    if a.shape[1:] != fg.shape[1:]:
        raise ShapeError(f"alpha dims {a.shape[1:]} != image dims {fg.shape[1:]}")
    return a * fg + (1.0 - a) * bg


def residual(c: Tensor3, alpha: Tensor3, fg: Tensor3, bg: Tensor3) -> float:
    """Mean absolute deviation of C from the composition of (alpha, F, B)."""
    if c.shape != fg.shape:
        raise ShapeError(f"C shape {c.shape} != fg shape {fg.shape}")
    return float(np.mean(np.abs(c - composite(alpha, fg, bg))))
