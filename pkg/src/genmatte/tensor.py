"""Dense grid type, seeded randomness, and crop/uncrop.

A "Tensor3" throughout the codebase is a C-contiguous float64 numpy
array of shape (channels, height, width): channel-major, row-major
within each channel.  Images, latents, noise fields, masks and
uncertainty maps are all carried this way.
"""

from dataclasses import dataclass

import numpy as np

from genmatte import backend
from genmatte.errors import BoundsError, ShapeError

Tensor3 = np.ndarray

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64_int(x: int) -> int:
    x &= _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def derive_seed(parent_seed: int, index: int) -> int:
    """Split a seed into the index-th child seed.

    child = mix64(parent XOR mix64((index+1) * GOLDEN)).  Parallel
    consumers (ensemble members, per-step noise fields) must derive
    their streams through this rather than sharing one SeededRng.
    """
    return _mix64_int((parent_seed & _MASK64) ^ _mix64_int(((index + 1) * _GOLDEN) & _MASK64))


class SeededRng:
    """Deterministic counter-based random stream.

    Draw k of the stream owns the raw splitmix64 counter pair
    (2k, 2k+1); see genmatte._kernels_py for the exact constants and
    the Box-Muller transform.  The position advances by the number of
    elements drawn, so identical (seed, call sequence) reproduces
    identical values on any platform with the same backend.  randn
    fills tensors in flat C order: channel-major, row-major within a
    channel.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self.pos = 0

    def normals(self, n: int) -> np.ndarray:
        if n < 1:
            raise ShapeError(f"cannot draw {n} normals")
        out = backend.normal_fill(self.seed, self.pos, n)
        self.pos += n
        return out

    def uniforms(self, n: int) -> np.ndarray:
        if n < 1:
            raise ShapeError(f"cannot draw {n} uniforms")
        out = backend.uniform_fill(self.seed, self.pos, n)
        self.pos += n
        return out

    def randint(self, low: int, high: int, n: int = 1) -> np.ndarray:
        """Uniform integers in [low, high)."""
        if high <= low:
            raise ShapeError(f"empty integer range [{low}, {high})")
        u = self.uniforms(n)
        return (low + np.floor(u * (high - low))).astype(np.int64)

    def child(self, index: int) -> "SeededRng":
        return SeededRng(derive_seed(self.seed, index))


def randn(rng: SeededRng, shape) -> Tensor3:
    """Tensor of i.i.d. standard normals drawn in flat C order."""
    shape = tuple(int(s) for s in shape)
    if len(shape) == 0 or any(s < 1 for s in shape):
        raise ShapeError(f"invalid shape {shape}: all dims must be >= 1")
    n = int(np.prod(shape))
    return rng.normals(n).reshape(shape)


@dataclass(frozen=True)
class PatchBox:
    """Latent-space rectangle: origin (x, y), extent (w, h)."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ShapeError(f"box extent must be >= 1, got {self.w}x{self.h}")

    def check_inside(self, height: int, width: int) -> None:
        if self.x < 0 or self.y < 0 or self.x + self.w > width or self.y + self.h > height:
            raise BoundsError(
                f"box (x={self.x}, y={self.y}, w={self.w}, h={self.h}) "
                f"outside {height}x{width} canvas"
            )

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}


def crop(z: Tensor3, b: PatchBox) -> Tensor3:
    """The (b.h x b.w) window of every channel at (b.x, b.y)."""
    if z.ndim != 3:
        raise ShapeError(f"expected (C,H,W) tensor, got shape {z.shape}")
    b.check_inside(z.shape[1], z.shape[2])
    return np.ascontiguousarray(z[:, b.y : b.y + b.h, b.x : b.x + b.w])


def uncrop(p: Tensor3, b: PatchBox, canvas_hw) -> Tensor3:
    """Canvas-sized tensor with p placed at b and zeros elsewhere."""
    h, w = canvas_hw
    if p.ndim != 3 or p.shape[1] != b.h or p.shape[2] != b.w:
        raise ShapeError(f"patch shape {p.shape} does not match box {b.h}x{b.w}")
    b.check_inside(h, w)
    out = np.zeros((p.shape[0], h, w), dtype=np.float64)
    out[:, b.y : b.y + b.h, b.x : b.x + b.w] = p
    return out


def _axis_lin_weights(n_src: int, n_dst: int):
    # center-aligned mapping: src = (dst + 0.5) * (n_src / n_dst) - 0.5
    pos = (np.arange(n_dst, dtype=np.float64) + 0.5) * (n_src / n_dst) - 0.5
    lo = np.clip(np.floor(pos).astype(np.int64), 0, n_src - 1)
    hi = np.minimum(lo + 1, n_src - 1)
    frac = np.clip(pos - lo, 0.0, 1.0)
    return lo, hi, frac


def resize_bilinear(t: Tensor3, out_hw) -> Tensor3:
    """Separable bilinear resize of every channel (center-aligned grid)."""
    if t.ndim != 3:
        raise ShapeError(f"expected (C,H,W) tensor, got shape {t.shape}")
    h2, w2 = int(out_hw[0]), int(out_hw[1])
    if h2 < 1 or w2 < 1:
        raise ShapeError(f"invalid target size {out_hw}")
    ylo, yhi, yf = _axis_lin_weights(t.shape[1], h2)
    rows = t[:, ylo, :] * (1.0 - yf)[None, :, None] + t[:, yhi, :] * yf[None, :, None]
    xlo, xhi, xf = _axis_lin_weights(t.shape[2], w2)
    out = rows[:, :, xlo] * (1.0 - xf)[None, None, :] + rows[:, :, xhi] * xf[None, None, :]
    return np.ascontiguousarray(out)


def resize_nearest(t: Tensor3, out_hw) -> Tensor3:
    """Nearest-neighbour resize; keeps label images label-valued."""
    if t.ndim != 3:
        raise ShapeError(f"expected (C,H,W) tensor, got shape {t.shape}")
    h2, w2 = int(out_hw[0]), int(out_hw[1])
    ys = np.clip(((np.arange(h2) + 0.5) * (t.shape[1] / h2)).astype(np.int64), 0, t.shape[1] - 1)
    xs = np.clip(((np.arange(w2) + 0.5) * (t.shape[2] / w2)).astype(np.int64), 0, t.shape[2] - 1)
    return np.ascontiguousarray(t[:, ys][:, :, xs])
