"""Exactly invertible latent codec.

Space-to-depth by a factor f (each f x f pixel block becomes f*f
consecutive channels, block rows first) followed by a fixed orthonormal
channel mix.  Linear, energy preserving, and local per block, so every
latent-space statement has an exact pixel-space interpretation.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from genmatte.errors import ConfigError, ShapeError
from genmatte.tensor import SeededRng, Tensor3


def space_to_depth(x: Tensor3, f: int) -> Tensor3:
    c, h, w = x.shape
    if h % f or w % f:
        raise ShapeError(f"dims {h}x{w} not divisible by f={f}")
    blocks = x.reshape(c, h // f, f, w // f, f)
    return np.ascontiguousarray(blocks.transpose(0, 2, 4, 1, 3).reshape(c * f * f, h // f, w // f))


def depth_to_space(z: Tensor3, f: int) -> Tensor3:
    cf, h, w = z.shape
    if cf % (f * f):
        raise ShapeError(f"channel count {cf} is not a multiple of f^2={f * f}")
    c = cf // (f * f)
    return np.ascontiguousarray(
        z.reshape(c, f, f, h, w).transpose(0, 3, 1, 4, 2).reshape(c, h * f, w * f)
    )


@dataclass(frozen=True)
class LatentCodec:
    """Invertible codec for a fixed input channel count.

    mix_seed None means the identity mix; otherwise the mixing matrix is
    the QR orthonormalization of a seeded Gaussian matrix (sign-fixed so
    the same seed always gives the same matrix).
    """

    f: int = 8
    channels: int = 1
    mix_seed: int | None = None

    def __post_init__(self):
        if self.f < 1:
            raise ConfigError(f"downsample factor must be >= 1, got {self.f}")
        if self.channels < 1:
            raise ConfigError(f"channel count must be >= 1, got {self.channels}")

    @property
    def latent_channels(self) -> int:
        return self.channels * self.f * self.f

    @cached_property
    def mix(self) -> np.ndarray:
        d = self.latent_channels
        if self.mix_seed is None:
            return np.eye(d)
        rng = SeededRng(self.mix_seed)
        a = rng.normals(d * d).reshape(d, d)
        q, r = np.linalg.qr(a)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        return np.ascontiguousarray(q * signs[None, :])


def encode(img: Tensor3, codec: LatentCodec) -> Tensor3:
    """Pixel grid -> latent: space-to-depth then the orthonormal mix."""
    if img.ndim != 3 or img.shape[0] != codec.channels:
        raise ShapeError(
            f"expected ({codec.channels},H,W) input, got shape {tuple(img.shape)}"
        )
    s = space_to_depth(np.asarray(img, dtype=np.float64), codec.f)
    if codec.mix_seed is None:
        return s
    return np.ascontiguousarray(np.tensordot(codec.mix, s, axes=(1, 0)))


def decode(z: Tensor3, codec: LatentCodec) -> Tensor3:
    """Latent -> pixel grid: inverse mix then depth-to-space."""
    if z.ndim != 3 or z.shape[0] != codec.latent_channels:
        raise ShapeError(
            f"expected ({codec.latent_channels},h,w) latent, got shape {tuple(z.shape)}"
        )
    if codec.mix_seed is None:
        mixed = np.asarray(z, dtype=np.float64)
    else:
        mixed = np.tensordot(codec.mix.T, np.asarray(z, dtype=np.float64), axes=(1, 0))
    return depth_to_space(np.ascontiguousarray(mixed), codec.f)
