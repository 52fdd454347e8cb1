"""Pure-numpy implementations of the hot kernels.

This is the fallback twin of the compiled module ``genmatte._kernels``;
both expose the same functions with the same semantics.  The random
stream is counter-based so that any sub-range of draws can be produced
independently of the rest:

* raw counter ``i`` yields ``mix64(seed + i * GOLDEN)`` where ``mix64``
  is the splitmix64 finalizer (constants below) and ``GOLDEN`` is the
  64-bit golden-ratio increment ``0x9E3779B97F4A7C15``;
* draw ``k`` of a stream owns the raw counter pair ``(2k, 2k+1)``:
  a uniform consumes the first counter only, a standard normal consumes
  both via the Box-Muller cosine branch
  ``sqrt(-2 ln u1) * cos(2 pi u2)`` with ``u1 in (0,1]``, ``u2 in [0,1)``.

Integer and uniform outputs are bit-identical between the two backends;
normals agree up to libm rounding of log/cos (a few ulps).
"""

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1


def _mix64(x):
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= np.uint64(_MIX1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_MIX2)
    x ^= x >> np.uint64(31)
    return x


def raw_uint64(seed, start, n):
    """Raw counter outputs mix64(seed + i*GOLDEN) for i in [start, start+n)."""
    idx = np.arange(start, start + n, dtype=np.uint64)
    return _mix64(np.uint64(seed & _MASK64) + idx * np.uint64(GOLDEN))


def uniform_fill(seed, start, n):
    """Uniforms in [0, 1); draw k consumes raw counter 2k."""
    k = np.arange(start, start + n, dtype=np.uint64)
    x = _mix64(np.uint64(seed & _MASK64) + (k * np.uint64(2)) * np.uint64(GOLDEN))
    return (x >> np.uint64(11)).astype(np.float64) * 2.0**-53


def normal_fill(seed, start, n):
    """Standard normals; draw k consumes raw counters (2k, 2k+1)."""
    k = np.arange(start, start + n, dtype=np.uint64)
    base = np.uint64(seed & _MASK64)
    x1 = _mix64(base + (k * np.uint64(2)) * np.uint64(GOLDEN))
    x2 = _mix64(base + (k * np.uint64(2) + np.uint64(1)) * np.uint64(GOLDEN))
    u1 = ((x1 >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = (x2 >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos((2.0 * np.pi) * u2)


def lincomb(a, x, b, y):
    """Elementwise a*x + b*y."""
    return a * x + b * y


def lincomb3(a, x, b, y, c, w):
    """Elementwise a*x + b*y + c*w."""
    return a * x + b * y + c * w
