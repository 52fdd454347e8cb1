"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback
is used otherwise.  Set GENMATTE_FORCE_FALLBACK=1 to force the fallback
(useful for benchmarking and parity tests).  The choice is made once at
import, so a process is always internally consistent.
"""

import os

from genmatte import _kernels_py

if os.environ.get("GENMATTE_FORCE_FALLBACK"):
    _impl = _kernels_py
    BACKEND = "fallback"
else:
    try:
        from genmatte import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "fallback"

raw_uint64 = _impl.raw_uint64
uniform_fill = _impl.uniform_fill
normal_fill = _impl.normal_fill
lincomb = _impl.lincomb
lincomb3 = _impl.lincomb3


def active_backend() -> str:
    """Name of the kernel backend selected at import ('compiled' or 'fallback')."""
    return BACKEND


def load_backend(name: str):
    """Load a backend module by name regardless of the active selection."""
    if name == "fallback":
        return _kernels_py
    if name == "compiled":
        from genmatte import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
