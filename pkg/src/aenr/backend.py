"""Kernel backend selection: compiled extension when built, numpy otherwise.

The Cython extension accelerates the per-frame adaptive-filter math, the
hottest loop of the streaming pipeline.  Functional behavior is identical;
``benchmarks/bench_backends.py`` compares the two.  Set AENR_BACKEND=numpy to
force the fallback even when the extension is present.
"""

import os

from . import _kernels_np

try:
    from . import _kernels as _ext
except ImportError:
    _ext = None

_BACKENDS = {"numpy": _kernels_np}
if _ext is not None:
    _BACKENDS["cython"] = _ext


def available_backends():
    return tuple(_BACKENDS)


def default_backend():
    forced = os.environ.get("AENR_BACKEND")
    if forced:
        if forced not in _BACKENDS:
            raise ValueError(
                f"AENR_BACKEND={forced!r} not available, have {available_backends()}"
            )
        return forced
    return "cython" if "cython" in _BACKENDS else "numpy"


def get_kernels(name=None):
    """Kernel module for `name` ("numpy" or "cython"); default per environment."""
    if name is None:
        name = default_backend()
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}, have {available_backends()}") from None
