"""Backend selection for the hot loops.

The compiled Cython extension is used when it was built; otherwise the
pure-Python module is loaded.  Setting ``BUBBLY_PURE_PYTHON=1`` forces the
fallback (used by the benchmark and the backend-equivalence tests).
"""
import os

from bubbly import _kernels_py

if os.environ.get("BUBBLY_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from bubbly import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

samuelson_orbit = _impl.samuelson_orbit
samuelson_escape = _impl.samuelson_escape
samuelson_scan = _impl.samuelson_scan
price_recursion = _impl.price_recursion
leverage_orbit_cd = _impl.leverage_orbit_cd

__all__ = [
    "BACKEND",
    "samuelson_orbit",
    "samuelson_escape",
    "samuelson_scan",
    "price_recursion",
    "leverage_orbit_cd",
]
