"""Pick the compiled Murphy kernel when available.

Set ``RVARSCORE_PURE_PYTHON=1`` to force the numpy implementation.
"""
import os

from . import _murphy_py

BACKEND = "python"
kernels = _murphy_py

if os.environ.get("RVARSCORE_PURE_PYTHON", "").strip() not in ("1", "true", "yes"):
    try:
        from . import _murphy_kernel
    except ImportError:
        pass
    else:
        kernels = _murphy_kernel
        BACKEND = "cython"


def get_kernels(name=None):
    """Return the kernel module by name (``"cython"`` or ``"python"``)."""
    if name is None:
        return kernels
    if name == "python":
        return _murphy_py
    if name == "cython":
        from . import _murphy_kernel
        return _murphy_kernel
    raise ValueError(f"unknown backend {name!r}")
