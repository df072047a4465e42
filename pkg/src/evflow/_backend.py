"""Kernel backend selection.

The compiled extension is preferred when the build produced it; the numpy
fallback implements the identical contract (see _kernels_py). Both stay
importable side by side so tests and benchmarks can compare them.
"""

from __future__ import annotations

from types import ModuleType
from typing import Optional

try:
    from . import _kernels as _default_kernels

    DEFAULT_BACKEND = "compiled"
except ImportError:  # extension not built; pure-python install
    from . import _kernels_py as _default_kernels

    DEFAULT_BACKEND = "numpy"

BACKEND_NAMES = ("compiled", "numpy")


def get_backend(name: Optional[str] = None) -> tuple[ModuleType, str]:
    """Return (kernel module, canonical name) for a backend selector."""
    if name is None or name == "auto":
        return _default_kernels, DEFAULT_BACKEND
    if name == "compiled":
        from . import _kernels  # raises ImportError when not built

        return _kernels, "compiled"
    if name == "numpy":
        from . import _kernels_py

        return _kernels_py, "numpy"
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKEND_NAMES} or 'auto'")
