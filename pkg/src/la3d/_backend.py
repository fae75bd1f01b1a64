"""Kernel backend selection.

The compiled extension is preferred. Set ``LA3D_BACKEND=python`` to force the
numpy fallback (useful for debugging and for the backend benchmark).
"""
from __future__ import annotations

import logging
import os
from types import ModuleType

from . import _pure

log = logging.getLogger(__name__)


def _load() -> tuple[ModuleType, str]:
    if os.environ.get("LA3D_BACKEND", "").lower() == "python":
        return _pure, "python"
    try:
        from . import _kernels
    except ImportError:
        log.debug("compiled kernels unavailable, using numpy fallback")
        return _pure, "python"
    return _kernels, "cython"


kernels, BACKEND = _load()


def get(name: str) -> ModuleType:
    """Return the kernel module for ``name`` ("cython" or "python")."""
    if name == "python":
        return _pure
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def has_compiled() -> bool:
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True
