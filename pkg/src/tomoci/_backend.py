"""Kernel backend selection.

The environment variable TOMOCI_BACKEND picks the lane: "numba" for the
compiled kernels, "numpy" for the vectorized fallback. Unset, the compiled
lane is used when numba imports and the fallback otherwise. Both lanes
implement identical contracts; sampling always happens in numpy's Generator
regardless of lane, so random draws are backend-independent.
"""

from __future__ import annotations

import os
import warnings

from .errors import InvalidArgumentError

_ENV_VAR = "TOMOCI_BACKEND"
_cached = {}


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def available_backends() -> tuple[str, ...]:
    return ("numpy", "numba") if _numba_available() else ("numpy",)


def resolve_backend(name: str | None = None) -> str:
    """Resolve an explicit name, the env flag, or the automatic default."""
    if name is None:
        name = os.environ.get(_ENV_VAR, "").strip().lower() or None
    if name is None:
        return "numba" if _numba_available() else "numpy"
    if name not in ("numpy", "numba"):
        raise InvalidArgumentError(
            f"backend must be 'numpy' or 'numba', got {name!r}"
        )
    if name == "numba" and not _numba_available():
        warnings.warn(
            "numba backend requested but numba is not installed; using numpy",
            RuntimeWarning,
            stacklevel=2,
        )
        return "numpy"
    return name


def kernels(name: str | None = None):
    """Return the kernel module for the resolved backend."""
    resolved = resolve_backend(name)
    if resolved not in _cached:
        if resolved == "numba":
            from . import _kernels_numba as mod
        else:
            from . import _kernels_numpy as mod
        _cached[resolved] = mod
    return _cached[resolved]
