"""Eigensolver backend selection.

Two interchangeable lanes compute Hermitian eigendecompositions: a
compiled cyclic-Jacobi kernel (built from ``_core.pyx``) and a LAPACK
lane through :func:`numpy.linalg.eigh`.  The compiled lane is the
default whenever the extension imported; set the environment variable
``MARGEX_BACKEND`` to ``compiled`` or ``numpy`` before import, or call
:func:`use` at runtime, to pick one explicitly.

Both lanes return eigenvalues in ascending order with matching
eigenvector columns, so everything above this module is
backend-agnostic.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

from .errors import NoConvergenceError

try:
    from . import _core
except ImportError:
    _core = None


def _eigh_numpy(a: np.ndarray):
    return np.linalg.eigh(a)


def _eigh_compiled(a: np.ndarray):
    try:
        return _core.jacobi_eigh(a)
    except RuntimeError as exc:
        raise NoConvergenceError(str(exc)) from exc


_LANES = {"numpy": _eigh_numpy}
if _core is not None:
    _LANES["compiled"] = _eigh_compiled


def available() -> tuple[str, ...]:
    """Names of the lanes usable in this process."""
    return tuple(sorted(_LANES))


def _default() -> str:
    requested = os.environ.get("MARGEX_BACKEND", "auto").lower()
    if requested in _LANES:
        return requested
    if requested not in ("", "auto"):
        warnings.warn(
            f"MARGEX_BACKEND={requested!r} not available; "
            f"choices are {available()}",
            RuntimeWarning,
            stacklevel=2,
        )
    return "compiled" if "compiled" in _LANES else "numpy"


_active = _default()


def current() -> str:
    """Name of the active lane."""
    return _active


def use(name: str) -> None:
    """Switch the active lane; raises ValueError on unknown names."""
    global _active
    if name not in _LANES:
        raise ValueError(f"unknown backend {name!r}; choices are {available()}")
    _active = name


def eigh(a: np.ndarray):
    """Eigendecomposition of a Hermitian matrix via the active lane."""
    return _LANES[_active](a)
