"""Dense Hermitian kernels: tensor products, reductions, spectral functions.

Composite indices are row-major over the factor list: for factor
dimensions ``(d1, d2, d3)`` the basis vector ``|i1 i2 i3>`` sits at flat
index ``(i1 * d2 + i2) * d3 + i3``, matching ``numpy.reshape`` and
``numpy.kron`` ordering.
"""

from __future__ import annotations

from functools import reduce
from math import prod

import numpy as np

from . import backend
from .errors import NotHermitianError, ShapeMismatchError, SingularMatrixError

HERMITIAN_ATOL = 1e-10


def hermitize(a: np.ndarray) -> np.ndarray:
    """Average a matrix with its conjugate transpose."""
    return 0.5 * (a + a.conj().T)


def check_hermitian(a, atol: float = HERMITIAN_ATOL, name: str = "matrix") -> np.ndarray:
    """Validate Hermiticity within ``atol`` and return the symmetrized copy."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatchError(f"{name}: expected a square matrix, got shape {a.shape}")
    dev = float(np.abs(a - a.conj().T).max()) if a.size else 0.0
    if dev > atol:
        raise NotHermitianError(f"{name}: max |A - A^H| = {dev:.3e} exceeds {atol:g}")
    return hermitize(a)


def herm_eig(a, atol: float = HERMITIAN_ATOL):
    """Eigenvalues (ascending) and eigenvector columns of a Hermitian matrix."""
    return backend.eigh(check_hermitian(a, atol=atol))


def kron(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, leftmost factor slowest."""
    if not factors:
        raise ShapeMismatchError("kron needs at least one factor")
    return reduce(np.kron, (np.asarray(f) for f in factors))


def partial_trace(a, dims, keep) -> np.ndarray:
    """Trace out all tensor factors not listed in ``keep``.

    Parameters
    ----------
    a : array_like
        Square matrix over the composite space ``prod(dims)``.
    dims : sequence of int
        Factor dimensions, slowest index first.
    keep : sequence of int
        Zero-based positions of the factors to retain; the result is
        ordered by ascending position.
    """
    a = np.asarray(a, dtype=complex)
    dims = tuple(int(d) for d in dims)
    if any(d <= 0 for d in dims):
        raise ShapeMismatchError(f"factor dimensions must be positive, got {dims}")
    n = prod(dims)
    if a.shape != (n, n):
        raise ShapeMismatchError(f"matrix shape {a.shape} does not match dims {dims}")
    k = len(dims)
    keep = sorted(set(int(i) for i in keep))
    if not keep or any(i < 0 or i >= k for i in keep):
        raise ShapeMismatchError(f"keep={keep} invalid for {k} factors")
    t = a.reshape(dims + dims)
    row_sub = list(range(k))
    col_sub = [k + i if i in keep else i for i in range(k)]
    out_sub = [i for i in keep] + [k + i for i in keep]
    reduced = np.einsum(t, row_sub + col_sub, out_sub)
    m = prod(dims[i] for i in keep)
    return reduced.reshape(m, m)


def matrix_exp(a) -> np.ndarray:
    """Hermitian matrix exponential via eigendecomposition."""
    w, v = herm_eig(a)
    return hermitize((v * np.exp(w)) @ v.conj().T)


def matrix_log(a, floor: float = 0.0) -> np.ndarray:
    """Hermitian matrix logarithm; defined for positive definite inputs.

    Raises SingularMatrixError when the smallest eigenvalue is at or
    below ``floor``.
    """
    w, v = herm_eig(a)
    if w[0] <= floor:
        raise SingularMatrixError(
            f"matrix_log: smallest eigenvalue {w[0]:.3e} is not above {floor:g}"
        )
    return hermitize((v * np.log(w)) @ v.conj().T)


def trace_norm(a) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    w, _ = herm_eig(a)
    return float(np.abs(w).sum())


def frobenius(a) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(np.asarray(a)))
