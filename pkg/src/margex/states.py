"""Density matrices over tensor-factored Hilbert spaces."""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import (
    AncillaTooSmallError,
    InvalidStateError,
    ShapeMismatchError,
    SpectraMismatchError,
)
from .linalg import (HERMITIAN_ATOL, check_hermitian, herm_eig, kron,
                     partial_trace)

TRACE_ATOL = 1e-10
PSD_CLIP = 1e-10
SUPPORT_CUTOFF = 1e-12
ENTROPY_FLOOR = 1e-14


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix with a factor layout.

    Construct through :func:`density`; ``mat`` is Hermitian, positive
    semidefinite, unit trace, and read-only.
    """

    mat: np.ndarray
    dims: tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True)
class CompatiblePair:
    """Marginal pair rho12, rho23 whose middle reductions agree.

    ``rho2`` stores the average of the two middle reductions and
    ``overlap_gap`` their trace-norm distance; both are set by
    ``criteria.check_compatible``.
    """

    rho12: DensityMatrix
    rho23: DensityMatrix
    rho2: DensityMatrix
    overlap_gap: float

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.rho12.dims[0], self.rho12.dims[1], self.rho23.dims[1])


def _as_matrix(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def density(mat, dims=None, atol=None) -> DensityMatrix:
    """Validate and normalize a matrix into a DensityMatrix.

    Hermiticity within ``atol`` (default 1e-10) is required and the
    stored matrix is symmetrized.  The trace must be 1 within ``atol``
    and is then scaled exactly.  Eigenvalues in [-atol, 0) are clipped
    to zero; anything more negative is rejected.
    """
    trace_atol = TRACE_ATOL if atol is None else float(atol)
    psd_clip = PSD_CLIP if atol is None else float(atol)
    a = check_hermitian(mat, atol=max(trace_atol, HERMITIAN_ATOL), name="density")
    n = a.shape[0]
    dims = (n,) if dims is None else tuple(int(d) for d in dims)
    if prod(dims) != n:
        raise ShapeMismatchError(f"dims {dims} do not factor side length {n}")
    tr = float(a.trace().real)
    if abs(tr - 1.0) > trace_atol:
        raise InvalidStateError(f"trace {tr!r} differs from 1 by more than {trace_atol:g}")
    w, v = herm_eig(a)
    if w[0] < -psd_clip:
        raise InvalidStateError(f"negative eigenvalue {w[0]:.3e} below -{psd_clip:g}")
    if w[0] < 0.0:
        w = np.clip(w, 0.0, None)
        a = (v * w) @ v.conj().T
        a = 0.5 * (a + a.conj().T)
    a = a / a.trace().real
    a.setflags(write=False)
    return DensityMatrix(a, dims)


def marginal(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduced state on the factors listed in ``keep``."""
    keep = sorted(set(int(i) for i in keep))
    sub = partial_trace(rho.mat, rho.dims, keep)
    return density(sub, tuple(rho.dims[i] for i in keep))


def entropy(rho) -> float:
    """Von Neumann entropy in natural log units.

    Eigenvalues at or below 1e-14 contribute zero.
    """
    w, _ = herm_eig(_as_matrix(rho))
    w = w[w > ENTROPY_FLOOR]
    return float(-(w * np.log(w)).sum()) if w.size else 0.0


def pure_state(vec, dims=None) -> DensityMatrix:
    """Rank-one projector onto a (normalized copy of a) vector."""
    v = np.asarray(vec, dtype=complex).reshape(-1)
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        raise InvalidStateError("zero vector has no direction")
    v = v / nrm
    return density(np.outer(v, v.conj()), dims)


def product_state(*factors: DensityMatrix) -> DensityMatrix:
    """Tensor product of density matrices, factor lists concatenated."""
    if not factors:
        raise ShapeMismatchError("product_state needs at least one factor")
    dims = tuple(d for f in factors for d in f.dims)
    return density(kron(*(f.mat for f in factors)), dims)


def pure_coupling(rho1: DensityMatrix, rho2: DensityMatrix,
                  match_tol: float = 1e-9) -> DensityMatrix:
    """Pure state on (1,2) whose reductions are rho1 and rho2.

    Exists exactly when the two non-zero spectra agree; built as a
    Schmidt sum pairing eigenvectors of equal weight.  Raises
    SpectraMismatchError otherwise.
    """
    w1, v1 = herm_eig(rho1.mat)
    w2, v2 = herm_eig(rho2.mat)
    idx1 = [i for i in range(w1.size) if w1[i] > SUPPORT_CUTOFF][::-1]
    idx2 = [i for i in range(w2.size) if w2[i] > SUPPORT_CUTOFF][::-1]
    if len(idx1) != len(idx2):
        raise SpectraMismatchError(
            f"ranks differ: {len(idx1)} vs {len(idx2)}")
    gap = max((abs(w1[i] - w2[j]) for i, j in zip(idx1, idx2)), default=0.0)
    if gap > match_tol:
        raise SpectraMismatchError(f"spectra differ by {gap:.3e} > {match_tol:g}")
    d1, d2 = rho1.dim, rho2.dim
    psi = np.zeros(d1 * d2, dtype=complex)
    for i, j in zip(idx1, idx2):
        weight = 0.5 * (w1[i] + w2[j])
        psi += np.sqrt(weight) * np.kron(v1[:, i], v2[:, j])
    return pure_state(psi, (d1, d2))


def purify(rho: DensityMatrix, ancilla_dim: int | None = None) -> DensityMatrix:
    """Pure state on (system, ancilla) whose first reduction is ``rho``.

    The ancilla must hold at least rank(rho) levels.
    """
    w, v = herm_eig(rho.mat)
    support = [i for i in range(w.size) if w[i] > SUPPORT_CUTOFF][::-1]
    rank = len(support)
    if ancilla_dim is None:
        ancilla_dim = rank
    ancilla_dim = int(ancilla_dim)
    if ancilla_dim < rank:
        raise AncillaTooSmallError(f"rank {rank} exceeds ancilla dimension {ancilla_dim}")
    psi = np.zeros(rho.dim * ancilla_dim, dtype=complex)
    for k, i in enumerate(support):
        e = np.zeros(ancilla_dim)
        e[k] = 1.0
        psi += np.sqrt(w[i]) * np.kron(v[:, i], e)
    return pure_state(psi, rho.dims + (ancilla_dim,))


def random_density(dim: int, rank: int | None = None, seed=None,
                   rng: np.random.Generator | None = None) -> DensityMatrix:
    """Trace-normalized Wishart state G G^H from a complex Ginibre block.

    Deterministic for a fixed ``seed`` through numpy's PCG64 generator;
    pass ``rng`` instead to draw several states from one stream.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    rank = dim if rank is None else int(rank)
    if rank < 1 or rank > dim:
        raise ShapeMismatchError(f"rank {rank} outside 1..{dim}")
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    a = g @ g.conj().T
    return density(a / a.trace().real, (dim,))
