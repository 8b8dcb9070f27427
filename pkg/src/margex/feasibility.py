"""Feasibility engine: does a compatible pair admit a joint extension?

Numerically the question is whether the PSD cone meets the affine set
of Hermitian matrices with the two prescribed reductions.  The solver
runs Dykstra-corrected alternating projections between the two sets
(the correction term is needed on the cone only; an affine set needs
none), reports a verified witness on success, and reports a stalled
positive inter-set gap as infeasibility evidence.  Exact refutations
come separately from nullspace certificates: enough product vectors
forced into the kernel of every extension to span the whole space.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from math import pi, prod

import numpy as np

from .criteria import check_compatible
from .errors import (
    CertificateDegenerateError,
    DegenerateChoiceError,
    InvalidStateError,
    NotPositiveDefiniteError,
    ShapeMismatchError,
)
from .linalg import hermitize, herm_eig, kron, partial_trace, trace_norm
from .states import (
    CompatiblePair,
    DensityMatrix,
    density,
    marginal,
    pure_coupling,
)

FEAS_TOL = 1e-9
INFEAS_TOL = 1e-7
STALL_WINDOW = 100
STALL_RTOL = 1e-12
RANK_CUTOFF = 1e-9
NULL_OVERLAP_TOL = 1e-12


class Status(Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class NullspaceCertificate:
    """Vectors forced into the kernel of any joint extension.

    ``span_dim`` is the numerical rank of the stacked vectors
    (singular values above 1e-9); spanning the whole space refutes
    existence, since a unit-trace PSD matrix cannot vanish.
    """

    vectors: np.ndarray
    span_dim: int


@dataclass(frozen=True)
class FeasibilityVerdict:
    """Solver outcome with its supporting numbers.

    ``residual`` is the combined trace-norm marginal error of the best
    PSD candidate seen, ``gap`` the final distance between the PSD and
    affine iterates, ``evidence`` a one-line account of how the status
    was reached.
    """

    status: Status
    witness: DensityMatrix | None
    certificate: NullspaceCertificate | None
    residual: float
    gap: float
    iterations: int
    evidence: str


@dataclass(frozen=True)
class CounterexampleSpec:
    """Parameters of the two-decomposition counterexample family.

    ``mu1`` in [1/2, 1) is the larger middle eigenvalue (the middle
    state must keep rank 2), ``phi1_angle`` the direction of the
    alternative decomposition vector, ``eta_skew`` the angle by which
    the left basis departs from orthonormal: 0 keeps (1,0), (0,1);
    skew delta uses (1,0), (sin delta, cos delta).
    """

    mu1: float = 0.5
    phi1_angle: float = pi / 4
    eta_skew: float = 0.0

    def __post_init__(self):
        if not 0.5 <= self.mu1 < 1.0:
            raise InvalidStateError(
                f"mu1 must lie in [1/2, 1) to keep the middle rank 2, "
                f"got {self.mu1!r}")
        if self.eta_skew < 0.0:
            raise InvalidStateError(f"eta_skew must be >= 0, got {self.eta_skew!r}")


def project_psd(a: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm: clip negative eigenvalues."""
    w, v = herm_eig(a)
    if w[0] >= 0.0:
        return hermitize(np.asarray(a, dtype=complex))
    w = np.clip(w, 0.0, None)
    return hermitize((v * w) @ v.conj().T)


# ---------------------------------------------------------------------------
# real coordinates for Hermitian matrices and the marginal affine set

_SQRT2 = np.sqrt(2.0)


class _HermBasis:
    """Isometry between n x n Hermitian matrices and R^(n^2)."""

    def __init__(self, n: int):
        self.n = n
        self.iu = np.triu_indices(n, 1)

    def to_vec(self, a: np.ndarray) -> np.ndarray:
        upper = a[self.iu]
        return np.concatenate([np.diagonal(a).real,
                               _SQRT2 * upper.real,
                               _SQRT2 * upper.imag])

    def to_mat(self, v: np.ndarray) -> np.ndarray:
        n = self.n
        k = self.iu[0].size
        a = np.zeros((n, n), dtype=complex)
        a[self.iu] = (v[n:n + k] + 1j * v[n + k:]) / _SQRT2
        a += a.conj().T
        a[np.arange(n), np.arange(n)] = v[:n]
        return a


class _MarginalOperator:
    """Pre-factored orthogonal projector onto a marginal affine set.

    Rows of ``a`` are the real-linear constraint functionals reading
    off both reductions of a Hermitian matrix on the triple space; the
    Gram pseudo-inverse (eigenvalue cutoff relative 1e-12) removes the
    redundant rows, e.g. the doubly-counted middle reduction and unit
    trace.  Instances are immutable once built and safe to share.
    """

    def __init__(self, dims: tuple[int, int, int]):
        d1, d2, d3 = dims
        self.dims = dims
        n = d1 * d2 * d3
        self.full = _HermBasis(n)
        self.b12 = _HermBasis(d1 * d2)
        self.b23 = _HermBasis(d2 * d3)
        rows = (d1 * d2) ** 2 + (d2 * d3) ** 2
        a = np.empty((rows, n * n))
        for k in range(n * n):
            e = np.zeros(n * n)
            e[k] = 1.0
            h = self.full.to_mat(e)
            a[:, k] = np.concatenate([
                self.b12.to_vec(partial_trace(h, dims, [0, 1])),
                self.b23.to_vec(partial_trace(h, dims, [1, 2])),
            ])
        self.a = a
        gram = a @ a.T
        w, u = np.linalg.eigh(gram)
        keep = w > w[-1] * 1e-12
        self.gram_pinv = (u[:, keep] / w[keep]) @ u[:, keep].T

    def rhs(self, pair: CompatiblePair) -> np.ndarray:
        return np.concatenate([self.b12.to_vec(pair.rho12.mat),
                               self.b23.to_vec(pair.rho23.mat)])

    def project_vec(self, x: np.ndarray, b: np.ndarray) -> np.ndarray:
        return x - self.a.T @ (self.gram_pinv @ (self.a @ x - b))

    def residual(self, x: np.ndarray, b: np.ndarray) -> float:
        return float(np.linalg.norm(self.a @ x - b))


@lru_cache(maxsize=None)
def _operator_for(dims: tuple[int, int, int]) -> _MarginalOperator:
    return _MarginalOperator(dims)


def project_marginal_affine(x: np.ndarray, pair: CompatiblePair) -> np.ndarray:
    """Orthogonal projection onto {X Hermitian : reductions match the pair}."""
    dims = pair.dims
    n = prod(dims)
    x = np.asarray(x, dtype=complex)
    if x.shape != (n, n):
        raise ShapeMismatchError(
            f"matrix shape {x.shape} does not match pair dims {dims}")
    op = _operator_for(dims)
    xv = op.full.to_vec(hermitize(x))
    return op.full.to_mat(op.project_vec(xv, op.rhs(pair)))


def _marginal_residual(mat: np.ndarray, pair: CompatiblePair) -> float:
    dims = pair.dims
    return (trace_norm(partial_trace(mat, dims, [0, 1]) - pair.rho12.mat)
            + trace_norm(partial_trace(mat, dims, [1, 2]) - pair.rho23.mat))


_WITNESS_EVERY = 25


def _separation_margin(op: _MarginalOperator, x: np.ndarray,
                       y: np.ndarray) -> float:
    """Certified lower bound on infeasibility from one projection pair.

    ``x`` must satisfy the marginal constraints and ``y`` must be the
    PSD iterate it was projected from, so ``x - y`` lies in the row
    space of the constraint map.  Subtracting the top eigenvalue times
    the identity keeps it there while making it negative semidefinite;
    the returned pairing value is then constant across the whole
    affine set and must be nonpositive whenever a PSD solution exists.
    """
    v = x - y
    m = op.full.to_mat(v)
    top = float(herm_eig(m)[0][-1])
    return float(v @ x) - top


def _candidate_witnesses(pair: CompatiblePair):
    rho1 = marginal(pair.rho12, [0]).mat
    rho3 = marginal(pair.rho23, [1]).mat
    yield kron(pair.rho12.mat, rho3)
    yield kron(rho1, pair.rho23.mat)
    yield kron(rho1, pair.rho2.mat, rho3)


def solve(pair: CompatiblePair, max_iter: int = 5000,
          feas_tol: float = FEAS_TOL, infeas_tol: float = INFEAS_TOL,
          stall_window: int = STALL_WINDOW,
          stall_rtol: float = STALL_RTOL) -> FeasibilityVerdict:
    """Decide whether the pair admits a joint extension.

    Closed-form candidates (each input tensored with the opposite
    outer marginal, and the triple product) are screened first; every
    claimed witness is re-verified against ``feas_tol`` before being
    returned.  Otherwise Dykstra-corrected alternating projections run
    from the product of the pair's own marginals.  Feasible needs a
    PSD iterate with combined marginal residual at most ``feas_tol``.

    Infeasible is declared on a separating witness: the displacement
    from the PSD iterate to its affine projection lies in the row
    space of the constraint map, so shifting it by its own largest
    eigenvalue (the identity stays inside that row space) yields a
    matrix that is negative semidefinite yet has a fixed positive
    pairing with every matrix satisfying the marginal constraints.  A
    pairing margin above ``infeas_tol`` rules out any PSD solution.
    A stalled inter-set gap (above ``infeas_tol``, relative change
    under ``stall_rtol`` across ``stall_window`` iterations) is kept
    as a fallback trigger; anything else is Undecided.
    """
    dims = pair.dims
    for cand in _candidate_witnesses(pair):
        resid = _marginal_residual(cand, pair)
        if resid <= feas_tol:
            witness = density(cand, dims)
            return FeasibilityVerdict(
                Status.FEASIBLE, witness, None, float(resid), 0.0, 0,
                "closed-form candidate matched both reductions")
    op = _operator_for(dims)
    b = op.rhs(pair)
    start = kron(marginal(pair.rho12, [0]).mat, pair.rho2.mat,
                 marginal(pair.rho23, [1]).mat)
    x = op.project_vec(op.full.to_vec(start), b)
    corr = np.zeros_like(x)
    gaps: list[float] = []
    best_resid = np.inf
    best_mat = None
    gap = np.inf
    for it in range(1, max_iter + 1):
        y_mat = project_psd(op.full.to_mat(x + corr))
        y = op.full.to_vec(y_mat)
        corr = x + corr - y
        x = op.project_vec(y, b)
        gap = float(np.linalg.norm(y - x))
        if it % _WITNESS_EVERY == 0 or it == max_iter:
            margin = _separation_margin(op, x, y)
            if margin >= infeas_tol:
                return FeasibilityVerdict(
                    Status.INFEASIBLE, None, None, float(best_resid), gap, it,
                    f"separating witness with pairing margin {margin:.3e}")
        resid = _marginal_residual(y_mat, pair)
        if resid < best_resid:
            best_resid = resid
            best_mat = y_mat
        if resid <= 0.5 * feas_tol:
            tr = y_mat.trace().real
            witness = density(y_mat / tr, dims)
            wres = _marginal_residual(witness.mat, pair)
            if wres <= feas_tol:
                return FeasibilityVerdict(
                    Status.FEASIBLE, witness, None, float(wres), gap, it,
                    "alternating projections reached the marginal set")
        gaps.append(gap)
        if len(gaps) > stall_window:
            gaps.pop(0)
            lo, hi = min(gaps), max(gaps)
            if lo >= infeas_tol and (hi - lo) <= stall_rtol * max(hi, 1.0):
                return FeasibilityVerdict(
                    Status.INFEASIBLE, None, None, float(best_resid), gap, it,
                    f"inter-set gap stalled at {gap:.3e} over "
                    f"{stall_window} iterations")
    return FeasibilityVerdict(
        Status.UNDECIDED, None, None, float(best_resid), gap, max_iter,
        f"no verdict after {max_iter} iterations; best residual "
        f"{best_resid:.3e}, gap {gap:.3e}")


# ---------------------------------------------------------------------------
# the two-decomposition counterexample family


def _perp(v: np.ndarray) -> np.ndarray:
    # (z, w) -> (-conj(w), conj(z)), orthogonal for any complex pair
    return np.array([-np.conj(v[1]), np.conj(v[0])])


def lemma_two_decompositions(rho2: DensityMatrix, phi1):
    """Second rank-one decomposition of a rank-2 qubit state.

    Given a direction ``phi1`` that is not an eigenvector, the largest
    weight nu1 keeping ``rho2 - nu1 |phi1><phi1|`` PSD is
    ``1 / <phi1, rho2^{-1} phi1>``; the remainder is exactly rank one,
    giving ``rho2 = nu1 |phi1><phi1| + nu2 |phi2><phi2|`` with
    ``nu2 = 1 - nu1``.  The four vectors (two eigenvectors, phi1, phi2)
    are pairwise linearly independent.
    """
    if rho2.dim != 2:
        raise ShapeMismatchError(f"middle state must be a qubit, got dim {rho2.dim}")
    w, v = herm_eig(rho2.mat)
    if w[0] <= 1e-12:
        raise NotPositiveDefiniteError(
            f"middle state must have rank 2, smallest eigenvalue {w[0]:.3e}")
    phi1 = np.asarray(phi1, dtype=complex).reshape(-1)
    if phi1.shape != (2,):
        raise ShapeMismatchError(f"phi1 must live in dimension 2, got {phi1.shape}")
    phi1 = phi1 / np.linalg.norm(phi1)
    for j in range(2):
        if abs(np.vdot(v[:, j], phi1)) > 1.0 - 1e-10:
            raise DegenerateChoiceError(
                "phi1 coincides with an eigenvector of the middle state")
    inv = (v / w) @ v.conj().T
    nu1 = float(1.0 / np.vdot(phi1, inv @ phi1).real)
    remainder = rho2.mat - nu1 * np.outer(phi1, phi1.conj())
    rw, rv = herm_eig(remainder)
    phi2 = rv[:, 1]
    nu2 = 1.0 - nu1
    return nu1, nu2, phi2


def _rank1_mix(weights, vectors, dims) -> DensityMatrix:
    mat = sum(w * np.outer(v, v.conj()) for w, v in zip(weights, vectors))
    return density(mat, dims)


def _null_vectors(etas, psis, phi_perps, chis) -> np.ndarray:
    eta_perps = [_perp(e) for e in etas]
    vecs = []
    for j in range(2):
        for k in range(2):
            vecs.append(kron(eta_perps[j], psis[j], chis[k]))
    for i in range(2):
        for j in range(2):
            vecs.append(kron(eta_perps[i], phi_perps[j], chis[j]))
    return np.array(vecs)


def _certificate_from(vectors: np.ndarray) -> NullspaceCertificate:
    svals = np.linalg.svd(vectors, compute_uv=False)
    span = int((svals > RANK_CUTOFF).sum())
    return NullspaceCertificate(vectors, span)


def build_counterexample(spec: CounterexampleSpec = CounterexampleSpec()):
    """Compatible pair with no joint extension, plus its certificate.

    Mixes rank-one products along two different decompositions of the
    same rank-2 middle state.  Any extension must annihilate eight
    product vectors; when they span the full eight-dimensional space
    (always, away from degenerate skews) no extension exists.  Returns
    ``(pair, certificate)``; raises CertificateDegenerateError when the
    certificate rank drops below 8.
    """
    mu = np.array([spec.mu1, 1.0 - spec.mu1])
    rho2 = density(np.diag(mu.astype(complex)), (2,))
    a = spec.phi1_angle
    phi1 = np.array([np.cos(a), np.sin(a)], dtype=complex)
    nu1, nu2, phi2 = lemma_two_decompositions(rho2, phi1)
    nu = np.array([nu1, nu2])
    psis = [np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex)]
    chis = psis
    d = spec.eta_skew
    etas = [np.array([1.0, 0.0], dtype=complex),
            np.array([np.sin(d), np.cos(d)], dtype=complex)]
    phis = [phi1, phi2]
    rho12 = _rank1_mix(mu, [kron(e, p) for e, p in zip(etas, psis)], (2, 2))
    rho23 = _rank1_mix(nu, [kron(p, c) for p, c in zip(phis, chis)], (2, 2))
    pair = check_compatible(rho12, rho23)
    cert = _certificate_from(_null_vectors(etas, psis,
                                           [_perp(p) for p in phis], chis))
    if cert.span_dim < 8:
        raise CertificateDegenerateError(
            f"certificate spans only {cert.span_dim} of 8 dimensions "
            f"(eta_skew {spec.eta_skew!r} degenerate)")
    return pair, cert


def four_basis_pair(angles=(0.0, 0.9, 0.45, 1.35)):
    """Equal-weight pair built from four distinct rank-one bases.

    All five reduced spectra are {1/2, 1/2}, so purification spectra
    match on both sides, yet the nullspace certificate spans the full
    space: no joint extension (and hence no common purification)
    exists.  ``angles`` set the left, middle-left, middle-right, and
    right basis directions; returns ``(pair, certificate)``.
    """
    def basis(t):
        u = np.array([np.cos(t), np.sin(t)], dtype=complex)
        return [u, _perp(u)]

    a_eta, a_psi, a_phi, a_chi = angles
    etas = basis(a_eta)
    psis = basis(a_psi)
    phis = basis(a_phi)
    chis = basis(a_chi)
    half = np.array([0.5, 0.5])
    rho12 = _rank1_mix(half, [kron(e, p) for e, p in zip(etas, psis)], (2, 2))
    rho23 = _rank1_mix(half, [kron(p, c) for p, c in zip(phis, chis)], (2, 2))
    pair = check_compatible(rho12, rho23)
    cert = _certificate_from(_null_vectors(etas, psis,
                                           [_perp(p) for p in phis], chis))
    if cert.span_dim < 8:
        raise CertificateDegenerateError(
            f"certificate spans only {cert.span_dim} of 8 dimensions")
    return pair, cert


def _best_product_split(v: np.ndarray, left: int, right: int):
    # largest two singular values of the (left, right) reshape plus
    # the dominant factors
    m = v.reshape(left, right)
    u, s, vh = np.linalg.svd(m)
    tail = s[1] if s.size > 1 else 0.0
    return s[0], float(tail), u[:, 0], vh[0].conj()


def verify_certificate(pair: CompatiblePair, cert: NullspaceCertificate) -> bool:
    """Check a certificate independently.

    True iff every vector factors (under one of the two adjacent
    splits) into u (x) x or y (x) w with the bipartite factor lying in
    the kernel of the matching input state, and the stacked vectors
    have full numerical rank d1*d2*d3.
    """
    d1, d2, d3 = pair.dims
    n = d1 * d2 * d3
    vectors = np.asarray(cert.vectors, dtype=complex)
    if vectors.ndim != 2 or vectors.shape[1] != n:
        raise ShapeMismatchError(
            f"certificate vectors of length {vectors.shape} do not match "
            f"dimension {n}")
    for v in vectors:
        v = v / np.linalg.norm(v)
        ok = False
        lead, tail, u, _ = _best_product_split(v, d1 * d2, d3)
        if tail <= 1e-10:
            overlap = np.vdot(u, pair.rho12.mat @ u).real
            ok = overlap <= NULL_OVERLAP_TOL
        if not ok:
            lead, tail, _, w = _best_product_split(v, d1, d2 * d3)
            if tail <= 1e-10:
                overlap = np.vdot(w, pair.rho23.mat @ w).real
                ok = overlap <= NULL_OVERLAP_TOL
        if not ok:
            return False
    svals = np.linalg.svd(vectors, compute_uv=False)
    return int((svals > RANK_CUTOFF).sum()) == n


def common_purification_check(pair: CompatiblePair, tol: float = 1e-8,
                              max_iter: int = 2000) -> bool:
    """Can one pure joint state carry both reductions?

    Requires the nonzero spectrum of each input to match the opposite
    outer marginal's (the two reductions of a pure state share a
    spectrum), then searches for a rank-one witness by alternating the
    affine projection with a truncation to the top eigenpair.  Spectra
    can match while no pure (indeed no) extension exists, so the rank
    test alone is never trusted.
    """
    d1, d2, d3 = pair.dims
    rho1 = marginal(pair.rho12, [0])
    rho3 = marginal(pair.rho23, [1])
    for big, small in ((pair.rho12, rho3), (pair.rho23, rho1)):
        wb, _ = herm_eig(big.mat)
        ws, _ = herm_eig(small.mat)
        nb = np.sort(wb[wb > 1e-12])[::-1]
        ns = np.sort(ws[ws > 1e-12])[::-1]
        if nb.size != ns.size or (nb.size and np.abs(nb - ns).max() > 1e-9):
            return False
    op = _operator_for(pair.dims)
    b = op.rhs(pair)
    seed = pure_coupling(density(pair.rho12.mat, (d1 * d2,)), rho3)
    if _marginal_residual(seed.mat, pair) <= tol:
        return True
    x = op.full.to_vec(seed.mat)
    for _ in range(max_iter):
        x = op.project_vec(x, b)
        h = op.full.to_mat(x)
        w, v = herm_eig(h)
        lead = max(float(w[-1]), 0.0)
        z = lead * np.outer(v[:, -1], v[:, -1].conj())
        if _marginal_residual(z, pair) <= tol:
            return True
        x = op.full.to_vec(z)
    return False
