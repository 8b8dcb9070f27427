"""Extension recipes: classical conditioning, exponential candidates,
separable matching, perturbative corrections, and equality-case models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    IncompatibleMarginalsError,
    InvalidStateError,
    NotPositiveDefiniteError,
    NotPSDError,
    ShapeMismatchError,
)
from .linalg import hermitize, herm_eig, kron, matrix_exp, matrix_log, partial_trace
from .states import CompatiblePair, DensityMatrix, density, marginal

PROB_SUM_ATOL = 1e-12
MARGINAL_MATCH_ATOL = 1e-12
ZERO_FIBER = 1e-14
PD_FLOOR = 1e-10


@dataclass(frozen=True)
class ClassicalJoint:
    """Joint probability table over a tuple of finite alphabets."""

    probs: np.ndarray

    @property
    def dims(self) -> tuple[int, ...]:
        return self.probs.shape


def classical_joint(probs) -> ClassicalJoint:
    """Validate a probability table: entries >= 0, total 1 within 1e-12."""
    p = np.asarray(probs, dtype=float)
    if p.size == 0:
        raise ShapeMismatchError("empty probability table")
    if p.min() < -ZERO_FIBER:
        raise InvalidStateError(f"negative probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    total = float(p.sum())
    if abs(total - 1.0) > PROB_SUM_ATOL:
        raise InvalidStateError(f"probabilities sum to {total!r}, not 1")
    p = p / total
    p.setflags(write=False)
    return ClassicalJoint(p)


def shannon(p) -> float:
    """Shannon entropy in natural log units; zero cells contribute zero."""
    q = np.asarray(p.probs if isinstance(p, ClassicalJoint) else p, dtype=float).ravel()
    q = q[q > ZERO_FIBER]
    return float(-(q * np.log(q)).sum()) if q.size else 0.0


def classical_extension(p12: ClassicalJoint, p23: ClassicalJoint) -> ClassicalJoint:
    """Maximum-entropy joint table with the two given overlapping marginals.

    Conditions the second table on the shared middle variable:
    ``p[x, y, z] = p12[x, y] * p23[y, z] / p2[y]``, with fibers of
    middle weight at or below 1e-14 set to zero.  The output entropy is
    H12 + H23 - H2.
    """
    if p12.probs.ndim != 2 or p23.probs.ndim != 2:
        raise ShapeMismatchError("classical_extension expects two bivariate tables")
    if p12.dims[1] != p23.dims[0]:
        raise ShapeMismatchError(
            f"middle alphabets differ: {p12.dims[1]} vs {p23.dims[0]}")
    m_left = p12.probs.sum(axis=0)
    m_right = p23.probs.sum(axis=1)
    gap = float(np.abs(m_left - m_right).sum())
    if gap > MARGINAL_MATCH_ATOL:
        raise IncompatibleMarginalsError(
            f"middle marginals differ by {gap:.3e} in L1", gap)
    p2 = 0.5 * (m_left + m_right)
    live = p2 > ZERO_FIBER
    ratio = np.zeros_like(p2)
    ratio[live] = 1.0 / p2[live]
    out = np.einsum("xy,y,yz->xyz", p12.probs, ratio, p23.probs)
    return classical_joint(out)


def chain_extension(joints) -> ClassicalJoint:
    """Fold a chain of bivariate tables into one joint table.

    ``joints[j]`` couples variables j and j+1; consecutive tables must
    agree on the shared variable within 1e-12 (L1).  The result has
    entropy ``sum H(joint_j) - sum H(shared marginals)``.
    """
    joints = list(joints)
    if not joints:
        raise ShapeMismatchError("chain_extension needs at least one table")
    for j, table in enumerate(joints):
        if table.probs.ndim != 2:
            raise ShapeMismatchError(f"table {j} is not bivariate")
    acc = joints[0].probs
    for j in range(1, len(joints)):
        step = joints[j].probs
        if acc.shape[-1] != step.shape[0]:
            raise ShapeMismatchError(
                f"tables {j - 1} and {j} disagree on the shared alphabet")
        left = acc.reshape(-1, acc.shape[-1]).sum(axis=0)
        right = step.sum(axis=1)
        gap = float(np.abs(left - right).sum())
        if gap > MARGINAL_MATCH_ATOL:
            raise IncompatibleMarginalsError(
                f"tables {j - 1} and {j}: shared marginals differ by {gap:.3e}", gap)
        shared = 0.5 * (left + right)
        live = shared > ZERO_FIBER
        ratio = np.zeros_like(shared)
        ratio[live] = 1.0 / shared[live]
        acc = acc[..., None] * (step * ratio[:, None])
    return classical_joint(acc)


def embed_classical(p: ClassicalJoint) -> DensityMatrix:
    """Diagonal density matrix carrying a probability table."""
    return density(np.diag(p.probs.ravel().astype(complex)), p.dims)


def extract_classical(rho: DensityMatrix, atol: float = 1e-12) -> ClassicalJoint:
    """Read a probability table back off a diagonal density matrix."""
    off = rho.mat - np.diag(np.diagonal(rho.mat))
    dev = float(np.abs(off).max())
    if dev > atol:
        raise InvalidStateError(
            f"state is not diagonal: off-diagonal magnitude {dev:.3e}")
    return classical_joint(np.diagonal(rho.mat).real.reshape(rho.dims))


def golden_thompson_R(pair: CompatiblePair, pd_floor: float = PD_FLOOR):
    """Exponential extension candidate for a strictly positive pair.

    Returns ``(r, trace_r)`` where
    ``r = exp(log rho12 (x) I + I (x) log rho23 - I (x) log rho2 (x) I)``.
    ``r`` is Hermitian positive definite with the trace bounded by 1;
    it is an extension exactly when ``trace_r`` reaches 1 and the
    reductions match (commuting inputs).  All three inputs must have
    smallest eigenvalue above ``pd_floor``.
    """
    d1, d2, d3 = pair.dims
    for name, state in (("rho12", pair.rho12), ("rho23", pair.rho23),
                        ("rho2", pair.rho2)):
        w, _ = herm_eig(state.mat)
        if w[0] <= pd_floor:
            raise NotPositiveDefiniteError(
                f"{name}: smallest eigenvalue {w[0]:.3e} not above {pd_floor:g}")
    log12 = matrix_log(pair.rho12.mat)
    log23 = matrix_log(pair.rho23.mat)
    log2 = matrix_log(pair.rho2.mat)
    exponent = (kron(log12, np.eye(d3))
                + kron(np.eye(d1), log23)
                - kron(np.eye(d1), log2, np.eye(d3)))
    r = matrix_exp(exponent)
    return r, float(r.trace().real)


@dataclass(frozen=True)
class SeparableEnsemble:
    """Convex mixture of product triples sharing matched middle factors."""

    weights: np.ndarray
    lefts: tuple[DensityMatrix, ...]
    middles: tuple[DensityMatrix, ...]
    rights: tuple[DensityMatrix, ...]


def separable_ensemble(weights, lefts, middles, rights) -> SeparableEnsemble:
    """Validate ensemble weights and factor dimensions."""
    w = np.asarray(weights, dtype=float)
    lefts, middles, rights = tuple(lefts), tuple(middles), tuple(rights)
    if not (w.ndim == 1 and w.size == len(lefts) == len(middles) == len(rights) >= 1):
        raise ShapeMismatchError("weights and factor lists must share one length")
    if w.min() <= 0.0:
        raise InvalidStateError(f"weights must be positive, got min {w.min()!r}")
    if abs(w.sum() - 1.0) > PROB_SUM_ATOL:
        raise InvalidStateError(f"weights sum to {w.sum()!r}, not 1")
    for group in (lefts, middles, rights):
        if len({f.dim for f in group}) != 1:
            raise ShapeMismatchError("factor dimensions differ within a slot")
    w = w / w.sum()
    w.setflags(write=False)
    return SeparableEnsemble(w, lefts, middles, rights)


def matched_separable_extension(ens: SeparableEnsemble):
    """Separable joint state from an ensemble of matched product triples.

    Returns ``(rho12, rho23, rho123)``: the two induced overlapping
    marginals (compatible by construction, sharing the middle mixture)
    and the separable extension whose reductions they are.
    """
    r12 = sum(w * kron(a.mat, b.mat)
              for w, a, b in zip(ens.weights, ens.lefts, ens.middles))
    r23 = sum(w * kron(b.mat, c.mat)
              for w, b, c in zip(ens.weights, ens.middles, ens.rights))
    r123 = sum(w * kron(a.mat, b.mat, c.mat)
               for w, a, b, c in zip(ens.weights, ens.lefts, ens.middles, ens.rights))
    d1 = ens.lefts[0].dim
    d2 = ens.middles[0].dim
    d3 = ens.rights[0].dim
    return (density(r12, (d1, d2)), density(r23, (d2, d3)),
            density(r123, (d1, d2, d3)))


def perturbation_extension(base: DensityMatrix, pair: CompatiblePair,
                           psd_tol: float = PD_FLOOR) -> DensityMatrix:
    """Correct a strictly positive joint state to carry new marginals.

    For a base state with reductions (old12, old23, old2) and a target
    pair (new12, new23, new2), the update

        base + (new12 - old12) (x) new3
             + new1 (x) (new23 - old23)
             + new1 (x) (old2 - new2) (x) new3

    reproduces the target marginals exactly (an affine identity).  The
    result stays a state only for small enough deviations; when an
    eigenvalue drops below ``-psd_tol`` a NotPSDError carrying the
    minimum eigenvalue and the matrix is raised so callers can bisect.
    """
    dims = pair.dims
    if len(base.dims) != 3 or tuple(base.dims) != dims:
        raise ShapeMismatchError(
            f"base dims {base.dims} do not match pair dims {dims}")
    w, _ = herm_eig(base.mat)
    if w[0] <= 0.0:
        raise NotPositiveDefiniteError(
            f"base state must be strictly positive, smallest eigenvalue {w[0]:.3e}")
    old12 = partial_trace(base.mat, dims, [0, 1])
    old23 = partial_trace(base.mat, dims, [1, 2])
    old2 = partial_trace(base.mat, dims, [1])
    new1 = marginal(pair.rho12, [0]).mat
    new3 = marginal(pair.rho23, [1]).mat
    new2 = pair.rho2.mat
    out = hermitize(
        base.mat
        + kron(pair.rho12.mat - old12, new3)
        + kron(new1, pair.rho23.mat - old23)
        + kron(new1, old2 - new2, new3)
    )
    w, _ = herm_eig(out)
    if w[0] < -psd_tol:
        raise NotPSDError(
            f"perturbed matrix has eigenvalue {w[0]:.3e}", w[0], out)
    return density(out, dims)


def build_triangle_equality_state(lams, mus, atol: float = 1e-9) -> DensityMatrix:
    """Two-factor state saturating the entropy triangle inequality.

    Mixes a diagonal block over the first register with a fixed pure
    coupling between the other two: ``diag(lams) (x) |phi><phi|`` with
    ``phi = sum_k sqrt(mus[k]) |kk>``, grouped as factors
    ``(len(lams) * len(mus), len(mus))``.  Its entropy satisfies
    s12 = s1 - s2 exactly, so any extendable partner on the right must
    factor from the middle marginal ``diag(mus)``.
    """
    lam = np.asarray(lams, dtype=float)
    mu = np.asarray(mus, dtype=float)
    for name, vec in (("lams", lam), ("mus", mu)):
        if vec.ndim != 1 or vec.size == 0:
            raise ShapeMismatchError(f"{name} must be a non-empty vector")
        if vec.min() <= 0.0:
            raise InvalidStateError(f"{name} must be strictly positive")
        if abs(vec.sum() - 1.0) > atol:
            raise InvalidStateError(f"{name} sums to {vec.sum()!r}, not 1")
    lam = lam / lam.sum()
    mu = mu / mu.sum()
    m, n = lam.size, mu.size
    phi = np.zeros(n * n, dtype=complex)
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        phi += np.sqrt(mu[k]) * np.kron(e, e)
    rho = kron(np.diag(lam.astype(complex)), np.outer(phi, phi.conj()))
    return density(rho, (m * n, n))
