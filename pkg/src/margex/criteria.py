"""Compatibility checking and entropy-based necessary conditions."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import IncompatibleMarginalsError, ShapeMismatchError
from .linalg import kron, partial_trace, trace_norm
from .states import CompatiblePair, DensityMatrix, density, entropy, marginal

COMPAT_TOL = 1e-9
SLACK_TOL = 1e-9
ENTROPY_EQ_TOL = 1e-7


@dataclass(frozen=True)
class EntropyReport:
    """Von Neumann entropies of a pair and the derived inequality slacks.

    Slack fields are exact arithmetic combinations of the stored
    entropies: ``slack_cheap = S12 + S23 - S2``,
    ``slack_pol = S12 + S23 - S1 - S3``, and the two Araki-Lieb slacks
    ``al_slack12 = S12 - |S1 - S2|``, ``al_slack23 = S23 - |S2 - S3|``.
    ``triangle_equality_12`` flags S12 = S1 - S2 within the detection
    tolerance, ``triangle_equality_23`` the mirrored S23 = S3 - S2.
    """

    S1: float
    S2: float
    S3: float
    S12: float
    S23: float
    slack_cheap: float
    slack_pol: float
    al_slack12: float
    al_slack23: float
    triangle_equality_12: bool
    triangle_equality_23: bool


@dataclass(frozen=True)
class NecessityVerdict:
    """Outcome of the necessary-condition battery.

    ``product_only_obstruction`` fires when an entropy triangle
    equality forces the opposite marginal to factor through the middle;
    ``blocked`` is True when some necessary condition demonstrably
    fails, and never claims feasibility on its own.
    """

    compatible: bool
    passes_cheap: bool
    passes_pol: bool
    product_only_obstruction: bool
    blocked: bool
    report: EntropyReport
    product_dist_23: float
    product_dist_12: float


def check_compatible(rho12: DensityMatrix, rho23: DensityMatrix,
                     tol: float = COMPAT_TOL) -> CompatiblePair:
    """Verify the middle reductions agree and build a CompatiblePair.

    Raises IncompatibleMarginalsError carrying the trace-norm distance
    when the reductions differ by more than ``tol``.
    """
    if len(rho12.dims) != 2 or len(rho23.dims) != 2:
        raise ShapeMismatchError(
            f"expected two-factor states, got dims {rho12.dims} and {rho23.dims}")
    if rho12.dims[1] != rho23.dims[0]:
        raise ShapeMismatchError(
            f"middle dimensions differ: {rho12.dims[1]} vs {rho23.dims[0]}")
    left = partial_trace(rho12.mat, rho12.dims, [1])
    right = partial_trace(rho23.mat, rho23.dims, [0])
    gap = trace_norm(left - right)
    if gap > tol:
        raise IncompatibleMarginalsError(
            f"middle reductions differ by {gap:.3e} > {tol:g}", gap)
    rho2 = density(0.5 * (left + right), (rho12.dims[1],))
    return CompatiblePair(rho12, rho23, rho2, gap)


def entropy_report(pair: CompatiblePair,
                   eq_tol: float = ENTROPY_EQ_TOL) -> EntropyReport:
    """Entropies of all five reductions plus inequality slacks.

    ``eq_tol`` is the triangle-equality detection tolerance; it is
    looser than arithmetic precision because entropies amplify
    eigenvalue error through the logarithm near zero.
    """
    s1 = entropy(marginal(pair.rho12, [0]))
    s2 = entropy(pair.rho2)
    s3 = entropy(marginal(pair.rho23, [1]))
    s12 = entropy(pair.rho12)
    s23 = entropy(pair.rho23)
    return EntropyReport(
        S1=s1, S2=s2, S3=s3, S12=s12, S23=s23,
        slack_cheap=s12 + s23 - s2,
        slack_pol=s12 + s23 - s1 - s3,
        al_slack12=s12 - abs(s1 - s2),
        al_slack23=s23 - abs(s2 - s3),
        triangle_equality_12=abs(s12 - (s1 - s2)) <= eq_tol,
        triangle_equality_23=abs(s23 - (s3 - s2)) <= eq_tol,
    )


def necessary_conditions(pair: CompatiblePair,
                         eq_tol: float = ENTROPY_EQ_TOL) -> NecessityVerdict:
    """Run every entropy-based necessary condition for extendability.

    Subadditivity slacks must clear -1e-9.  A triangle equality
    S12 = S1 - S2 within ``eq_tol`` blocks the pair unless rho23
    factors as rho2 (x) rho3 within ``eq_tol`` in trace norm, and
    mirrored with the roles of the outer factors swapped.
    """
    rep = entropy_report(pair, eq_tol)
    rho1 = marginal(pair.rho12, [0])
    rho3 = marginal(pair.rho23, [1])
    dist23 = trace_norm(pair.rho23.mat - kron(pair.rho2.mat, rho3.mat))
    dist12 = trace_norm(pair.rho12.mat - kron(rho1.mat, pair.rho2.mat))
    compatible = pair.overlap_gap <= COMPAT_TOL
    passes_cheap = rep.slack_cheap >= -SLACK_TOL
    passes_pol = rep.slack_pol >= -SLACK_TOL
    obstruction = rep.triangle_equality_12
    blocked = (not (compatible and passes_cheap and passes_pol)
               or (rep.triangle_equality_12 and dist23 > eq_tol)
               or (rep.triangle_equality_23 and dist12 > eq_tol))
    return NecessityVerdict(
        compatible=compatible,
        passes_cheap=passes_cheap,
        passes_pol=passes_pol,
        product_only_obstruction=obstruction,
        blocked=blocked,
        report=rep,
        product_dist_23=dist23,
        product_dist_12=dist12,
    )


def implication_check(pair: CompatiblePair, tol: float = SLACK_TOL) -> bool:
    """True iff a non-negative polished slack forces a non-negative cheap one.

    Regression hook for the bound 2 S2 <= S12 + S23 + S1 + S3 obtained
    by adding the two Araki-Lieb inequalities; it makes the implication
    automatic for every compatible pair.
    """
    rep = entropy_report(pair)
    return not (rep.slack_pol >= tol and rep.slack_cheap < -tol)
