"""Spin-1/2 coherent states on the Bloch sphere and symbol-calculus lifts.

A qubit operator A = alpha*I + beta.sigma has the degree-one sphere
function a(n) = 2*alpha + 6*beta.n as its upper symbol: averaging
a(n) |n><n| over the uniform probability measure on the sphere returns
A.  The factor 2 comes from integrating |n><n| to I/2, the factor 6
from the second moment 1/3 of each normal component.  Conditioning the
two bipartite symbols of a compatible pair on the shared middle sphere
yields a nonnegative function on a product of three spheres whose
quantization is a joint state with the prescribed reductions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NegativeSymbolError,
    ShapeMismatchError,
    SmallDenominatorError,
)
from .linalg import check_hermitian, hermitize, partial_trace, trace_norm
from .states import CompatiblePair, DensityMatrix, density

DENOM_FLOOR = 1e-8
MOMENT_CHECK_ATOL = 1e-12

PAULI = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


@dataclass(frozen=True)
class SpherePoint:
    """Direction on the unit sphere in polar coordinates (radians)."""

    theta: float
    phi: float


@dataclass(frozen=True)
class SphereGrid:
    """Quadrature nodes and weights for the uniform probability measure.

    ``weights`` sum to 1; ``normals`` holds the unit vectors row-wise;
    ``order`` is the exact total polynomial degree the grid integrates.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    order: int

    @property
    def nodes(self) -> tuple[SpherePoint, ...]:
        return tuple(SpherePoint(float(t), float(p))
                     for t, p in zip(self.theta, self.phi))

    def __len__(self) -> int:
        return self.weights.size


def _double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def _exact_moment(a: int, b: int, c: int) -> float:
    # uniform-sphere moment of nx^a ny^b nz^c
    if a % 2 or b % 2 or c % 2:
        return 0.0
    num = (_double_factorial(a - 1) * _double_factorial(b - 1)
           * _double_factorial(c - 1))
    return num / _double_factorial(a + b + c + 1)


def sphere_grid(n_polar: int = 8, n_azimuth: int = 16) -> SphereGrid:
    """Gauss-Legendre x trapezoid product grid on the sphere.

    Gauss-Legendre nodes in cos(theta) handle polar polynomials up to
    degree 2*n_polar - 1; the uniform azimuthal rule is exact for
    Fourier modes up to n_azimuth - 1.  Construction verifies every
    monomial moment of the normal vector up to total degree
    min(order, 4) against the closed-form double-factorial values and
    refuses grids that miss them.
    """
    if n_polar < 1 or n_azimuth < 1:
        raise ValueError("grid sizes must be positive")
    x, wx = np.polynomial.legendre.leggauss(n_polar)
    theta_col = np.arccos(x)
    phi_row = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    theta = np.repeat(theta_col, n_azimuth)
    phi = np.tile(phi_row, n_polar)
    weights = np.repeat(wx * 0.5 / n_azimuth, n_azimuth)
    sin_t = np.sin(theta)
    normals = np.column_stack([sin_t * np.cos(phi), sin_t * np.sin(phi),
                               np.cos(theta)])
    order = min(2 * n_polar - 1, n_azimuth - 1)
    check_deg = min(order, 4)
    for a in range(check_deg + 1):
        for b in range(check_deg + 1 - a):
            for c in range(check_deg + 1 - a - b):
                got = float(weights @ (normals[:, 0] ** a
                                       * normals[:, 1] ** b
                                       * normals[:, 2] ** c))
                want = _exact_moment(a, b, c)
                if abs(got - want) > MOMENT_CHECK_ATOL:
                    raise ValueError(
                        f"grid ({n_polar}x{n_azimuth}) misses moment "
                        f"n^({a},{b},{c}): {got!r} vs {want!r}")
    for arr in (theta, phi, weights, normals):
        arr.setflags(write=False)
    return SphereGrid(theta, phi, weights, normals, order)


def coherent_projector(omega: SpherePoint) -> np.ndarray:
    """Projector |n><n| onto the Bloch direction of ``omega``."""
    v = np.array([np.cos(omega.theta / 2.0),
                  np.exp(1j * omega.phi) * np.sin(omega.theta / 2.0)])
    return np.outer(v, v.conj())


def _projector_stack(grid: SphereGrid) -> np.ndarray:
    # (M, 2, 2) array of (I + n.sigma)/2 over the grid nodes
    return 0.5 * (PAULI[0] + np.einsum("mi,iab->mab", grid.normals, PAULI[1:]))


@dataclass(frozen=True)
class QubitSymbol:
    """Degree-one sphere function c0 + c.n."""

    c0: float
    c: np.ndarray


def upper_symbol(a) -> QubitSymbol:
    """Upper symbol of a 2x2 Hermitian operator.

    For A = alpha*I + beta.sigma the symbol is 2*alpha + 6*beta.n,
    the unique degree-one function averaging back to A.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (2, 2):
        raise ShapeMismatchError(f"expected a 2x2 matrix, got shape {a.shape}")
    a = check_hermitian(a, name="upper_symbol")
    c0 = float(a.trace().real)
    c = 3.0 * np.einsum("iab,ba->i", PAULI[1:], a).real
    return QubitSymbol(c0, c)


def symbol_values(sym: QubitSymbol, grid: SphereGrid) -> np.ndarray:
    """Evaluate a symbol at every grid node."""
    return sym.c0 + grid.normals @ sym.c


def quantize(values, grid: SphereGrid) -> np.ndarray:
    """Average a grid function against coherent projectors.

    Maps nonnegative functions to PSD operators; inverts
    :func:`upper_symbol` exactly on any grid of order >= 2.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != grid.weights.shape:
        raise ShapeMismatchError(
            f"values shape {values.shape} does not match grid size {len(grid)}")
    return np.einsum("m,m,mab->ab", grid.weights, values, _projector_stack(grid))


def _pauli_coeffs(a: np.ndarray) -> np.ndarray:
    # real 4x4 matrix c with A = sum_ab c[a,b] sigma_a (x) sigma_b
    t = a.reshape(2, 2, 2, 2)
    return np.einsum("ikjl,aji,blk->ab", t, PAULI, PAULI).real / 4.0


def _scale_matrix(grid: SphereGrid) -> np.ndarray:
    # per-node symbol factors (2, 6*nx, 6*ny, 6*nz), shape (M, 4)
    return np.column_stack([np.full(len(grid), 2.0), 6.0 * grid.normals])


def pair_symbol_values(a, grid_a: SphereGrid, grid_b: SphereGrid) -> np.ndarray:
    """Upper symbol of a two-qubit Hermitian operator on a product grid.

    Returns the (len(grid_a), len(grid_b)) table of values; product
    operators factor into products of single-qubit symbols.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (4, 4):
        raise ShapeMismatchError(f"expected a 4x4 matrix, got shape {a.shape}")
    a = check_hermitian(a, name="pair_symbol")
    coeffs = _pauli_coeffs(a)
    return _scale_matrix(grid_a) @ coeffs @ _scale_matrix(grid_b).T


def quantize_pair(values, grid_a: SphereGrid, grid_b: SphereGrid) -> np.ndarray:
    """Average a product-grid function against projector pairs."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(grid_a), len(grid_b)):
        raise ShapeMismatchError(
            f"values shape {values.shape} does not match grids "
            f"({len(grid_a)}, {len(grid_b)})")
    pa = _projector_stack(grid_a)
    pb = _projector_stack(grid_b)
    out = np.einsum("m,n,mn,mab,ncd->acbd", grid_a.weights, grid_b.weights,
                    values, pa, pb)
    return out.reshape(4, 4)


@dataclass(frozen=True)
class LiftResult:
    """Lifted joint state plus the quadrature residuals backing it."""

    state: DensityMatrix
    marginal_error_12: float
    marginal_error_23: float
    middle_gap: float
    min_symbol_12: float
    min_symbol_23: float


def coherent_lift_extension(pair: CompatiblePair, grids=None,
                            denom_floor: float = DENOM_FLOOR) -> LiftResult:
    """Joint state from classical conditioning of upper symbols.

    Evaluates both bipartite symbols on product grids, forms
    ``g12 * g23 / g2`` with ``g2`` the quadrature reduction of ``g12``
    over the first sphere, and quantizes.  Applies only when both
    symbols are nonnegative on the grid (NegativeSymbolError otherwise)
    and the middle symbol stays above ``denom_floor``
    (SmallDenominatorError).  The returned residuals are the trace-norm
    marginal errors of the lifted state; ``middle_gap`` is the largest
    nodewise disagreement between the two reductions of the symbols,
    which vanishes with the pair's compatibility gap.

    The quadrature is a fixed-order sum evaluated with numpy pairwise
    summation, so results are reproducible to well below 1e-12 across
    runs and node orderings.
    """
    if pair.dims != (2, 2, 2):
        raise ShapeMismatchError(
            f"coherent lift covers qubit chains only, got dims {pair.dims}")
    if grids is None:
        base = sphere_grid()
        grids = (base, base, base)
    g1, g2, g3 = grids
    vals12 = pair_symbol_values(pair.rho12.mat, g1, g2)
    vals23 = pair_symbol_values(pair.rho23.mat, g2, g3)
    for name, vals in (("rho12", vals12), ("rho23", vals23)):
        flat = int(vals.argmin())
        low = float(vals.ravel()[flat])
        if low < 0.0:
            raise NegativeSymbolError(
                f"{name} upper symbol is {low:.3e} at node {flat}; "
                "the lift does not apply", flat, low)
    mid_left = g1.weights @ vals12
    mid_right = vals23 @ g3.weights
    middle_gap = float(np.abs(mid_left - mid_right).max())
    node = int(mid_left.argmin())
    if mid_left[node] < denom_floor:
        raise SmallDenominatorError(
            f"middle symbol {mid_left[node]:.3e} below floor {denom_floor:g} "
            f"at node {node}", node, float(mid_left[node]))
    p1 = _projector_stack(g1)
    p2 = _projector_stack(g2)
    p3 = _projector_stack(g3)
    x1 = np.einsum("m,mn,mab->nab", g1.weights, vals12, p1)
    x3 = np.einsum("n,mn,nab->mab", g3.weights, vals23, p3)
    coeff = g2.weights / mid_left
    rho = np.einsum("m,mab,mcd,mef->acebdf", coeff, x1, p2, x3).reshape(8, 8)
    rho = hermitize(rho)
    rho = rho / rho.trace().real
    state = density(rho, (2, 2, 2))
    err12 = trace_norm(partial_trace(state.mat, (2, 2, 2), [0, 1])
                       - pair.rho12.mat)
    err23 = trace_norm(partial_trace(state.mat, (2, 2, 2), [1, 2])
                       - pair.rho23.mat)
    return LiftResult(
        state=state,
        marginal_error_12=float(err12),
        marginal_error_23=float(err23),
        middle_gap=middle_gap,
        min_symbol_12=float(vals12.min()),
        min_symbol_23=float(vals23.min()),
    )
