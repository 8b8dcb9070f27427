import numpy as np
import pytest

from conftest import traced_pair
from margex.coherent import (
    PAULI,
    coherent_lift_extension,
    coherent_projector,
    pair_symbol_values,
    quantize,
    quantize_pair,
    sphere_grid,
    symbol_values,
    upper_symbol,
)
from margex.criteria import check_compatible
from margex.errors import (
    NegativeSymbolError,
    ShapeMismatchError,
    SmallDenominatorError,
)
from margex.linalg import hermitize, partial_trace
from margex.states import density, random_density


GRID = sphere_grid()


def random_hermitian2(rng):
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    return hermitize(g)


def near_mixed_pair(rng):
    g = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    delta = hermitize(g)
    delta -= np.trace(delta) / 8 * np.eye(8)
    # scale so both pair symbols keep a margin of 0.5 above zero
    d12 = partial_trace(delta, (2, 2, 2), [0, 1])
    d23 = partial_trace(delta, (2, 2, 2), [1, 2])
    dip = min(pair_symbol_values(d12, GRID, GRID).min(),
              pair_symbol_values(d23, GRID, GRID).min(), -1e-9)
    scale = min(0.5 / -dip, 0.06 / np.linalg.norm(delta, 2))
    delta *= scale
    r123 = np.eye(8) / 8 + delta
    assert np.linalg.eigvalsh(r123)[0] > 0
    rho12 = density(partial_trace(r123, (2, 2, 2), [0, 1]), (2, 2))
    rho23 = density(partial_trace(r123, (2, 2, 2), [1, 2]), (2, 2))
    return check_compatible(rho12, rho23)


# ---------------------------------------------------------------------------
# grid


def test_grid_weights_form_probability():
    assert GRID.weights.sum() == pytest.approx(1.0, abs=1e-13)
    assert GRID.weights.min() > 0.0


def test_grid_moments_match_sphere_averages():
    # uniform averages of monomials n_x^a n_y^b n_z^c
    n = GRID.normals
    cases = {
        (2, 0, 0): 1.0 / 3.0,
        (0, 2, 0): 1.0 / 3.0,
        (0, 0, 2): 1.0 / 3.0,
        (1, 1, 0): 0.0,
        (1, 0, 1): 0.0,
        (2, 2, 0): 1.0 / 15.0,
        (4, 0, 0): 1.0 / 5.0,
        (0, 0, 3): 0.0,
    }
    for (a, b, c), want in cases.items():
        got = float(GRID.weights @ (n[:, 0] ** a * n[:, 1] ** b * n[:, 2] ** c))
        assert got == pytest.approx(want, abs=1e-12), (a, b, c)


def test_grid_rejects_too_coarse():
    with pytest.raises(ValueError):
        sphere_grid(n_polar=0, n_azimuth=2)


def test_projector_properties():
    for i in range(8):
        p = coherent_projector(GRID.nodes[i])
        np.testing.assert_allclose(p, p.conj().T, atol=1e-15)
        assert np.trace(p).real == pytest.approx(1.0, abs=1e-14)
        np.testing.assert_allclose(p @ p, p, atol=1e-14)
        bloch = [np.trace(p @ PAULI[j]).real for j in (1, 2, 3)]
        np.testing.assert_allclose(bloch, GRID.normals[i], atol=1e-13)


def test_projector_resolution_of_identity():
    total = sum(w * coherent_projector(pt)
                for w, pt in zip(GRID.weights, GRID.nodes))
    np.testing.assert_allclose(total, np.eye(2) / 2, atol=1e-13)


# ---------------------------------------------------------------------------
# symbols


def test_upper_symbol_round_trip(rng):
    for _ in range(10):
        a = random_hermitian2(rng)
        back = quantize(symbol_values(upper_symbol(a), GRID), GRID)
        np.testing.assert_allclose(back, a, atol=1e-10)


def test_upper_symbol_components(rng):
    a = random_hermitian2(rng)
    sym = upper_symbol(a)
    assert sym.c0 == pytest.approx(np.trace(a).real, abs=1e-12)
    for i in (1, 2, 3):
        assert sym.c[i - 1] == pytest.approx(3 * np.trace(a @ PAULI[i]).real,
                                             abs=1e-12)


def test_upper_symbol_rejects_wrong_shape():
    with pytest.raises(ShapeMismatchError):
        upper_symbol(np.eye(3))


def test_pair_symbol_round_trip(rng):
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    a = hermitize(g)
    values = pair_symbol_values(a, GRID, GRID)
    back = quantize_pair(values, GRID, GRID)
    np.testing.assert_allclose(back, a, atol=1e-10)


def test_pair_symbol_of_identity_is_one():
    values = pair_symbol_values(np.eye(4) / 4, GRID, GRID)
    np.testing.assert_allclose(values, np.ones_like(values), atol=1e-13)


# ---------------------------------------------------------------------------
# the lift


def test_lift_extends_near_mixed_pairs(rng):
    for _ in range(5):
        pair = near_mixed_pair(rng)
        res = coherent_lift_extension(pair)
        assert res.state.dims == (2, 2, 2)
        w = np.linalg.eigvalsh(res.state.mat)
        assert w[0] >= -1e-9
        assert res.marginal_error_12 <= 1e-6
        assert res.marginal_error_23 <= 1e-6
        assert res.min_symbol_12 > 0.0
        assert res.min_symbol_23 > 0.0


def test_lift_middle_reduction_consistent(rng):
    pair = near_mixed_pair(rng)
    res = coherent_lift_extension(pair)
    got2 = partial_trace(res.state.mat, (2, 2, 2), [1])
    np.testing.assert_allclose(got2, pair.rho2.mat, atol=1e-10)
    assert res.middle_gap <= 1e-10


def test_lift_exact_on_product_of_mixed():
    eye = density(np.eye(4) / 4, (2, 2))
    pair = check_compatible(eye, eye)
    res = coherent_lift_extension(pair)
    np.testing.assert_allclose(res.state.mat, np.eye(8) / 8, atol=1e-12)


def test_lift_rejects_large_bloch_radius():
    lopsided = density(np.diag([0.95, 0.05]))
    rho12 = density(np.kron(lopsided.mat, np.eye(2) / 2), (2, 2))
    rho23 = density(np.eye(4) / 4, (2, 2))
    pair = check_compatible(rho12, rho23)
    with pytest.raises(NegativeSymbolError) as info:
        coherent_lift_extension(pair)
    assert info.value.value < 0.0


def test_lift_rejects_small_denominator():
    eye = density(np.eye(4) / 4, (2, 2))
    pair = check_compatible(eye, eye)
    # identity symbols are exactly 1; an absurd floor must trip the guard
    with pytest.raises(SmallDenominatorError):
        coherent_lift_extension(pair, denom_floor=1.5)


def test_lift_needs_qubit_dims(rng):
    pair, _ = traced_pair(rng, dims=(2, 3, 2))
    with pytest.raises(ShapeMismatchError):
        coherent_lift_extension(pair)
