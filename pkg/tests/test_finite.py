import math

import numpy as np
import pytest

from smithwilson import CurveConfig, Instrument
from smithwilson.errors import UnsupportedOperationError, ValidationError
from smithwilson.finite import (
    condition_residuals,
    fit_finite_convergence,
    jump_size,
    wtilde,
    wtilde_coeffs,
    wtilde_coeffs_oracle,
    wtilde_scaled,
)
from smithwilson.fit import fit_exact

from conftest import ALPHA, EIOPA_TENORS, F_INF, synthetic_zcb_prices

T2 = 60.0
CFG = CurveConfig(ALPHA, F_INF, T2)


def zcbs():
    return [Instrument.zcb(f"z{int(t):02d}", t, p) for t, p in synthetic_zcb_prices()]


@pytest.fixture
def curve():
    return fit_finite_convergence(zcbs(), CFG)


def random_triples(n=50, seed=1):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        alpha = rng.uniform(0.05, 0.5)
        t2 = rng.uniform(20.0, 120.0)
        u = rng.uniform(0.5, t2 - 0.5)
        out.append((u, t2, alpha))
    return out


# --- coefficients --------------------------------------------------------------

def test_closed_form_matches_oracle_reference_point():
    closed = wtilde_coeffs(10.0, 60.0, 0.1).as_array()
    oracle = wtilde_coeffs_oracle(10.0, 60.0, 0.1).as_array() * jump_size(60.0, 0.1)
    assert np.abs(closed - oracle).max() <= 1e-10 * np.abs(oracle).max()


@pytest.mark.parametrize("u,t2,alpha", random_triples())
def test_closed_form_matches_oracle_random(u, t2, alpha):
    closed = wtilde_coeffs(u, t2, alpha)
    oracle = wtilde_coeffs_oracle(u, t2, alpha, jump=jump_size(t2, alpha))
    ref = oracle.as_array()
    assert np.abs(closed.as_array() - ref).max() <= 1e-10 * np.abs(ref).max()
    assert condition_residuals(closed, u, t2, alpha, jump_size(t2, alpha)).max() <= 1e-12
    assert condition_residuals(oracle, u, t2, alpha, jump_size(t2, alpha)).max() <= 1e-12


@pytest.mark.parametrize("u,t2,alpha", [(17.37, 119.58, 0.41), (7.14, 76.51, 0.49), (0.001, 150.0, 1.0), (149.99, 150.0, 1.0)])
def test_oracle_stable_for_large_alpha_t2(u, t2, alpha):
    # the raw conditions at t2 are nearly parallel here; the oracle must still solve them
    jump = jump_size(t2, alpha)
    oracle = wtilde_coeffs_oracle(u, t2, alpha, jump=jump)
    closed = wtilde_coeffs(u, t2, alpha)
    ref = oracle.as_array()
    assert np.abs(closed.as_array() - ref).max() <= 1e-10 * np.abs(ref).max()
    assert condition_residuals(oracle, u, t2, alpha, jump).max() <= 1e-12


def test_d0_zero_and_a0_minus_b0():
    u = np.linspace(0.5, 59.5, 40)
    k = wtilde_coeffs(u, 60.0, 0.1)
    assert np.all(k.d0 == 0.0)
    np.testing.assert_array_equal(k.a0, -k.b0)


def test_boundary_invariants_at_t2():
    a, t2 = 0.1, 60.0
    k = wtilde_coeffs(np.array([1.0, 20.0, 59.0]), t2, a)
    lhs1 = -k.a1 * a * math.exp(-a * t2) + k.b1 * a * math.exp(a * t2) + k.c1
    lhs2 = k.a1 * math.exp(-a * t2) + k.b1 * math.exp(a * t2)
    assert np.abs(lhs1).max() <= 1e-12 * np.abs(k.c1).max()
    assert np.abs(lhs2).max() <= 1e-12 * np.abs(k.b1 * math.exp(a * t2)).max()


def test_oracle_is_linear_in_jump():
    one = wtilde_coeffs_oracle(7.0, 40.0, 0.2).as_array()
    two = wtilde_coeffs_oracle(7.0, 40.0, 0.2, jump=2.0).as_array()
    np.testing.assert_allclose(two, 2 * one, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("u", [0.0, -1.0, 60.0, 61.0])
def test_knot_outside_domain(u):
    with pytest.raises(ValidationError):
        wtilde_coeffs(u, 60.0, 0.1)
    with pytest.raises(ValidationError):
        wtilde_coeffs_oracle(u, 60.0, 0.1)


def test_coeffs_vectorised_match_scalar():
    u = np.array([3.0, 17.0])
    vec = wtilde_coeffs(u, 60.0, 0.1).as_array()
    for j, uj in enumerate(u):
        np.testing.assert_array_equal(vec[:, j], wtilde_coeffs(uj, 60.0, 0.1).as_array())


def test_verify_flag(monkeypatch):
    import smithwilson.finite as fin

    monkeypatch.setattr(fin, "VERIFY_COEFFS", True)
    fin.wtilde_coeffs(np.array([1.0, 30.0]), 60.0, 0.1)


# --- kernel ----------------------------------------------------------------------

def test_kernel_zero_at_origin():
    for u in (0.5, 10.0, 59.0):
        assert wtilde(0.0, u, T2, CFG) == 0.0
        assert wtilde_scaled(0.0, u, T2, ALPHA, order=2) == pytest.approx(0.0, abs=1e-15)


def test_kernel_oracle_value_at_origin():
    k = wtilde_coeffs_oracle(12.0, T2, ALPHA)
    assert abs(k.a0 + k.b0 + k.d0) <= 1e-12 * abs(k.a0)


def test_kernel_continuity_at_knot():
    u, eps = 15.0, 1e-7
    assert abs(wtilde(u - eps, u, T2, CFG) - wtilde(u + eps, u, T2, CFG)) <= 1e-9
    # one-sided limits: the left piece evaluated one ulp below u, the right piece at u
    below = np.nextafter(u, 0.0)
    for order in (0, 1, 2):
        left = wtilde_scaled(below, u, T2, ALPHA, order)
        right = wtilde_scaled(u, u, T2, ALPHA, order)
        assert abs(left - right) <= 1e-12


def test_kernel_third_derivative_jump():
    u, eps = 15.0, 1e-9
    jump = wtilde_scaled(u + eps, u, T2, ALPHA, 3) - wtilde_scaled(u - eps, u, T2, ALPHA, 3)
    assert jump == pytest.approx(ALPHA**3 * jump_size(T2, ALPHA), rel=1e-6)


def test_kernel_asymmetric():
    assert abs(wtilde(5.0, 20.0, T2, CFG) - wtilde(20.0, 5.0, T2, CFG)) > 1e-3


def test_kernel_flat_at_t2():
    for u in (2.0, 30.0, 59.0):
        assert abs(wtilde_scaled(T2, u, T2, ALPHA, 1)) <= 1e-12
        assert abs(wtilde_scaled(T2, u, T2, ALPHA, 2)) <= 1e-12


def test_kernel_domain():
    with pytest.raises(ValidationError):
        wtilde(61.0, 5.0, T2, CFG)
    with pytest.raises(ValueError):
        wtilde_scaled(1.0, 5.0, T2, ALPHA, order=4)


def test_kernel_approaches_classic_shape_for_large_t2():
    # documented, not asserted as a proportionality: compare normalised shapes only
    from smithwilson.kernel import wilson_h

    t = np.linspace(0.5, 40.0, 30)
    p = CurveConfig(ALPHA, 0.0)
    for u in (5.0, 20.0):
        wt = wtilde_scaled(t, u, 500.0, ALPHA)
        wc = wilson_h(t, u, p)
        np.testing.assert_allclose(wt / wt[-1], wc / wc[-1], rtol=1e-9)


# --- fitting ---------------------------------------------------------------------

def test_flat_inputs_give_flat_curve():
    ins = [Instrument.zcb(f"z{t}", t, math.exp(-F_INF * t)) for t in (1.0, 5.0, 10.0)]
    c = fit_finite_convergence(ins, CFG)
    assert np.abs(c.zeta).max() <= 1e-15
    np.testing.assert_allclose(c.forward_instantaneous(np.linspace(0, 80, 17)), F_INF, rtol=1e-13)


def test_zcb_fit_reprices_and_converges(curve):
    for t, p in synthetic_zcb_prices():
        assert abs(curve.price(t) - p) <= 1e-10
    assert abs(curve.forward_instantaneous(T2) - F_INF) <= 1e-8


def test_forward_slope_vanishes_at_t2(curve):
    h = 1e-4
    slope = (curve.forward_instantaneous(T2) - curve.forward_instantaneous(T2 - 2 * h)) / (2 * h)
    assert abs(slope) <= 1e-6


def test_natural_condition_at_origin(curve):
    g = lambda t: math.exp(F_INF * t) * curve.price(t)
    h = 1e-3
    # second-order one-sided stencil
    d2 = (2 * g(0.0) - 5 * g(h) + 4 * g(2 * h) - g(3 * h)) / h**2
    assert abs(d2) <= 1e-6


@pytest.mark.parametrize("point", [1.0, 5.0, 12.0, 20.0, T2])
def test_c2_across_knots_and_t2(curve, point):
    lnp = lambda t: math.log(curve.price(t))
    jumps = []
    for h in (1e-2, 1e-3, 1e-4):
        d1l = (lnp(point) - lnp(point - h)) / h
        d1r = (lnp(point + h) - lnp(point)) / h
        d2l = (lnp(point) - 2 * lnp(point - h) + lnp(point - 2 * h)) / h**2
        d2r = (lnp(point + 2 * h) - 2 * lnp(point + h) + lnp(point)) / h**2
        jumps.append((abs(d1l - d1r), abs(d2l - d2r)))
    # differences shrink with h (no jump in value, slope or curvature)
    assert jumps[-1][0] <= 1e-5 and jumps[-1][1] <= 1e-4
    assert jumps[-1][0] < jumps[0][0] or jumps[0][0] <= 1e-9


def test_piecewise_four_dimensional(curve):
    knots = [0.0] + [float(t) for t in EIOPA_TENORS] + [T2]
    for lo, hi in zip(knots, knots[1:]):
        t = np.linspace(lo, hi, 10)[1:-1]
        g = np.exp(F_INF * t) * curve.price(t)
        basis = np.column_stack([np.exp(ALPHA * t), np.exp(-ALPHA * t), t, np.ones_like(t)])
        coef, *_ = np.linalg.lstsq(basis, g, rcond=None)
        assert np.abs(basis @ coef - g).max() <= 1e-9


def test_lambda_rescaling_invariance(curve):
    grid = curve.grid
    K = wtilde(grid[:, None], grid[None, :], T2, CFG)
    rhs = np.array([p for _, p in synthetic_zcb_prices()]) - np.exp(-F_INF * grid)
    lam = np.random.default_rng(9).uniform(-3.0, 3.0, grid.size)
    lam[np.abs(lam) < 0.1] = 0.5
    zeta = np.linalg.solve(K * lam[None, :], rhs)
    mesh = np.linspace(0.0, T2, 61)
    rescaled = np.exp(-F_INF * mesh) + (wtilde(mesh[:, None], grid[None, :], T2, CFG) * lam) @ zeta
    assert np.abs(rescaled - curve.price(mesh)).max() <= 1e-12


def test_swap_fit_reprices(swaps_all):
    c = fit_finite_convergence(swaps_all, CFG)
    for ins in swaps_all:
        assert abs(c.instrument_value(ins) - ins.price) <= 1e-10
    assert abs(c.forward_instantaneous(T2) - F_INF) <= 1e-8


def test_large_t2_tends_to_classic(swaps_all, config):
    ref = fit_exact(swaps_all, config)
    mesh = np.linspace(0.0, 60.0, 121)
    errs = []
    for t2 in (100.0, 200.0, 400.0):
        c = fit_finite_convergence(swaps_all, CurveConfig(ALPHA, F_INF, t2))
        errs.append(np.abs(c.price(mesh) - ref.price(mesh)).max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] <= 1e-12


def test_permutation_invariance():
    ins = zcbs()
    a = fit_finite_convergence(ins, CFG)
    b = fit_finite_convergence(ins[::-1], CFG)
    mesh = np.linspace(0, 70, 29)
    np.testing.assert_array_equal(a.price(mesh), b.price(mesh))


def test_rejects_cashflow_at_t2():
    ins = zcbs() + [Instrument.zcb("late", T2, 0.3)]
    with pytest.raises(ValidationError, match="late"):
        fit_finite_convergence(ins, CFG)


def test_rejects_weighted():
    ins = zcbs()
    ins[3] = ins[3].with_weight(10.0)
    with pytest.raises(UnsupportedOperationError):
        fit_finite_convergence(ins, CFG)


def test_requires_t2(config):
    with pytest.raises(ValidationError):
        fit_finite_convergence(zcbs(), config)
    with pytest.raises(ValidationError):
        fit_finite_convergence([], CFG)
