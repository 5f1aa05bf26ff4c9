"""Transfer operator on tail functions: kernel, fixed point, functionals."""
from __future__ import annotations

import numpy as np
import pytest

import lyapprod as lp
from lyapprod.operator import (
    apply_t,
    apply_t0,
    drift_functional,
    invariant_cdf_distance,
    l1_distance,
    lyap_functional,
    lyap_functional_forms,
    point_mass_tail,
    solve_invariant,
)
from lyapprod.errors import NumericalError, ValidationError

# Fixed-point regression values for Gaussian(0, 1) on the default grid,
# frozen from the dense direct solve (LU) and confirmed against the ergodic
# chain average within Monte Carlo error.
L_OP_K2 = 0.226236079547
L_OP_K5 = 0.066828578304


def test_grid_tail_validation():
    with pytest.raises(ValidationError):
        lp.GridTail(0.0, 1.0, np.array([1.0]))
    with pytest.raises(ValidationError):
        lp.GridTail(2.0, 1.0, np.array([1.0, 0.0]))
    with pytest.raises(ValidationError):
        lp.GridTail(0.0, 1.0, np.array([np.nan, 0.0]))


def test_grid_tail_geometry():
    G = lp.GridTail(-1.0, 3.0, np.linspace(1.0, 0.0, 9))
    assert G.n == 9
    assert G.spacing == pytest.approx(0.5)
    np.testing.assert_allclose(G.x, np.arange(-1.0, 3.01, 0.5))
    H = G.copy_with(G.values * 2.0)
    assert H.values[0] == 2.0 and G.values[0] == 1.0


def test_grid_tail_density_has_no_negative_zero():
    vals = np.ones(11)
    vals[5:] = 0.0
    G = lp.GridTail(0.0, 1.0, vals)
    d = G.density()
    assert np.all((d > 0.0) | (np.signbit(d) == False))  # noqa: E712


def test_check_probability_tail():
    x = np.linspace(-10, 10, 201)
    good = lp.GridTail(-10.0, 10.0, 1.0 / (1.0 + np.exp(x)))
    with pytest.raises(ValidationError):
        good.check_probability_tail(atol=1e-6)  # logistic ends at ~4.5e-5
    good.check_probability_tail(atol=1e-4)
    rising = lp.GridTail(-10.0, 10.0, np.linspace(0.0, 1.0, 201))
    with pytest.raises(ValidationError):
        rising.check_probability_tail(atol=1e-4)


def test_point_mass_tail_is_an_indicator():
    # right-continuous tail: P(X > x) drops to 0 at the atom itself
    G = point_mass_tail(-2.0, 2.0, 5, at=0.0)
    np.testing.assert_array_equal(G.values, [1.0, 1.0, 0.0, 0.0, 0.0])
    assert (G.left_limit, G.right_limit) == (1.0, 0.0)


def test_apply_t_on_a_point_mass_is_the_survival_function(gauss):
    # mu = delta_0 and h_k(0) = 0, so (T mu)((x, inf)) = P(z > x) exactly;
    # the jump costs one trapezoid cell, refining the grid shrinks it
    coarse = point_mass_tail(-15.0, 15.0, 3001, at=0.0)
    fine = point_mass_tail(-15.0, 15.0, 12001, at=0.0)
    err_c = np.max(np.abs(apply_t(coarse, 5.0, gauss).values - gauss.sf(coarse.x)))
    err_f = np.max(np.abs(apply_t(fine, 5.0, gauss).values - gauss.sf(fine.x)))
    assert err_c < 5e-3
    assert err_f < err_c / 2.5


def test_apply_t_validation(gauss):
    G = point_mass_tail(-15.0, 15.0, 301)
    with pytest.raises(ValidationError):
        apply_t(G, -1.0, gauss)
    with pytest.raises(ValidationError):
        apply_t(G, 20.0, gauss)  # grid does not cover [-(k+8), k+8]
    with pytest.raises(ValidationError):
        apply_t0(G, 5.0, gauss)  # point mass has limits (1, 0)


def test_apply_t0_is_the_homogeneous_part(gauss):
    x = np.linspace(-15.0, 15.0, 3001)
    bump = lp.GridTail(-15.0, 15.0, np.exp(-0.5 * x**2), 0.0, 0.0)
    full = apply_t(bump, 5.0, gauss)
    homo = apply_t0(bump, 5.0, gauss)
    np.testing.assert_allclose(full.values, homo.values, atol=1e-14)
    assert (homo.left_limit, homo.right_limit) == (0.0, 0.0)


def test_l1_distance_requires_matching_grids():
    a = lp.GridTail(0.0, 1.0, np.linspace(1, 0, 11))
    b = lp.GridTail(0.0, 2.0, np.linspace(1, 0, 11))
    with pytest.raises(ValidationError):
        l1_distance(a, b)
    assert l1_distance(a, a) == 0.0


def test_solve_invariant_direct(gauss, op5):
    assert op5.method == "direct"
    assert op5.residual < 1e-8
    tail = op5.tail
    tail.check_probability_tail(atol=1e-6)
    assert np.all(np.diff(tail.values) <= 1e-12)
    assert lyap_functional(tail, 5.0) == pytest.approx(L_OP_K5, rel=1e-6)


def test_solve_invariant_forms_agree_on_the_fixed_point(op5):
    f1, f2 = lyap_functional_forms(op5.tail, 5.0)
    assert f1 == pytest.approx(f2, abs=1e-7)
    # form_tol is enforceable exactly on (near-)invariant tails
    assert lyap_functional(op5.tail, 5.0, form_tol=1e-6) == pytest.approx(f1, rel=1e-9)


def test_solve_invariant_iterate_meets_direct(gauss):
    direct = solve_invariant(2.0, gauss)
    iterated = solve_invariant(2.0, gauss, method="iterate")
    assert iterated.method == "iterate"
    assert iterated.iterations > 1
    assert np.max(np.abs(direct.tail.values - iterated.tail.values)) < 1e-6
    assert lyap_functional(direct.tail, 2.0) == pytest.approx(L_OP_K2, rel=1e-6)


def test_solve_invariant_validation(gauss):
    with pytest.raises(ValidationError):
        solve_invariant(0.0, gauss)
    with pytest.raises(ValidationError):
        solve_invariant(2.0, gauss, method="newton")
    with pytest.raises(ValidationError):
        solve_invariant(8.0, gauss, grid=(-9.0, 9.0, 0.01))


def test_iterate_budget_exhaustion_raises(gauss):
    from lyapprod.errors import ConvergenceError

    with pytest.raises(ConvergenceError):
        solve_invariant(2.0, gauss, method="iterate", max_iter=3)


def test_form_identity_off_equilibrium(gauss):
    # On an arbitrary tail the two forms differ by exactly the drift term
    G = point_mass_tail(-15.0, 15.0, 3001, at=0.3)
    f1, f2 = lyap_functional_forms(G, 5.0)
    d = drift_functional(G, 5.0)
    assert abs(f1 - f2) > 1e-3  # genuinely off equilibrium
    assert f1 - f2 == pytest.approx(d, abs=1e-6)
    with pytest.raises(NumericalError):
        lyap_functional(G, 5.0, form_tol=1e-4)


def test_invariant_cdf_distance_against_the_chain(gauss):
    sol = solve_invariant(2.0, gauss)
    cfg = lp.ChainConfig(k=2.0, model=gauss, steps=2 * 10**5, burn_in=2 * 10**4, seed=0)
    traj = lp.simulate_x(cfg, keep_path=True)
    dist = invariant_cdf_distance(sol.tail, traj.path)
    assert dist < 0.03
