"""Projective chain: the slope map, simulation, and exit times."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import lyapprod as lp
from lyapprod import edge_excess, edge_map, hk, hk_deriv, hk_inverse, softplus
from lyapprod.errors import NumericalError, ValidationError

# Anchors from tools/make_oracles.py (mpmath, 40 digits): direct evaluation
# of log((e^-k + e^x)/(1 + e^(x-k))) and its derivative/limit forms.
HK_ANCHORS = {
    (1.234, 7.3): 1.2318788990287873,
    (-3.5, 2.0): -1.8026651652878183,
}
HK_DERIV_AT_0_K3 = 0.90514825364486644
EDGE_MAP_175 = 1.9102241504380872


def test_hk_pointwise():
    for (x, k), want in HK_ANCHORS.items():
        assert hk(x, k) == pytest.approx(want, rel=1e-14)
    assert hk_deriv(0.0, 3.0) == pytest.approx(HK_DERIV_AT_0_K3, rel=1e-13)


def test_edge_map_pointwise():
    assert edge_map(1.75) == pytest.approx(EDGE_MAP_175, rel=1e-14)
    # y + log(1 + e^-y) = log(1 + e^y), so the excess is softplus(-y)
    assert edge_excess(1.75) == pytest.approx(EDGE_MAP_175 - 1.75, rel=1e-12)


def test_softplus_extremes_do_not_overflow():
    assert softplus(800.0) == pytest.approx(800.0)
    assert softplus(-800.0) == 0.0
    assert softplus(0.0) == pytest.approx(math.log(2.0), rel=1e-15)


def test_hk_is_odd_and_bounded_by_k():
    k = 4.0
    xs = np.linspace(-40, 40, 401)
    vals = hk(xs, k)
    np.testing.assert_allclose(hk(-xs, k), -vals, atol=1e-13)
    # the image is the open interval (-k, k); floats saturate at the ends
    assert np.all(np.abs(vals) <= k)
    inner = np.abs(xs) < 2 * k
    assert np.all(np.abs(vals[inner]) < k)


def test_hk_saturates_to_plus_minus_k():
    assert hk(60.0, 5.0) == pytest.approx(5.0, abs=1e-12)
    assert hk(-60.0, 5.0) == pytest.approx(-5.0, abs=1e-12)


@given(st.floats(-15, 15), st.floats(0.5, 20))
@settings(max_examples=100, deadline=None)
def test_hk_inverse_roundtrip(x, k):
    # conditioning degrades like e^(|x|-k) near saturation, hence the range
    u = hk(x, k)
    assert hk_inverse(u, k) == pytest.approx(x, abs=1e-7)


@given(st.floats(-15, 15), st.floats(0.5, 20))
@settings(max_examples=100, deadline=None)
def test_hk_strictly_increasing(x, k):
    eps = 1e-4
    assert hk(x + eps, k) > hk(x, k)
    assert hk_deriv(x, k) > 0.0


def test_hk_deriv_matches_finite_differences():
    xs = np.linspace(-8, 8, 33)
    h = 1e-6
    num = (hk(xs + h, 3.0) - hk(xs - h, 3.0)) / (2 * h)
    np.testing.assert_allclose(hk_deriv(xs, 3.0), num, atol=1e-9)


def test_hk_approaches_edge_map_near_the_left_wall():
    # With y = x + k fixed, h_k(x) + k -> edge_map(y) as k grows
    y = 1.3
    for k in (8.0, 12.0, 16.0):
        glued = hk(y - k, k) + k
        assert glued == pytest.approx(edge_map(y), abs=3 * math.exp(-k))


def test_chain_config_validation(gauss):
    with pytest.raises(ValidationError):
        lp.ChainConfig(k=-1.0, model=gauss, steps=100)
    with pytest.raises(ValidationError):
        lp.ChainConfig(k=2.0, model=gauss, steps=0)
    with pytest.raises(ValidationError):
        lp.ChainConfig(k=2.0, model=gauss, steps=100, burn_in=-1)


def test_simulate_x_histogram_covers_the_band(gauss):
    cfg = lp.ChainConfig(k=2.0, model=gauss, steps=50_000, burn_in=5_000, seed=1)
    tr = lp.simulate_x(cfg)
    binw = tr.edges[1] - tr.edges[0]
    assert tr.counts.sum() == cfg.steps
    assert tr.edges[0] <= -cfg.k and tr.edges[-1] >= cfg.k
    # |X| stays within k + max-step numerically
    dens = tr.counts / (cfg.steps * binw)
    mids = 0.5 * (tr.edges[:-1] + tr.edges[1:])
    assert dens[np.abs(mids) > cfg.k + 6].max(initial=0.0) == 0.0


def test_simulate_x_is_reproducible(gauss):
    cfg = lp.ChainConfig(k=3.0, model=gauss, steps=20_000, seed=42)
    a = lp.simulate_x(cfg, keep_path=True)
    b = lp.simulate_x(cfg, keep_path=True)
    np.testing.assert_array_equal(a.path, b.path)
    assert a.final_x == b.final_x


def test_simulate_x_path_stays_inside_the_image(gauss):
    cfg = lp.ChainConfig(k=2.5, model=gauss, steps=30_000, seed=5)
    tr = lp.simulate_x(cfg, keep_path=True)
    # one step past h_k's image (-k, k) plus one noise draw
    zmax = np.abs(tr.path[1:] - np.clip(tr.path[1:], -cfg.k, cfg.k)).max()
    assert zmax < 8.0


def test_ergodic_lyapunov_matches_operator_route(gauss):
    cfg = lp.ChainConfig(k=2.0, model=gauss, steps=10**6, burn_in=10**5, seed=3)
    est = lp.ergodic_lyapunov(cfg)
    sol = lp.solve_invariant(2.0, gauss)
    from lyapprod.operator import lyap_functional

    want = lyap_functional(sol.tail, 2.0)
    assert est.mean == pytest.approx(want, abs=4 * est.stderr)
    assert est.stderr < 2e-3


def test_simulate_y_drifts_like_a_random_walk(gauss):
    y = lp.simulate_y(gauss, 30_000, seed=2, checkpoints=(10_000, 20_000))
    # the final step is always reported alongside the requested checkpoints
    assert set(y.running_max) == {10_000, 20_000, 30_000}
    assert y.running_max[10_000] <= y.running_max[20_000] <= y.running_max[30_000]
    # null-recurrent upward escape: max grows, scale sqrt(n) within wide margins
    assert 10.0 < y.running_max[20_000] < 3_000.0
    assert y.below == 0 or y.above >= 0


def test_simulate_y_histogram_masses_add_up(gauss):
    steps = 25_000
    y = lp.simulate_y(gauss, steps, seed=8)
    assert int(y.counts.sum()) + y.below + y.above == steps


def test_exit_time_immediate_when_started_outside(gauss):
    res = lp.exit_time(4.0, gauss, x0=4.5, replicas=64, seed=0)
    assert res.mean == 0.0
    assert np.all(res.taus == 0)


def test_exit_time_means_grow_with_k(gauss):
    means = []
    for k in (4.0, 8.0, 16.0):
        res = lp.exit_time(k, gauss, replicas=400, seed=7)
        assert res.taus.shape == (400,)
        assert res.cap == int(1e4 * k * k)
        means.append(res.mean)
    assert means[0] < means[1] < means[2]


def test_exit_time_diffusive_magnitude(gauss):
    # E[tau_k] ~ k^2 within a factor comfortably below/above
    res = lp.exit_time(8.0, gauss, replicas=800, seed=1)
    assert 0.5 * 64 < res.mean < 8.0 * 64


def test_exit_time_cap_triggers_for_frozen_disorder():
    # sigma this small cannot move |X| to k within the 10^4 k^2 cap
    tiny = lp.Gaussian(0.0, 1e-6)
    with pytest.raises(NumericalError):
        lp.exit_time(4.0, tiny, replicas=8, seed=0)
