import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jumpchange import (
    IncrementGrid,
    PathConfig,
    SimKernel,
    ZGrid,
    build_prefix,
    d_n,
    simulate_path,
    sup_d_n,
    u_n,
    w_stat,
)
from jumpchange._engine import sup_curve, sup_upto
from jumpchange.estimator import gn_diagnostic, grid_index, hn_sup_diagnostic, sup_d_n_by_z
from jumpchange.kernel import ConstantKernel, PowerTail

from oracles import (
    brute_sup_curve,
    brute_sup_d_n,
    brute_w_stat,
    direct_d_n,
    random_increments,
    random_zgrid,
)


# -- prefix tables ---------------------------------------------------------------


def test_prefix_hand_count(tiny_grid):
    st_ = build_prefix(tiny_grid, ZGrid([1.0]))
    np.testing.assert_array_equal(st_.prefix[:, 0], [0, 0, 1, 1])
    assert st_.eta[0] == pytest.approx(1 / 3)


def test_prefix_negative_level(tiny_grid):
    st_ = build_prefix(tiny_grid, ZGrid([-0.25]))
    np.testing.assert_array_equal(st_.prefix[:, 0], [0, 0, 0, 1])


def test_prefix_zero_increments():
    g = IncrementGrid(np.zeros(10), 0.1)
    st_ = build_prefix(g, ZGrid([-1.0, 0.5]))
    assert np.all(st_.prefix == 0)


def test_prefix_ones_weights_equal_unweighted(tiny_grid):
    a = build_prefix(tiny_grid, ZGrid.pure_jump())
    b = build_prefix(tiny_grid, ZGrid.pure_jump(), weights=np.ones(3))
    np.testing.assert_array_equal(a.prefix, b.prefix)
    np.testing.assert_array_equal(a.weight_prefix, b.weight_prefix)


def test_prefix_weight_length(tiny_grid):
    with pytest.raises(ValueError):
        build_prefix(tiny_grid, ZGrid([1.0]), weights=np.ones(4))


def test_prefix_scaling_bilinear(tiny_grid):
    xi = np.array([0.3, -1.2, 2.0])
    a = build_prefix(tiny_grid, ZGrid([0.25, 1.0]), weights=xi)
    b = build_prefix(tiny_grid, ZGrid([0.25, 1.0]), weights=2.5 * xi)
    np.testing.assert_allclose(b.prefix, 2.5 * a.prefix, rtol=1e-15)


def test_grid_validation():
    with pytest.raises(ValueError):
        IncrementGrid(np.array([]), 0.1)
    with pytest.raises(ValueError):
        IncrementGrid(np.array([np.nan]), 0.1)
    with pytest.raises(ValueError):
        IncrementGrid(np.array([1.0]), 0.0)


def test_grid_index_robust():
    assert grid_index(10, 0.3) == 3
    assert grid_index(3, 2 / 3) == 2
    assert grid_index(10, 1.0) == 10
    with pytest.raises(ValueError):
        grid_index(10, 1.1)


# -- U_n and D_n -------------------------------------------------------------------


def test_u_n_examples(tiny_grid):
    st_ = build_prefix(tiny_grid, ZGrid([0.25, 1.0]))
    assert u_n(st_, 0.0, 1) == 0.0
    assert u_n(st_, 1.0, 1) == pytest.approx(0.5)
    assert u_n(st_, 1.0, 0) == pytest.approx(1.0)


def test_u_n_integer_counts_and_monotone_in_z(rng):
    g = IncrementGrid(rng.exponential(1.0, 500), 0.2)
    st_ = build_prefix(g, ZGrid.pure_jump())
    counts = st_.prefix[-1]
    assert np.all(counts == np.round(counts))
    vals = [u_n(st_, 1.0, k) for k in range(5)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_d_n_examples(tiny_grid):
    st_ = build_prefix(tiny_grid, ZGrid([1.0]))
    assert d_n(st_, 2 / 3, 1.0, 0) == pytest.approx(1 / 6)
    assert d_n(st_, 0.0, 1.0, 0) == 0.0
    assert d_n(st_, 0.4, 0.4, 0) == 0.0
    assert d_n(st_, 0.0, 0.0, 0) == 0.0
    with pytest.raises(ValueError):
        d_n(st_, 0.9, 0.5, 0)


def test_weighted_stats_refuse_u_n(tiny_grid):
    st_ = build_prefix(tiny_grid, ZGrid([1.0]), weights=np.ones(3))
    with pytest.raises(ValueError):
        u_n(st_, 1.0, 0)


# -- sup_d_n -----------------------------------------------------------------------


def test_sup_zero_increments():
    g = IncrementGrid(np.zeros(50), 0.1)
    assert np.all(sup_d_n(build_prefix(g, ZGrid.pure_jump())) == 0)


def test_sup_d_n_fuzz_exact(rng):
    for _ in range(120):
        n = int(rng.integers(1, 200))
        inc = random_increments(rng, n)
        zs = random_zgrid(rng)
        g = IncrementGrid(inc, float(rng.uniform(0.01, 1.0)))
        got = sup_d_n(build_prefix(g, ZGrid(zs)))
        assert np.array_equal(got, brute_sup_d_n(inc, zs, g.k_n))


def test_sup_d_n_properties(rng):
    for _ in range(30):
        n = int(rng.integers(1, 300))
        g = IncrementGrid(random_increments(rng, n), 0.05)
        curve = sup_d_n(build_prefix(g, ZGrid([0.1, 1.0])))
        assert curve[0] == 0.0
        assert np.all(curve >= 0) and np.all(np.diff(curve) >= 0)


def test_sup_d_n_dominates_direct_evaluation(rng):
    # any (kappa, theta') in the continuum gives a value no larger than the sup
    inc = random_increments(rng, 40, kind=0)
    g = IncrementGrid(inc, 0.5)
    curve = sup_d_n(build_prefix(g, ZGrid([0.25])))
    best = 0.0
    for th in rng.uniform(0, 1, 400):
        for ka in rng.uniform(0, th, 5):
            best = max(best, abs(direct_d_n(inc, 0.25, g.k_n, ka, th)))
    assert best <= curve[-1] * (1 + 1e-12)
    # and the sup is attained at a candidate pair, up to rounding
    assert curve[-1] > 0


def test_sup_d_n_at_theta(rng):
    g = IncrementGrid(random_increments(rng, 50, kind=0), 0.3)
    st_ = build_prefix(g, ZGrid([1.0]))
    curve = sup_d_n(st_)
    np.testing.assert_array_equal(sup_d_n(st_, [0.5, 1.0]), curve[[25, 50]])


def test_sup_by_z_max_is_curve(rng):
    g = IncrementGrid(random_increments(rng, 80), 0.3)
    st_ = build_prefix(g, ZGrid([0.1, 0.5, 2.0]))
    np.testing.assert_array_equal(sup_d_n_by_z(st_).max(axis=1), sup_d_n(st_))


def test_sup_d_n_speed():
    import time

    rng = np.random.default_rng(0)
    g = IncrementGrid(rng.exponential(0.05, 22500), 1 / 450)
    st_ = build_prefix(g, ZGrid.pure_jump())
    sup_d_n(st_)
    t = time.perf_counter()
    sup_d_n(st_)
    assert time.perf_counter() - t < 1.0


# -- engine -----------------------------------------------------------------------


@given(steps=st.lists(st.integers(-4, 4), min_size=0, max_size=80))
@settings(max_examples=300, deadline=None)
def test_engine_matches_brute_force(steps):
    V = np.concatenate([[0.0], np.cumsum(steps)]).astype(float)
    assert np.array_equal(sup_curve(V), brute_sup_curve(V))


@given(steps=st.lists(st.integers(0, 1), min_size=1, max_size=60), m=st.integers(0, 60))
@settings(max_examples=100, deadline=None)
def test_sup_upto_is_curve_value(steps, m):
    V = np.concatenate([[0.0], np.cumsum(steps)]).astype(float)
    m = min(m, V.size - 1)
    assert sup_upto(V, m) == sup_curve(V)[m]


# -- w_stat -------------------------------------------------------------------------


def test_w_stat_zero():
    g = IncrementGrid(np.zeros(30), 0.1)
    assert w_stat(build_prefix(g, ZGrid([1.0])), 1.0) == 0.0


def test_w_stat_equals_single_column_sup(rng):
    g = IncrementGrid(random_increments(rng, 120), 0.4)
    st_ = build_prefix(g, ZGrid([0.5]))
    assert w_stat(st_, 0.5) == math.sqrt(g.k_n) * sup_d_n(st_)[-1]


def test_w_stat_fuzz_exact(rng):
    for _ in range(80):
        n = int(rng.integers(1, 200))
        inc = random_increments(rng, n)
        z0 = float(rng.choice([-0.25, 0.1, 0.5, 1.0]))
        g = IncrementGrid(inc, float(rng.uniform(0.05, 1.0)))
        assert w_stat(build_prefix(g, ZGrid([z0])), z0) == brute_w_stat(inc, z0, g.k_n)


def test_w_stat_unknown_level(tiny_grid):
    with pytest.raises(KeyError):
        w_stat(build_prefix(tiny_grid, ZGrid([1.0])), 2.0)


# -- diagnostics --------------------------------------------------------------------


def test_gn_zero_kernel():
    g = IncrementGrid(np.zeros(20), 0.1)
    k = ConstantKernel(PowerTail(0.0, 0.5))
    st_ = build_prefix(g, ZGrid([1.0]))
    assert gn_diagnostic(st_, k, 1.0, 1.0) == 0.0
    assert hn_sup_diagnostic(st_, k, 1.0) == 0.0


def test_hn_diagnostic_zero_when_kernel_constant_and_counts_proportional():
    # jumps >= 1 at every other step: U_n is close to linear, D_n small
    inc = np.tile([1.0, 0.0], 50)
    g = IncrementGrid(inc, 1.0)
    k = ConstantKernel(PowerTail(0.5, 0.5))
    st_ = build_prefix(g, ZGrid([1.0]))
    assert hn_sup_diagnostic(st_, k, 1.0) <= math.sqrt(100) * 2 / 100


def test_gn_centering_over_paths():
    k = SimKernel()
    vals = []
    for s in range(200):
        p = simulate_path(PathConfig(n=2000, delta_n=1 / 40, kernel=k, seed=s))
        st_ = build_prefix(IncrementGrid.from_path(p), ZGrid([1.0]))
        vals.append(gn_diagnostic(st_, k, 1.0, 1.0))
    vals = np.asarray(vals)
    assert abs(vals.mean()) <= 3 * vals.std(ddof=1) / math.sqrt(vals.size)
    # Var G_n(1, z) -> int_0^1 g(y, z) dy
    target = k.integrated_tail(1.0, 1.0)
    assert abs(vals.var(ddof=1) - target) <= 4 * math.sqrt(2 / 199) * target
