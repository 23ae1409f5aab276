import math

import numpy as np
import pytest
from scipy import stats

from jumpchange import (
    ConstantKernel,
    ContinuousPart,
    PathConfig,
    PowerTail,
    SimKernel,
    add_continuous,
    exact_halfstable_increment,
    simulate_path,
    strip_continuous,
)
from jumpchange.kernel import SeparableKernel
from jumpchange.simulate import dropped_small_jump_mass, halfstable_scale


def cfg(**kw):
    base = dict(n=2000, delta_n=1 / 100, kernel=SimKernel(), seed=7)
    base.update(kw)
    return PathConfig(**base)


def test_deterministic():
    a = simulate_path(cfg())
    b = simulate_path(cfg())
    assert np.array_equal(a.values, b.values)
    assert a.provenance == b.provenance


def test_seed_changes_path():
    assert not np.array_equal(simulate_path(cfg(seed=1)).values, simulate_path(cfg(seed=2)).values)


def test_shape_and_start():
    p = simulate_path(cfg(n=123))
    assert p.values.shape == (124,)
    assert p.values[0] == 0.0
    assert p.k_n == pytest.approx(1.23)
    np.testing.assert_allclose(p.times, np.arange(124) / 100)


def test_zero_tail_gives_zero_path():
    k = ConstantKernel(PowerTail(0.0, 0.5))
    p = simulate_path(cfg(kernel=k))
    assert np.all(p.values == 0.0)


def test_subordinator_paths_non_decreasing():
    p = simulate_path(cfg(kernel=SimKernel(0.4, 50.0, 1.0)))
    assert np.all(np.diff(p.values) >= 0)


def test_two_sided_kernel_has_negative_jumps():
    p = simulate_path(cfg(kernel=ConstantKernel(PowerTail(1.0, 0.8, two_sided=True))))
    inc = p.increments()
    assert inc.min() < 0 < inc.max()


def test_errors():
    with pytest.raises(ValueError, match="invertible"):
        simulate_path(cfg(kernel=SeparableKernel(lambda y: 1.0, lambda z: np.exp(-np.abs(z)))))
    with pytest.raises(ValueError, match="1e9"):
        simulate_path(cfg(kernel=ConstantKernel(PowerTail(1e12, 0.5)), trunc_eps=1e-6))
    for bad in (dict(n=0), dict(delta_n=0.0), dict(subsample=0), dict(trunc_eps=0.0)):
        with pytest.raises(ValueError):
            cfg(**bad)


def test_truncation_bias_reported_and_small():
    p = simulate_path(cfg())
    bias = p.provenance["truncation_bias"]
    assert bias["per_subincrement_max"] < 1e-3 * 1 / 100
    # closed form for gamma = 1: (eps / pi)^(1/2) per unit time
    assert dropped_small_jump_mass(SimKernel(), 0.5, 1e-4) == pytest.approx(math.sqrt(1e-4 / math.pi))


def test_dropped_mass_quadrature_matches_closed_form():
    k = SimKernel()

    class Generic(ConstantKernel):
        pass

    g = Generic(lambda z: np.where(np.asarray(z) > 0, 1 / np.sqrt(np.pi * np.abs(z)), 0.0))
    assert dropped_small_jump_mass(g, 0.3, 1e-4) == pytest.approx(
        dropped_small_jump_mass(k, 0.3, 1e-4), rel=1e-6
    )


def test_empirical_tail_matches_integrated_tail():
    # one long path, gamma = 1, k_n = 50
    k = SimKernel()
    p = simulate_path(PathConfig(n=22500, delta_n=1 / 450, kernel=k, seed=11))
    inc = p.increments()
    for z in (0.25, 1.0, 2.0):
        for theta in (0.5, 1.0):
            j = int(22500 * theta)
            u = np.count_nonzero(inc[:j] >= z) / p.k_n
            target = k.integrated_tail(theta, z)
            assert abs(u - target) <= 3 * math.sqrt(target / p.k_n)


# -- continuous part -----------------------------------------------------------------


def test_drift_only_shift():
    c = cfg(continuous=ContinuousPart(drift=1.0, vol=0.0))
    base = simulate_path(cfg())
    full = simulate_path(c)
    np.testing.assert_allclose(full.values - base.values, np.cumsum(np.r_[0.0, np.full(2000, 0.01)]),
                               rtol=0, atol=1e-12)


def test_brownian_increment_variance():
    c = cfg(kernel=ConstantKernel(PowerTail(0.0, 0.5)), continuous=ContinuousPart(0.0, 1.0), n=20000)
    inc = simulate_path(c).increments()
    n, d = inc.size, 1 / 100
    # sample variance of n Gaussians has sd sqrt(2/(n-1)) * variance
    assert abs(inc.var(ddof=1) - d) <= 3 * math.sqrt(2 / (n - 1)) * d


def test_strip_restores_exactly():
    c = cfg(continuous=ContinuousPart())
    with_c = simulate_path(c)
    plain = simulate_path(cfg())
    assert np.array_equal(strip_continuous(with_c).values, plain.values)
    again = add_continuous(plain, c)
    assert np.array_equal(again.values, with_c.values)
    with pytest.raises(ValueError):
        strip_continuous(plain)


# -- exact half-stable oracle ----------------------------------------------------------


def test_exact_zero_dt():
    assert exact_halfstable_increment(1.0, 0.0) == 0.0
    assert np.all(exact_halfstable_increment(1.0, 0.0, size=5) == 0.0)


def test_exact_rejects_varying_gamma():
    with pytest.raises(ValueError):
        exact_halfstable_increment(SimKernel(0.4, 2.0), 0.1)
    with pytest.raises(ValueError):
        exact_halfstable_increment(lambda y: 1 + y, 0.1)


def test_halfstable_scale_frozen():
    # Laplace exponent sqrt(gamma s) <-> Levy(c) exponent sqrt(2 c s) per unit time
    assert halfstable_scale(1.0, 1.0) == 0.5
    assert halfstable_scale(4.0, 0.5) == 0.5


def test_exact_tail_asymptotics():
    dt = 0.01
    draws = exact_halfstable_increment(1.0, dt, size=200_000, seed=3)
    for z in (0.5, 2.0):
        target = dt * math.sqrt(1 / (math.pi * z))
        p = np.mean(draws > z)
        se = math.sqrt(target / draws.size)
        assert abs(p - target) <= 4 * se + 0.02 * target


def test_exact_vs_compound_poisson_ks():
    n = 10_000
    cp = simulate_path(PathConfig(n=n, delta_n=1.0, kernel=SimKernel(), trunc_eps=1e-6, seed=5)).increments()
    ex = exact_halfstable_increment(1.0, 1.0, size=n, seed=5)
    assert stats.ks_2samp(cp, ex).pvalue > 0.01
