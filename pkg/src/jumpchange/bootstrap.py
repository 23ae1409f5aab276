"""Multiplier bootstrap for the sequential tail statistics.

A bootstrap replicate reweights the centered indicators
``1{Delta_j X in I(z)} - eta_n(z)`` with i.i.d. multipliers of mean 0 and
variance 1; no new paths are simulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _engine, _rng
from .estimator import IncrementGrid, _indicators, build_prefix, grid_index
from .kernel import ZGrid

__all__ = [
    "Multiplier",
    "RADEMACHER",
    "STANDARD_NORMAL",
    "bounded_custom",
    "get_multiplier",
    "ThresholdConfig",
    "hat_g_n",
    "hat_h_n",
    "hat_h_sup",
    "bootstrap_sup_draws",
    "bootstrap_quantile",
    "threshold_lambda",
]


@dataclass(frozen=True)
class Multiplier:
    """A mean-0, variance-1 multiplier law."""

    name: str
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    bound: Optional[float] = None

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        xi = np.asarray(self.sampler(rng, n), dtype=float)
        if xi.shape != (n,):
            raise ValueError(f"multiplier sampler returned shape {xi.shape}, expected ({n},)")
        if self.bound is not None and np.any(np.abs(xi) > self.bound):
            raise ValueError(f"multiplier draw exceeds declared bound {self.bound}")
        return xi


def _rademacher(rng, n):
    return rng.integers(0, 2, size=n).astype(float) * 2.0 - 1.0


def _normal(rng, n):
    return rng.standard_normal(n)


RADEMACHER = Multiplier("rademacher", _rademacher, bound=1.0)
STANDARD_NORMAL = Multiplier("normal", _normal)


def bounded_custom(name: str, sampler, bound: float) -> Multiplier:
    """Wrap a user sampler ``(rng, n) -> array``; must have mean 0, variance 1."""
    if not bound > 0:
        raise ValueError("bound must be positive")
    return Multiplier(name, sampler, float(bound))


def get_multiplier(kind) -> Multiplier:
    if isinstance(kind, Multiplier):
        return kind
    table = {"rademacher": RADEMACHER, "normal": STANDARD_NORMAL, "gaussian": STANDARD_NORMAL}
    try:
        return table[str(kind).lower()]
    except KeyError:
        raise ValueError(f"unknown multiplier {kind!r}; use rademacher or normal") from None


@dataclass(frozen=True)
class ThresholdConfig:
    alpha: float = 0.1
    r: float = 0.01
    B: int = 200
    multiplier: Multiplier = RADEMACHER
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 < self.r <= 1:
            raise ValueError("r must lie in (0, 1]")
        if int(self.B) != self.B or self.B < 1:
            raise ValueError("B must be a positive integer")
        object.__setattr__(self, "multiplier", get_multiplier(self.multiplier))


def _check_xi(grid, xi):
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (grid.n,):
        raise ValueError(f"need {grid.n} multipliers, got shape {xi.shape}")
    return xi


def hat_g_n(grid: IncrementGrid, xi, theta: float, z: float) -> float:
    """``k_n^{-1/2} sum_{j <= floor(n theta)} xi_j (1{Delta_j X in I(z)} - eta_n(z))``."""
    xi = _check_xi(grid, xi)
    stats = build_prefix(grid, ZGrid([z]), weights=xi)
    j = grid_index(grid.n, theta)
    # n * (weighted count) - N * (weight sum) keeps the xi = 1 centering exact
    n = grid.n
    numer = n * stats.prefix[j, 0] - stats.totals[0] * stats.weight_prefix[j]
    return float(numer / n / math.sqrt(grid.k_n))


def hat_h_n(grid: IncrementGrid, xi, kappa: float, theta: float, z: float) -> float:
    """``G^(kappa, z) - (kappa / theta) G^(theta, z)`` with ``0/0 = 1``."""
    if kappa > theta:
        raise ValueError(f"need kappa <= theta, got {kappa} > {theta}")
    ratio = 1.0 if theta == 0 else kappa / theta
    return hat_g_n(grid, xi, kappa, z) - ratio * hat_g_n(grid, xi, theta, z)


def _sups_for(ind, totals, xi, m, n, k_n):
    # integer numerators V = n * (weighted count) - N * (weight sum), scaled back
    raw = _engine.weighted_sups(ind, totals, xi, m)
    return raw / (n * math.sqrt(k_n))


def hat_h_sup(grid: IncrementGrid, xi, theta_hat: float, zgrid: ZGrid, per_z: bool = False):
    """``sup_z sup_{0 <= kappa <= theta' <= theta_hat} |H^_n(kappa, theta', z)|``.

    ``theta_hat`` is evaluated on the grid ``floor(n theta_hat) / n``.  With
    ``per_z=True`` the per-column suprema are returned instead of their max.
    """
    xi = _check_xi(grid, xi)
    if not isinstance(zgrid, ZGrid):
        zgrid = ZGrid(zgrid)
    m = grid_index(grid.n, theta_hat)
    ind = np.ascontiguousarray(_indicators(grid.increments, zgrid.as_array()))
    totals = ind.sum(axis=0).astype(float)
    sups = _sups_for(ind, totals, xi, m, grid.n, grid.k_n)
    return sups if per_z else float(sups.max())


def bootstrap_sup_draws(
    grid: IncrementGrid,
    zgrid: ZGrid,
    theta: float,
    B: int,
    multiplier=RADEMACHER,
    seed=0,
    threads=None,
) -> np.ndarray:
    """``(B, |zgrid|)`` per-z bootstrap suprema at ``theta``.

    Replicate ``b`` draws its multipliers from the stream ``(seed, b)``, so
    the result does not depend on ``threads``.
    """
    multiplier = get_multiplier(multiplier)
    if not isinstance(zgrid, ZGrid):
        zgrid = ZGrid(zgrid)
    seed = _rng.resolve_seed(seed)
    n, k_n = grid.n, grid.k_n
    m = grid_index(n, theta)
    ind = np.ascontiguousarray(_indicators(grid.increments, zgrid.as_array()))
    totals = ind.sum(axis=0).astype(float)

    def one(b):
        xi = multiplier.draw(_rng.generator(seed, _rng.BOOTSTRAP, b), n)
        return _sups_for(ind, totals, xi, m, n, k_n)

    rows = _rng.parallel_map(one, range(int(B)), threads)
    return np.vstack(rows) if rows else np.empty((0, len(zgrid)))


def bootstrap_quantile(draws, level: float) -> float:
    """Pseudoinverse ``inf{x : F_B(x) >= level}`` of the empirical cdf."""
    arr = np.sort(np.asarray(draws, dtype=float).ravel())
    if arr.size == 0:
        raise ValueError("no bootstrap draws")
    if not 0 < level <= 1:
        raise ValueError("level must lie in (0, 1]")
    # guard against 0.95 * 200 = 190.00000000000003
    k = math.ceil(round(arr.size * level, 9))
    return float(arr[max(k, 1) - 1])


def threshold_lambda(
    grid: IncrementGrid,
    zgrid: ZGrid,
    theta_pre: float,
    cfg: ThresholdConfig = ThresholdConfig(),
    threads=None,
) -> float:
    """Data-driven threshold: the ``(1 - alpha)`` quantile of ``H^_n(theta_pre) ** r``."""
    if not 0 <= theta_pre <= 1:
        raise ValueError("theta_pre must lie in [0, 1]")
    draws = bootstrap_sup_draws(grid, zgrid, theta_pre, cfg.B, cfg.multiplier, cfg.seed, threads)
    powered = draws.max(axis=1) ** cfg.r
    return bootstrap_quantile(powered, 1.0 - cfg.alpha)
