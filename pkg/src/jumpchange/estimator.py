"""Empirical tail statistics of a discretely observed path.

``U_n(theta, z)`` counts increments in ``I(z)`` among the first
``floor(n theta)`` and divides by ``k_n = n delta_n``; ``D_n`` contrasts the
partial count with its proportional share.  Suprema over
``0 <= kappa <= theta' <= theta`` are evaluated exactly on the attainment set
of the step function ``U_n`` (see :mod:`jumpchange._engine`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _engine
from .kernel import TailKernel, ZGrid
from .simulate import SamplePath

__all__ = [
    "IncrementGrid",
    "PrefixStats",
    "grid_index",
    "build_prefix",
    "u_n",
    "d_n",
    "sup_d_n",
    "sup_d_n_by_z",
    "w_stat",
    "gn_diagnostic",
    "hn_sup_diagnostic",
]


def grid_index(n: int, theta: float) -> int:
    """``floor(n * theta)``, robust to representation error in ``theta``."""
    if not 0 <= theta <= 1:
        raise ValueError(f"fraction must lie in [0, 1], got {theta}")
    return min(n, int(math.floor(n * theta + 1e-9)))


@dataclass(frozen=True)
class IncrementGrid:
    """Increments ``X_{j Delta} - X_{(j-1) Delta}``, ``j = 1..n``."""

    increments: np.ndarray
    delta_n: float

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=float)
        if inc.ndim != 1 or inc.size == 0:
            raise ValueError("need a non-empty one-dimensional increment vector")
        if not np.all(np.isfinite(inc)):
            raise ValueError("increments must be finite")
        if not self.delta_n > 0:
            raise ValueError("delta_n must be positive")
        object.__setattr__(self, "increments", inc)

    @classmethod
    def from_path(cls, path: SamplePath) -> "IncrementGrid":
        return cls(path.increments(), path.delta_n)

    @classmethod
    def from_values(cls, values, delta_n: float) -> "IncrementGrid":
        return cls(np.diff(np.asarray(values, dtype=float)), delta_n)

    @property
    def n(self) -> int:
        return self.increments.size

    @property
    def k_n(self) -> float:
        return self.n * self.delta_n


def _indicators(increments: np.ndarray, zvals: np.ndarray) -> np.ndarray:
    inc = increments[:, None]
    z = zvals[None, :]
    return np.where(z > 0, inc >= z, inc <= z).astype(np.uint8)


@dataclass(frozen=True)
class PrefixStats:
    """Per-z prefix sums of (weighted) jump indicators.

    ``prefix[j, k] = sum_{i <= j} w_i 1{Delta_i X in I(z_k)}`` with
    ``prefix[0] = 0``; ``weight_prefix[j] = sum_{i <= j} w_i``.  ``totals``
    are the unweighted counts, so ``eta = totals / n`` is always available.
    """

    zgrid: ZGrid
    n: int
    k_n: float
    indicators: np.ndarray
    prefix: np.ndarray
    weight_prefix: np.ndarray
    totals: np.ndarray
    weighted: bool = False
    weights: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def eta(self) -> np.ndarray:
        return self.totals / self.n

    def column(self, z) -> int:
        try:
            return self.zgrid.values.index(float(z))
        except ValueError:
            raise KeyError(f"z = {z} is not on the grid {self.zgrid.values}") from None


def build_prefix(grid: IncrementGrid, zgrid: ZGrid, weights=None) -> PrefixStats:
    """O(n |zgrid|) prefix tables for ``grid``."""
    if not isinstance(zgrid, ZGrid):
        zgrid = ZGrid(zgrid)
    ind = _indicators(grid.increments, zgrid.as_array())
    totals = ind.sum(axis=0).astype(float)
    n = grid.n
    if weights is None:
        w = None
        prefix = np.zeros((n + 1, len(zgrid)))
        np.cumsum(ind, axis=0, out=prefix[1:])
        wprefix = np.arange(n + 1, dtype=float)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,):
            raise ValueError(f"weights must have length n = {n}, got {w.shape}")
        prefix = np.zeros((n + 1, len(zgrid)))
        np.cumsum(ind * w[:, None], axis=0, out=prefix[1:])
        wprefix = np.concatenate([[0.0], np.cumsum(w)])
    return PrefixStats(
        zgrid=zgrid,
        n=n,
        k_n=grid.k_n,
        indicators=ind,
        prefix=prefix,
        weight_prefix=wprefix,
        totals=totals,
        weighted=w is not None,
        weights=w,
    )


def _require_unweighted(stats):
    if stats.weighted:
        raise ValueError("this statistic is defined for unit weights only")


def u_n(stats: PrefixStats, theta: float, k: int) -> float:
    """Sequential empirical tail integral ``U_n(theta, z_k)``."""
    _require_unweighted(stats)
    return float(stats.prefix[grid_index(stats.n, theta), k] / stats.k_n)


def d_n(stats: PrefixStats, kappa: float, theta: float, k: int) -> float:
    """``D_n(kappa, theta, z_k) = U_n(kappa) - (kappa / theta) U_n(theta)``."""
    if kappa > theta:
        raise ValueError(f"need kappa <= theta, got {kappa} > {theta}")
    ratio = 1.0 if theta == 0 else kappa / theta
    return u_n(stats, kappa, k) - ratio * u_n(stats, theta, k)


def sup_d_n_by_z(stats: PrefixStats) -> np.ndarray:
    """``(n + 1, |zgrid|)`` array: per-z sup of ``|D_n|`` over ``theta' <= j/n``."""
    _require_unweighted(stats)
    out = np.empty((stats.n + 1, len(stats.zgrid)))
    for k in range(len(stats.zgrid)):
        out[:, k] = _engine.sup_curve(np.ascontiguousarray(stats.prefix[:, k]))
    return out / stats.k_n


def sup_d_n(stats: PrefixStats, theta=None) -> np.ndarray:
    """The curve ``DD_n(j/n)``, ``j = 0..n``, or its values at ``theta``.

    ``DD_n(theta) = sup_z sup_{0 <= kappa <= theta' <= theta} |D_n(kappa, theta', z)|``
    is non-negative, non-decreasing and zero at ``theta = 0``.
    """
    curve = sup_d_n_by_z(stats).max(axis=1)
    if theta is None:
        return curve
    idx = [grid_index(stats.n, t) for t in np.atleast_1d(theta)]
    return curve[idx]


def w_stat(stats: PrefixStats, z0) -> float:
    """Local statistic ``sqrt(k_n) sup_C |D_n(kappa, theta, z0)|``."""
    _require_unweighted(stats)
    k = stats.column(z0)
    val = _engine.sup_upto(np.ascontiguousarray(stats.prefix[:, k]), stats.n) / stats.k_n
    return math.sqrt(stats.k_n) * val


def gn_diagnostic(stats: PrefixStats, kernel: TailKernel, theta: float, z) -> float:
    """``sqrt(k_n) (U_n(theta, z) - int_0^theta g(y, z) dy)`` for a known kernel."""
    k = stats.column(z)
    return math.sqrt(stats.k_n) * (u_n(stats, theta, k) - float(kernel.integrated_tail(theta, z)))


def hn_sup_diagnostic(
    stats: PrefixStats, kernel: TailKernel, theta: float, max_points: int = 1500
) -> float:
    """``sup_z sup_{kappa <= theta' <= theta} sqrt(k_n) |D_n - D|`` for a known kernel.

    ``D`` is continuous, so the candidate set pairs every grid coordinate
    ``i/n`` with both the value and the left limit of ``U_n`` there.  Large
    ``n`` is thinned to ``max_points`` evenly spaced coordinates.
    """
    _require_unweighted(stats)
    m = grid_index(stats.n, theta)
    if m == 0:
        return 0.0
    idx = np.unique(np.linspace(0, m, min(m, max_points) + 1).round().astype(int))
    x = idx / stats.n
    best = 0.0
    for k, z in enumerate(stats.zgrid.values):
        I = np.asarray(kernel.integrated_tail(x, z), dtype=float)
        U = stats.prefix[idx, k] / stats.k_n
        Uleft = stats.prefix[np.maximum(idx - 1, 0), k] / stats.k_n
        for Ut in (U, Uleft):
            for b in range(1, idx.size):
                ratio = x[: b + 1] / x[b]
                D = I[: b + 1] - ratio * I[b]
                for Uk in (U, Uleft):
                    Dn = Uk[: b + 1] - ratio * Ut[b]
                    if Ut is Uleft and Uk is U:
                        # kappa must stay strictly left of theta'
                        Dn = Dn[:b]
                        Dd = D[:b]
                    else:
                        Dd = D
                    if Dn.size:
                        best = max(best, float(np.max(np.abs(Dn - Dd))))
    return math.sqrt(stats.k_n) * best
