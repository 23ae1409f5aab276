"""Bootstrap tests for the presence of a gradual change.

``test_global`` tests ``DD(1) = 0`` over a whole z grid, ``test_local``
tests the same at a single level ``z0``.  Both reject when the statistic
reaches the ``(1 - alpha)`` bootstrap quantile.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import _rng
from .bootstrap import RADEMACHER, bootstrap_quantile, bootstrap_sup_draws, get_multiplier
from .estimator import IncrementGrid, build_prefix, sup_d_n, w_stat
from .kernel import ZGrid

__all__ = ["TestReport", "test_global", "test_local"]


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    kind: str
    statistic: float
    critical_value: float
    reject: bool
    p_value: float
    alpha: float
    B: int
    draws_summary: dict
    z: list
    multiplier: str
    n: int
    k_n: float
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _summary(draws):
    q = np.quantile(draws, [0.5, 0.9, 0.95, 0.99])
    return {
        "mean": float(np.mean(draws)),
        "sd": float(np.std(draws, ddof=1)) if draws.size > 1 else 0.0,
        "min": float(np.min(draws)),
        "max": float(np.max(draws)),
        "q50": float(q[0]),
        "q90": float(q[1]),
        "q95": float(q[2]),
        "q99": float(q[3]),
    }


def _report(kind, stat, draws, alpha, multiplier, grid, zs, seed):
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    crit = bootstrap_quantile(draws, 1.0 - alpha)
    p = (1 + int(np.count_nonzero(draws >= stat))) / (draws.size + 1)
    return TestReport(
        kind=kind,
        statistic=float(stat),
        critical_value=crit,
        reject=bool(stat >= crit),
        p_value=p,
        alpha=alpha,
        B=int(draws.size),
        draws_summary=_summary(draws),
        z=[float(z) for z in zs],
        multiplier=multiplier.name,
        n=grid.n,
        k_n=grid.k_n,
        seed=seed if isinstance(seed, int) else None,
    )


def test_global(
    grid: IncrementGrid,
    zgrid: ZGrid,
    alpha: float = 0.05,
    B: int = 200,
    multiplier=RADEMACHER,
    seed=0,
    threads=None,
) -> TestReport:
    """Reject no-change when ``sqrt(k_n) DD_n(1) >= q_{1-alpha}(H^_n(1))``."""
    multiplier = get_multiplier(multiplier)
    if not isinstance(zgrid, ZGrid):
        zgrid = ZGrid(zgrid)
    seed = _rng.resolve_seed(seed)
    stat = math.sqrt(grid.k_n) * float(sup_d_n(build_prefix(grid, zgrid))[-1])
    draws = bootstrap_sup_draws(grid, zgrid, 1.0, B, multiplier, seed, threads).max(axis=1)
    return _report("global", stat, draws, alpha, multiplier, grid, zgrid.values, seed)


def test_local(
    grid: IncrementGrid,
    z0: float,
    alpha: float = 0.05,
    B: int = 200,
    multiplier=RADEMACHER,
    seed=0,
    threads=None,
) -> TestReport:
    """Reject no-change at ``z0`` when ``W_n(z0) >= q_{1-alpha}(W^_n(z0))``."""
    if z0 == 0:
        raise ValueError("z0 must be non-zero")
    multiplier = get_multiplier(multiplier)
    seed = _rng.resolve_seed(seed)
    zgrid = ZGrid([z0])
    stat = w_stat(build_prefix(grid, zgrid), z0)
    draws = bootstrap_sup_draws(grid, zgrid, 1.0, B, multiplier, seed, threads)[:, 0]
    return _report("local", stat, draws, alpha, multiplier, grid, [z0], seed)


test_global.__test__ = False
test_local.__test__ = False
