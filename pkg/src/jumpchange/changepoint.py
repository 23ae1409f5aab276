"""Threshold-regularized estimator of the gradual change point."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import _rng
from .bootstrap import RADEMACHER, ThresholdConfig, get_multiplier, threshold_lambda
from .estimator import IncrementGrid, build_prefix, sup_d_n
from .kernel import ZGrid

__all__ = ["ChangePointEstimate", "estimate_theta", "adaptive_estimate"]

# sub-stream keys for the two bootstrap stages
STEP_INITIAL = 2
STEP_FINAL = 4


@dataclass(frozen=True)
class ChangePointEstimate:
    theta_hat: float
    lambda_used: float
    lambda_initial: float
    theta_initial: float
    lambda_final: float
    config: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _scaled_curve(grid, zgrid):
    return math.sqrt(grid.k_n) * sup_d_n(build_prefix(grid, zgrid))


def estimate_theta(grid: IncrementGrid, zgrid: ZGrid, lam: float, curve=None) -> float:
    """``(1/n) #{j : sqrt(k_n) DD_n(j/n) <= lam}``.

    Riemann sum on ``{j/n}`` of the indicator integral over ``[0, 1]``.
    ``curve`` may carry a precomputed ``sqrt(k_n) DD_n`` curve of length
    ``n + 1``.
    """
    if not lam >= 0:
        raise ValueError("threshold must be non-negative")
    if curve is None:
        curve = _scaled_curve(grid, zgrid)
    return int(np.count_nonzero(curve[1:] <= lam)) / grid.n


def adaptive_estimate(
    grid: IncrementGrid,
    zgrid: ZGrid,
    theta_pre: float = 0.1,
    alpha: float = 0.1,
    r: float = 0.01,
    B: int = 200,
    multiplier=RADEMACHER,
    seed=0,
    reuse_multipliers: bool = False,
    threads=None,
) -> ChangePointEstimate:
    """Two-stage estimate: bootstrap threshold at ``theta_pre``, estimate,
    bootstrap threshold again at the intermediate estimate, estimate.

    Each stage draws fresh multipliers unless ``reuse_multipliers``.
    """
    if not 0 < theta_pre < 1:
        raise ValueError("theta_pre must lie in (0, 1)")
    multiplier = get_multiplier(multiplier)
    seed = _rng.resolve_seed(seed)
    s_init = _rng.seed_sequence(seed, STEP_INITIAL)
    s_final = s_init if reuse_multipliers else _rng.seed_sequence(seed, STEP_FINAL)

    curve = _scaled_curve(grid, zgrid)
    cfg = ThresholdConfig(alpha=alpha, r=r, B=B, multiplier=multiplier, seed=s_init)
    lam_in = threshold_lambda(grid, zgrid, theta_pre, cfg, threads)
    theta_in = estimate_theta(grid, zgrid, lam_in, curve)
    cfg_fi = ThresholdConfig(alpha=alpha, r=r, B=B, multiplier=multiplier, seed=s_final)
    lam_fi = threshold_lambda(grid, zgrid, theta_in, cfg_fi, threads)
    theta_hat = estimate_theta(grid, zgrid, lam_fi, curve)
    return ChangePointEstimate(
        theta_hat=theta_hat,
        lambda_used=lam_fi,
        lambda_initial=lam_in,
        theta_initial=theta_in,
        lambda_final=lam_fi,
        config={
            "theta_pre": theta_pre,
            "alpha": alpha,
            "r": r,
            "B": int(B),
            "multiplier": multiplier.name,
            "zgrid": list(zgrid.values),
            "reuse_multipliers": reuse_multipliers,
            "n": grid.n,
            "delta_n": grid.delta_n,
        },
        seed=seed if isinstance(seed, int) else None,
    )
