"""Discretely observed jump paths whose compensator follows a TailKernel.

Sub-increments are compound Poisson: on each of ``m * n`` sub-intervals the
kernel is frozen at ``y = j / (m n)``, jumps with ``|z| >= trunc_eps`` arrive
with intensity ``g(y, trunc_eps) + g(y, -trunc_eps)`` and their sizes come
from inverting the tail at a uniform level.  Jumps below ``trunc_eps`` are
dropped; the dropped mean is reported as ``truncation_bias``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import integrate

from . import _rng
from .kernel import SimKernel, TailKernel

__all__ = [
    "ContinuousPart",
    "PathConfig",
    "SamplePath",
    "simulate_path",
    "add_continuous",
    "strip_continuous",
    "exact_halfstable_increment",
    "halfstable_scale",
    "dropped_small_jump_mass",
]

MAX_INTENSITY = 1e9
# sub-increments per indexed random stream
BLOCK = 1 << 16


@dataclass(frozen=True)
class ContinuousPart:
    """Drift ``b t`` plus ``sigma W_t``."""

    drift: float = 1.0
    vol: float = 1.0

    def __post_init__(self):
        if self.vol < 0:
            raise ValueError("volatility must be non-negative")


@dataclass(frozen=True)
class PathConfig:
    n: int
    delta_n: float
    kernel: TailKernel
    subsample: int = 15
    continuous: Optional[ContinuousPart] = None
    trunc_eps: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not self.delta_n > 0:
            raise ValueError("delta_n must be positive")
        if int(self.subsample) != self.subsample or self.subsample < 1:
            raise ValueError("subsample factor must be a positive integer")
        if not self.trunc_eps > 0:
            raise ValueError("trunc_eps must be positive")

    @property
    def k_n(self) -> float:
        return self.n * self.delta_n

    def describe(self) -> dict:
        return {
            "n": int(self.n),
            "delta_n": float(self.delta_n),
            "subsample": int(self.subsample),
            "trunc_eps": float(self.trunc_eps),
            "seed": int(self.seed),
            "kernel": self.kernel.describe(),
            "continuous": None
            if self.continuous is None
            else {"drift": self.continuous.drift, "vol": self.continuous.vol},
        }

    def digest(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SamplePath:
    """Observed levels ``X_0, ..., X_n`` on the grid ``i * delta_n``."""

    values: np.ndarray
    delta_n: float
    provenance: dict = field(default_factory=dict, compare=False)
    # levels before a continuous component was added, kept for exact removal
    base: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a path needs at least two observations")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        if not self.delta_n > 0:
            raise ValueError("delta_n must be positive")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def k_n(self) -> float:
        return self.n * self.delta_n

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.delta_n

    def increments(self) -> np.ndarray:
        return np.diff(self.values)


def dropped_small_jump_mass(kernel: TailKernel, y: float, trunc_eps: float) -> float:
    """Mean size per unit time of the jumps in ``(0, trunc_eps)``, both sides.

    Uses ``int_(0,e) |z| nu(dz) = int_0^e (g(y, u) - g(y, e)) du``; infinite
    for kernels of infinite variation.
    """
    if isinstance(kernel, SimKernel):
        # int_0^e (gamma / pi)^(1/2) (u^(-1/2) - e^(-1/2)) du
        return float(np.sqrt(kernel.gamma(y) * trunc_eps / np.pi))
    total = 0.0
    for sign in (1.0, -1.0):
        edge = float(kernel.tail(y, sign * trunc_eps))
        if edge == 0.0:
            continue
        val, _ = integrate.quad(
            lambda u: float(kernel.tail(y, sign * u)) - edge, 0.0, trunc_eps, limit=200
        )
        total += val
    return total


def _side_draws(kernel, rng, y, rate, dt, sign):
    counts = rng.poisson(rate * dt)
    total = int(counts.sum())
    if total == 0:
        return counts, np.empty(0)
    yy = np.repeat(y, counts)
    levels = (1.0 - rng.random(total)) * np.repeat(rate, counts)
    return counts, np.asarray(kernel.inverse_tail(yy, levels, sign), dtype=float)


def simulate_path(config: PathConfig) -> SamplePath:
    """Simulate ``X_0 = 0, X_{Delta}, ..., X_{n Delta}``.

    Deterministic in ``config.seed``: sub-increments are processed in fixed
    blocks, each with its own indexed random stream.
    """
    kernel = config.kernel
    n, m = int(config.n), int(config.subsample)
    total_steps = n * m
    dt = config.delta_n / m
    eps = config.trunc_eps
    seed = _rng.resolve_seed(config.seed)

    increments = np.zeros(n)
    for b, start in enumerate(range(0, total_steps, BLOCK)):
        stop = min(start + BLOCK, total_steps)
        j = np.arange(start + 1, stop + 1)
        y = j / total_steps
        pos = np.asarray(kernel.tail(y, eps), dtype=float) * np.ones_like(y)
        neg = np.asarray(kernel.tail(y, -eps), dtype=float) * np.ones_like(y)
        if np.max(pos) * dt > MAX_INTENSITY or np.max(neg) * dt > MAX_INTENSITY:
            raise ValueError("jump intensity per sub-interval exceeds 1e9; raise trunc_eps")
        if (np.any(pos > 0) or np.any(neg > 0)) and not kernel.has_inverse:
            raise ValueError(f"{type(kernel).__name__} has no invertible tail to sample from")
        rng = _rng.generator(seed, _rng.JUMPS, b)
        obs_index = (j - 1) // m
        for rate, sign in ((pos, 1), (neg, -1)):
            if not np.any(rate > 0):
                continue
            counts, sizes = _side_draws(kernel, rng, y, rate, dt, sign)
            if sizes.size:
                increments += np.bincount(
                    np.repeat(obs_index, counts), weights=sizes, minlength=n
                )
    values = np.concatenate([[0.0], np.cumsum(increments)])

    y_probe = np.linspace(0.0, 1.0, 21)
    masses = np.array([dropped_small_jump_mass(kernel, yy, eps) for yy in y_probe])
    provenance = {
        "config": config.digest(),
        "seed": seed if isinstance(seed, int) else repr(seed),
        "truncation_bias": {
            "per_subincrement_max": float(np.max(masses) * dt),
            "horizon_total": float(integrate.trapezoid(masses, y_probe) * config.k_n),
        },
    }
    path = SamplePath(values, config.delta_n, provenance)
    if config.continuous is not None:
        path = add_continuous(path, config)
    return path


def add_continuous(path: SamplePath, config: PathConfig) -> SamplePath:
    """Add ``b t + sigma W_t`` sampled exactly at the grid times."""
    part = config.continuous if config.continuous is not None else ContinuousPart()
    seed = _rng.resolve_seed(config.seed)
    rng = _rng.generator(seed, _rng.CONTINUOUS)
    n = path.n
    dW = rng.standard_normal(n) * math.sqrt(path.delta_n)
    steps = part.drift * path.delta_n + part.vol * dW
    values = path.values + np.concatenate([[0.0], np.cumsum(steps)])
    prov = dict(path.provenance, continuous={"drift": part.drift, "vol": part.vol})
    return SamplePath(values, path.delta_n, prov, base=path.values)


def strip_continuous(path: SamplePath) -> SamplePath:
    """Undo :func:`add_continuous`, restoring the previous levels exactly."""
    if path.base is None:
        raise ValueError("path carries no continuous component")
    prov = {k: v for k, v in path.provenance.items() if k != "continuous"}
    return SamplePath(path.base, path.delta_n, prov)


def halfstable_scale(gamma: float, dt: float) -> float:
    """Scale ``c`` with ``c / Z**2`` distributed as the subordinator at ``dt``.

    The Laplace exponent of the Levy tail ``(gamma / (pi z)) ** 0.5`` is
    ``sqrt(gamma s)``; the Levy law with scale ``c`` has ``sqrt(2 c s)``,
    hence ``c = gamma * dt**2 / 2``.
    """
    return 0.5 * gamma * dt * dt


def exact_halfstable_increment(gamma, dt: float, size=None, seed=0) -> np.ndarray:
    """Exact draws of a half-stable subordinator increment over ``dt``.

    ``gamma`` must be a constant (a number, or a :class:`SimKernel` with zero
    amplitude).
    """
    if isinstance(gamma, SimKernel):
        if gamma.amplitude != 0 and gamma.theta0 < 1:
            raise ValueError("exact sampling needs a constant gamma")
        gamma = 1.0
    elif callable(gamma):
        raise ValueError("exact sampling needs a constant gamma")
    if dt < 0:
        raise ValueError("dt must be non-negative")
    shape = () if size is None else size
    if dt == 0:
        return np.zeros(shape)[()]
    rng = _rng.generator(_rng.resolve_seed(seed), _rng.EXACT)
    z = rng.standard_normal(shape)
    return halfstable_scale(float(gamma), dt) / z**2
