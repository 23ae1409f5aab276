"""Time-varying jump kernels and their population-level change measures.

A kernel ``g(y, dz)`` describes the jump measure at rescaled time
``y in [0, 1]``.  Everything downstream consumes only the one-sided tail
integral ``g(y, z)``, the mass of ``[z, inf)`` for ``z > 0`` and of
``(-inf, z]`` for ``z < 0``, so that is the primary interface here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

__all__ = [
    "QuadratureError",
    "ExpTail",
    "PowerTail",
    "ZGrid",
    "TailKernel",
    "AbruptKernel",
    "StableKernel",
    "SimKernel",
    "ConstantKernel",
    "SeparableKernel",
    "quadratic_onset_kernel",
    "tail",
    "integrated_tail",
    "inverse_tail",
    "time_variation",
    "sup_variation",
    "true_change_point",
]

QUAD_RTOL = 1e-10
DEFAULT_RESOLUTION = 1000
DEFAULT_POSITIVITY_TOL = 1e-9


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, abserr):
        super().__init__(f"{message} (achieved abs. error estimate {abserr:.3g})")
        self.abserr = abserr


def _check_z(z):
    z = np.asarray(z, dtype=float)
    if np.any(z == 0):
        raise ValueError("tail integrals are undefined at z = 0")
    return z


def _check_unit(name, v):
    arr = np.asarray(v, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
    return arr


# -- Levy tails ---------------------------------------------------------------


@dataclass(frozen=True)
class PowerTail:
    """Tail integral ``scale * |z| ** -index`` on the positive or both sides.

    ``index = 1/2`` with ``scale = (c / pi) ** 0.5`` is the half-stable
    subordinator tail used in the simulation model.
    """

    scale: float
    index: float
    two_sided: bool = False

    def __post_init__(self):
        if self.scale < 0 or self.index <= 0:
            raise ValueError("PowerTail needs scale >= 0 and index > 0")

    def __call__(self, z):
        z = _check_z(z)
        out = self.scale * np.abs(z) ** (-self.index)
        if not self.two_sided:
            out = np.where(z > 0, out, 0.0)
        return out[()] if out.ndim == 0 else out

    def inverse(self, u, sign=1):
        u = np.asarray(u, dtype=float)
        if sign < 0 and not self.two_sided:
            raise ValueError("no negative jumps for a one-sided PowerTail")
        z = (self.scale / u) ** (1.0 / self.index)
        return sign * z


@dataclass(frozen=True)
class ExpTail:
    """Symmetric tail ``scale * exp(-|z|)``.

    Not a Levy tail near zero in the strict sense (finite at ``0+``), which
    makes it a finite-activity compound Poisson law.
    """

    scale: float

    def __call__(self, z):
        z = _check_z(z)
        out = self.scale * np.exp(-np.abs(z))
        return out[()] if out.ndim == 0 else out

    def inverse(self, u, sign=1):
        u = np.asarray(u, dtype=float)
        return sign * -np.log(u / self.scale)


# -- z grid -------------------------------------------------------------------


@dataclass(frozen=True)
class ZGrid:
    """Finite set of tail levels standing in for ``|z| >= eps``."""

    values: tuple
    eps: float = field(default=None)

    def __init__(self, values: Sequence[float], eps: Optional[float] = None):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ValueError("ZGrid must be non-empty")
        if len(set(vals)) != len(vals):
            raise ValueError(f"ZGrid has duplicate values: {vals}")
        if any(v == 0 or not math.isfinite(v) for v in vals):
            raise ValueError("ZGrid values must be finite and non-zero")
        if eps is None:
            eps = min(abs(v) for v in vals)
        if eps <= 0:
            raise ValueError("eps must be positive")
        if any(abs(v) < eps for v in vals):
            raise ValueError(f"every |z| must be >= eps = {eps}")
        object.__setattr__(self, "values", tuple(sorted(vals)))
        object.__setattr__(self, "eps", float(eps))

    @classmethod
    def pure_jump(cls) -> "ZGrid":
        """Grid used for pure-jump data: ``{0.1, 0.15, 0.25, 1, 2}``."""
        return cls([0.1, 0.15, 0.25, 1.0, 2.0])

    @classmethod
    def sqrt_delta(cls, delta_n: float, multiples=(2.0, 3.5, 5.0, 6.5, 8.0)) -> "ZGrid":
        """Grid ``{c * sqrt(delta_n)}`` for data with a Brownian component."""
        root = math.sqrt(delta_n)
        return cls([c * root for c in multiples])

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


# -- kernels ------------------------------------------------------------------


class TailKernel:
    """Base class. Subclasses implement ``tail`` and may override the rest."""

    #: points in (0, 1) where ``y -> g(y, z)`` may be discontinuous or kinked
    breakpoints: tuple = ()

    def tail(self, y, z):
        raise NotImplementedError

    def integrated_tail(self, theta, z):
        theta = _check_unit("theta", theta)
        _check_z(z)
        if theta.ndim == 0:
            return self._quad(0.0, float(theta), float(z))
        order = np.argsort(theta)
        sorted_t = theta[order]
        acc = 0.0
        last = 0.0
        out = np.empty_like(sorted_t)
        for k, t in enumerate(sorted_t):
            if t > last:
                acc += self._quad(last, float(t), float(z))
                last = float(t)
            out[k] = acc
        res = np.empty_like(out)
        res[order] = out
        return res

    def _quad(self, a, b, z):
        if b <= a:
            return 0.0
        pts = [p for p in self.breakpoints if a < p < b]
        val, abserr, info = integrate.quad(
            lambda y: float(self.tail(y, z)),
            a,
            b,
            epsabs=0.0,
            epsrel=QUAD_RTOL,
            limit=200,
            points=pts or None,
            full_output=True,
        )[:3]
        if abserr > max(QUAD_RTOL * abs(val), 1e-14) * 10:
            raise QuadratureError(f"quad on [{a}, {b}] at z={z} did not converge", abserr)
        return val

    @property
    def has_inverse(self) -> bool:
        return False

    def inverse_tail(self, y, u, sign=1):
        raise NotImplementedError(f"{type(self).__name__} has no invertible tail")

    def describe(self) -> dict:
        return {"variant": type(self).__name__}


def _tail_inverse(levy, u, sign):
    inv = getattr(levy, "inverse", None)
    if inv is None:
        raise NotImplementedError(f"{levy!r} does not provide an inverse tail")
    return inv(u, sign)


@dataclass(frozen=True)
class AbruptKernel(TailKernel):
    """``nu1`` on ``[0, theta0]`` and ``nu2`` on ``(theta0, 1]``."""

    nu1: Callable
    nu2: Callable
    theta0: float

    def __post_init__(self):
        if not 0 < self.theta0 < 1:
            raise ValueError("AbruptKernel needs theta0 in (0, 1)")

    @property
    def breakpoints(self):
        return (self.theta0,)

    def tail(self, y, z):
        y = _check_unit("y", y)
        z = _check_z(z)
        out = np.where(y <= self.theta0, self.nu1(z), self.nu2(z))
        return out[()] if np.ndim(out) == 0 else out

    def integrated_tail(self, theta, z):
        theta = _check_unit("theta", theta)
        z = _check_z(z)
        before = np.minimum(theta, self.theta0)
        after = np.maximum(theta - self.theta0, 0.0)
        out = before * self.nu1(z) + after * self.nu2(z)
        return out[()] if np.ndim(out) == 0 else out

    @property
    def has_inverse(self):
        return hasattr(self.nu1, "inverse") and hasattr(self.nu2, "inverse")

    def inverse_tail(self, y, u, sign=1):
        y = np.asarray(y, dtype=float)
        first = _tail_inverse(self.nu1, u, sign)
        second = _tail_inverse(self.nu2, u, sign)
        return np.where(y <= self.theta0, first, second)

    def variation_bound(self, zgrid: ZGrid) -> float:
        """``V_eps``: largest ``|nu1(z) - nu2(z)|`` over the grid."""
        z = zgrid.as_array()
        return float(np.max(np.abs(self.nu1(z) - self.nu2(z))))

    def describe(self):
        return {"variant": "abrupt", "theta0": self.theta0, "nu1": repr(self.nu1), "nu2": repr(self.nu2)}


@dataclass(frozen=True)
class StableKernel(TailKernel):
    """Locally symmetric beta-stable kernel ``A(y) / |z| ** beta(y)``."""

    scale: Callable
    index: Callable
    breakpoints: tuple = ()

    def tail(self, y, z):
        y = _check_unit("y", y)
        z = _check_z(z)
        a = np.vectorize(self.scale, otypes=[float])(y)
        b = np.vectorize(self.index, otypes=[float])(y)
        if np.any(a <= 0) or np.any((b <= 0) | (b >= 2)):
            raise ValueError("StableKernel needs A(y) > 0 and beta(y) in (0, 2)")
        out = a / np.abs(z) ** b
        return out[()] if np.ndim(out) == 0 else out

    @property
    def has_inverse(self):
        return True

    def inverse_tail(self, y, u, sign=1):
        y = _check_unit("y", y)
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0):
            raise ValueError("tail level must be positive")
        a = np.vectorize(self.scale, otypes=[float])(y)
        b = np.vectorize(self.index, otypes=[float])(y)
        return sign * (a / u) ** (1.0 / b)

    def describe(self):
        return {"variant": "stable", "scale": repr(self.scale), "index": repr(self.index)}


@dataclass(frozen=True)
class SimKernel(TailKernel):
    """Half-stable subordinator kernel with a gradual change after ``theta0``.

    ``g(y, z) = (gamma(y) / (pi z)) ** 0.5`` for ``z > 0`` and ``0`` for
    ``z < 0``, where ``gamma(y) = 1`` up to ``theta0`` and
    ``1 + amplitude * (y - theta0) ** smoothness`` afterwards.
    """

    theta0: float = 1.0
    amplitude: float = 0.0
    smoothness: float = 1.0

    def __post_init__(self):
        if not 0 <= self.theta0 <= 1:
            raise ValueError("theta0 must lie in [0, 1]")
        if self.amplitude < 0 or self.smoothness <= 0:
            raise ValueError("need amplitude >= 0 and smoothness > 0")

    @property
    def breakpoints(self):
        return (self.theta0,) if 0 < self.theta0 < 1 else ()

    def gamma(self, y):
        y = np.asarray(y, dtype=float)
        excess = np.maximum(y - self.theta0, 0.0)
        return 1.0 + self.amplitude * excess**self.smoothness

    def tail(self, y, z):
        y = _check_unit("y", y)
        z = _check_z(z)
        pos = np.sqrt(self.gamma(y) / (np.pi * np.abs(z)))
        out = np.where(z > 0, pos, 0.0)
        return out[()] if np.ndim(out) == 0 else out

    def integrated_sqrt_gamma(self, theta):
        """``int_0^theta gamma(y) ** 0.5 dy`` in closed form."""
        theta = np.asarray(theta, dtype=float)
        s = np.maximum(theta - self.theta0, 0.0)
        flat = np.minimum(theta, self.theta0)
        if self.amplitude == 0:
            return flat + s
        w = self.smoothness
        # int_0^s (1 + A t^w)^(1/2) dt = s 2F1(-1/2, 1/w; 1 + 1/w; -A s^w)
        rising = s * special.hyp2f1(-0.5, 1.0 / w, 1.0 + 1.0 / w, -self.amplitude * s**w)
        return flat + rising

    def integrated_tail(self, theta, z):
        theta = _check_unit("theta", theta)
        z = _check_z(z)
        out = np.where(z > 0, self.integrated_sqrt_gamma(theta) / np.sqrt(np.pi * np.abs(z)), 0.0)
        return out[()] if np.ndim(out) == 0 else out

    @property
    def has_inverse(self):
        return True

    def inverse_tail(self, y, u, sign=1):
        if sign < 0:
            raise ValueError("SimKernel has no negative jumps")
        y = _check_unit("y", y)
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0):
            raise ValueError("tail level must be positive")
        return self.gamma(y) / (np.pi * u**2)

    def describe(self):
        return {
            "variant": "sim",
            "theta0": self.theta0,
            "amplitude": self.amplitude,
            "smoothness": self.smoothness,
        }


@dataclass(frozen=True)
class ConstantKernel(TailKernel):
    """Time-homogeneous kernel: a single Levy tail for all ``y``."""

    nu: Callable

    def tail(self, y, z):
        y = _check_unit("y", y)
        z = _check_z(z)
        out = np.broadcast_to(self.nu(z), np.broadcast(y, z).shape).astype(float)
        return out[()] if out.ndim == 0 else out

    def integrated_tail(self, theta, z):
        theta = _check_unit("theta", theta)
        z = _check_z(z)
        out = theta * self.nu(z)
        return out[()] if np.ndim(out) == 0 else out

    @property
    def has_inverse(self):
        return hasattr(self.nu, "inverse")

    def inverse_tail(self, y, u, sign=1):
        return np.broadcast_to(_tail_inverse(self.nu, u, sign), np.broadcast(y, u).shape)

    def describe(self):
        return {"variant": "constant", "nu": repr(self.nu)}


@dataclass(frozen=True)
class SeparableKernel(TailKernel):
    """``g(y, z) = rate(y) * nu(z)``: a Levy tail modulated in time.

    Covers e.g. ``10 (1 + 3 (y - 1/2)^2) e^{-|z|}`` after ``y = 1/2``.
    """

    rate: Callable
    nu: Callable
    breakpoints: tuple = ()

    def tail(self, y, z):
        y = _check_unit("y", y)
        z = _check_z(z)
        out = np.vectorize(self.rate, otypes=[float])(y) * self.nu(z)
        return out[()] if np.ndim(out) == 0 else out

    @property
    def has_inverse(self):
        return hasattr(self.nu, "inverse")

    def inverse_tail(self, y, u, sign=1):
        r = np.vectorize(self.rate, otypes=[float])(np.asarray(y, dtype=float))
        return _tail_inverse(self.nu, np.asarray(u) / r, sign)


def quadratic_onset_kernel() -> SeparableKernel:
    """Kernel flat up to ``y = 1/2`` and quadratically rising afterwards."""

    def rate(y):
        return 10.0 if y <= 0.5 else 10.0 * (1.0 + 3.0 * (y - 0.5) ** 2)

    return SeparableKernel(rate=rate, nu=ExpTail(1.0), breakpoints=(0.5,))


# -- functional interface ------------------------------------------------------


def tail(kernel: TailKernel, y, z):
    """Tail integral ``g(y, I(z))``."""
    return kernel.tail(y, z)


def integrated_tail(kernel: TailKernel, theta, z):
    """``int_0^theta g(y, z) dy``."""
    return kernel.integrated_tail(theta, z)


def inverse_tail(kernel: TailKernel, y, u):
    """Positive jump size ``z`` with ``g(y, z) = u``."""
    if not kernel.has_inverse:
        raise NotImplementedError(f"{type(kernel).__name__} has no invertible tail")
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0):
        raise ValueError("tail level must be positive")
    z = kernel.inverse_tail(y, u_arr, 1)
    if np.any(~(np.asarray(z) > 0)):
        raise ValueError("tail level outside the range of the positive tail")
    return z


def time_variation(kernel: TailKernel, kappa, theta, z):
    """Measure of time variation ``D(kappa, theta, z)``.

    Uses the convention ``0/0 = 1`` at ``kappa = theta = 0``.
    """
    kappa = float(_check_unit("kappa", kappa))
    theta = float(_check_unit("theta", theta))
    if kappa > theta:
        raise ValueError(f"need kappa <= theta, got {kappa} > {theta}")
    ratio = 1.0 if theta == 0 else kappa / theta
    return float(kernel.integrated_tail(kappa, z) - ratio * kernel.integrated_tail(theta, z))


def _grid_sup(kernel, theta, z, resolution):
    if theta == 0:
        return 0.0
    t = np.linspace(0.0, theta, resolution + 1)
    It = np.asarray(kernel.integrated_tail(t, z), dtype=float)
    best = 0.0
    # row = theta' index, columns = kappa <= theta'
    for k in range(1, resolution + 1):
        d = It[: k + 1] - (t[: k + 1] / t[k]) * It[k]
        m = float(np.max(np.abs(d)))
        if m > best:
            best = m
    return best


def sup_variation(
    kernel: TailKernel,
    theta: float,
    zgrid: Optional[ZGrid] = None,
    single_z: Optional[float] = None,
    resolution: int = DEFAULT_RESOLUTION,
    method: str = "auto",
) -> float:
    """``sup_{z} sup_{0 <= kappa <= theta' <= theta} |D(kappa, theta', z)|``.

    The supremum over ``z`` runs over ``zgrid`` (or just ``single_z``). The
    ``(kappa, theta')`` supremum is taken on a uniform grid of
    ``resolution + 1`` points per axis on ``[0, theta]``; for an
    :class:`AbruptKernel` the closed form ``V theta0 (1 - theta0 / theta)``
    is used unless ``method="grid"``.
    """
    theta = float(_check_unit("theta", theta))
    if (zgrid is None) == (single_z is None):
        raise ValueError("pass exactly one of zgrid or single_z")
    zs = [float(single_z)] if single_z is not None else list(zgrid.values)
    if method not in ("auto", "grid", "analytic"):
        raise ValueError(f"unknown method {method!r}")
    if method == "analytic" and not isinstance(kernel, AbruptKernel):
        raise ValueError("analytic sup_variation only exists for AbruptKernel")
    if isinstance(kernel, AbruptKernel) and method != "grid":
        if theta <= kernel.theta0:
            return 0.0
        v = max(abs(float(kernel.nu1(z)) - float(kernel.nu2(z))) for z in zs)
        return v * kernel.theta0 * (1.0 - kernel.theta0 / theta)
    if isinstance(kernel, ConstantKernel):
        return 0.0
    return max(_grid_sup(kernel, theta, z, resolution) for z in zs)


def true_change_point(
    kernel: TailKernel,
    zgrid: ZGrid,
    tol: float = DEFAULT_POSITIVITY_TOL,
    resolution: int = DEFAULT_RESOLUTION,
    xtol: float = 1e-10,
) -> float:
    """First ``theta`` with ``sup_variation(theta) > tol``; ``1`` if none."""
    if tol <= 0:
        raise ValueError("tol must be positive")

    def positive(t):
        return sup_variation(kernel, t, zgrid, resolution=resolution) > tol

    if not positive(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            hi = mid
        else:
            lo = mid
    return hi
