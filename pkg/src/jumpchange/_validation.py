"""Input checks shared by the estimator classes."""

import numbers

import numpy as np

from .estimator import IncrementGrid
from .kernel import ZGrid
from .simulate import SamplePath


def check_fraction(name, value, closed_low=False, closed_high=False):
    if not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    lo_ok = value >= 0 if closed_low else value > 0
    hi_ok = value <= 1 if closed_high else value < 1
    if not (lo_ok and hi_ok):
        lo = "[" if closed_low else "("
        hi = "]" if closed_high else ")"
        raise ValueError(f"{name} must lie in {lo}0, 1{hi}, got {value}")
    return float(value)


def check_positive_int(name, value):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_zgrid(zgrid, delta_n):
    """Accept a :class:`ZGrid`, the presets ``"pure"``/``"sqrt"``, or a list."""
    if isinstance(zgrid, ZGrid):
        return zgrid
    if isinstance(zgrid, str):
        if zgrid == "pure":
            return ZGrid.pure_jump()
        if zgrid == "sqrt":
            return ZGrid.sqrt_delta(delta_n)
        raise ValueError(f"unknown z grid preset {zgrid!r}")
    return ZGrid(list(np.atleast_1d(np.asarray(zgrid, dtype=float))))


def check_path(X, delta_n=None) -> IncrementGrid:
    """Turn ``X`` into an :class:`IncrementGrid`.

    ``X`` is a :class:`SamplePath`, an :class:`IncrementGrid`, a 1-d array
    of levels ``X_0..X_n`` (then ``delta_n`` is required), or an
    ``(n + 1, 2)`` array of ``(t, x)`` rows on a uniform grid.
    """
    if isinstance(X, IncrementGrid):
        return X
    if isinstance(X, SamplePath):
        return IncrementGrid.from_path(X)
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim == 1:
        if delta_n is None:
            raise ValueError("delta_n is required when X holds levels only")
        if arr.size < 2:
            raise ValueError("need at least two observations")
        return IncrementGrid.from_values(arr, float(delta_n))
    if arr.ndim == 2 and arr.shape[1] == 2:
        if arr.shape[0] < 2:
            raise ValueError("need at least two observations")
        t, x = arr[:, 0], arr[:, 1]
        steps = np.diff(t)
        step = (t[-1] - t[0]) / steps.size
        if not step > 0 or np.any(np.abs(steps - step) > 1e-9 * step):
            raise ValueError("time column must be strictly increasing and equally spaced")
        if delta_n is not None and abs(delta_n - step) > 1e-9 * step:
            raise ValueError(f"delta_n={delta_n} contradicts the time column step {step}")
        return IncrementGrid.from_values(x, float(step))
    raise ValueError(f"cannot interpret input of shape {arr.shape} as a path")
