"""scikit-learn style wrappers around the estimator and the tests."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _validation as val
from .changepoint import adaptive_estimate
from .changetest import test_global, test_local
from .estimator import build_prefix, sup_d_n

__all__ = ["GradualChangeDetector", "GradualChangeTest"]


class GradualChangeDetector(TransformerMixin, BaseEstimator):
    """Locate the gradual change point of the jump behaviour of a path.

    Parameters
    ----------
    zgrid : {"pure", "sqrt"} or sequence of float, default="pure"
        Jump-size levels.  ``"sqrt"`` scales with ``sqrt(delta_n)`` and suits
        paths with a Brownian part.
    theta_pre : float, default=0.1
        Preliminary fraction assumed free of change.
    alpha : float, default=0.1
        Threshold level.
    r : float, default=0.01
        Power applied to the bootstrap suprema; use 1 with a Brownian part.
    B : int, default=200
        Bootstrap replications per stage.
    multiplier : str, default="rademacher"
    delta_n : float, optional
        Observation step, needed when ``X`` holds levels only.
    random_state : int, default=0

    Attributes
    ----------
    theta_hat_ : float
        Estimated change point on ``[0, 1]``.
    theta_initial_, lambda_initial_, lambda_ : float
        Intermediate estimate and the two thresholds.
    curve_ : ndarray of shape (n + 1,)
        ``sqrt(k_n) DD_n(j / n)``.
    n_, k_n_ : int, float
    """

    def __init__(
        self,
        zgrid="pure",
        theta_pre=0.1,
        alpha=0.1,
        r=0.01,
        B=200,
        multiplier="rademacher",
        delta_n=None,
        random_state=0,
    ):
        self.zgrid = zgrid
        self.theta_pre = theta_pre
        self.alpha = alpha
        self.r = r
        self.B = B
        self.multiplier = multiplier
        self.delta_n = delta_n
        self.random_state = random_state

    def _validate(self):
        val.check_fraction("theta_pre", self.theta_pre)
        val.check_fraction("alpha", self.alpha)
        val.check_fraction("r", self.r, closed_high=True)
        val.check_positive_int("B", self.B)

    def fit(self, X, y=None):
        self._validate()
        grid = val.check_path(X, self.delta_n)
        zg = val.check_zgrid(self.zgrid, grid.delta_n)
        est = adaptive_estimate(
            grid, zg, self.theta_pre, self.alpha, self.r, self.B, self.multiplier, self.random_state
        )
        self.theta_hat_ = est.theta_hat
        self.theta_initial_ = est.theta_initial
        self.lambda_initial_ = est.lambda_initial
        self.lambda_ = est.lambda_final
        self.zgrid_ = zg
        self.n_ = grid.n
        self.k_n_ = grid.k_n
        self.delta_n_ = grid.delta_n
        self.curve_ = math.sqrt(grid.k_n) * sup_d_n(build_prefix(grid, zg))
        self.result_ = est
        return self

    def transform(self, X):
        """``sqrt(k_n) DD_n(j / n)`` of ``X`` as a column, ``j = 0..n``."""
        check_is_fitted(self, "theta_hat_")
        grid = val.check_path(X, self.delta_n if self.delta_n is not None else self.delta_n_)
        curve = math.sqrt(grid.k_n) * sup_d_n(build_prefix(grid, self.zgrid_))
        return curve.reshape(-1, 1)

    def predict(self, X=None):
        """Regime label per increment: 0 up to the estimated change, 1 after.

        With ``X`` the labels refer to the rescaled times of ``X``'s
        increments, using the fitted change point.
        """
        check_is_fitted(self, "theta_hat_")
        if X is None:
            n = self.n_
        else:
            n = val.check_path(X, self.delta_n if self.delta_n is not None else self.delta_n_).n
        t = np.arange(1, n + 1) / n
        return (t > self.theta_hat_ + 1e-12).astype(int)


class GradualChangeTest(BaseEstimator):
    """Bootstrap test for any change, globally or at one level ``z0``.

    Parameters
    ----------
    z0 : float, optional
        Test at this single level; ``None`` runs the global test over ``zgrid``.
    zgrid : {"pure", "sqrt"} or sequence of float, default="pure"
    alpha : float, default=0.05
    B : int, default=200
    multiplier : str, default="rademacher"
    delta_n : float, optional
    random_state : int, default=0

    Attributes
    ----------
    statistic_, critical_value_, pvalue_ : float
    reject_ : bool
    report_ : TestReport
    """

    def __init__(self, z0=None, zgrid="pure", alpha=0.05, B=200, multiplier="rademacher",
                 delta_n=None, random_state=0):
        self.z0 = z0
        self.zgrid = zgrid
        self.alpha = alpha
        self.B = B
        self.multiplier = multiplier
        self.delta_n = delta_n
        self.random_state = random_state

    def fit(self, X, y=None):
        val.check_fraction("alpha", self.alpha)
        val.check_positive_int("B", self.B)
        grid = val.check_path(X, self.delta_n)
        if self.z0 is None:
            zg = val.check_zgrid(self.zgrid, grid.delta_n)
            rep = test_global(grid, zg, self.alpha, self.B, self.multiplier, self.random_state)
        else:
            rep = test_local(grid, float(self.z0), self.alpha, self.B, self.multiplier, self.random_state)
        self.report_ = rep
        self.statistic_ = rep.statistic
        self.critical_value_ = rep.critical_value
        self.pvalue_ = rep.p_value
        self.reject_ = rep.reject
        return self

    def predict(self, X=None):
        """1 if a change was detected on the fitted path, else 0."""
        check_is_fitted(self, "reject_")
        return int(self.reject_)
