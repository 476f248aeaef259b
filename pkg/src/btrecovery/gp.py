"""Gaussian-process surrogate with expected improvement.

Deliberately small: a squared-exponential kernel with a median-heuristic
lengthscale, standardized outputs, and a Cholesky solve.  Observation noise
is the fixed jitter floor plus an optional per-point variance (the optimizer
passes the variance of each record's replicate mean), which keeps the
surrogate honest on noisy episodic objectives.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import norm

from . import config


class GaussianProcess:
    def __init__(self, jitter: float = config.GP_JITTER):
        self.jitter = jitter

    def fit(self, X, y, noise_var=None) -> "GaussianProcess":
        """Fit on inputs in the unit cube; outputs are standardized here."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.y_mean = float(y.mean())
        sd = float(y.std())
        self.y_std = sd if sd > 1e-12 else 1.0
        z = (y - self.y_mean) / self.y_std
        nv = np.zeros(len(y)) if noise_var is None else \
            np.asarray(noise_var, dtype=float) / self.y_std ** 2

        d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=-1)
        positive = d2[d2 > 0]
        med = np.median(positive) if positive.size else 1.0
        self.ls2 = float(max(med / config.GP_LENGTHSCALE_DIVISOR, 1e-6))
        K = np.exp(-0.5 * d2 / self.ls2) + np.diag(nv + self.jitter)
        self.L = np.linalg.cholesky(K)
        self.alpha = np.linalg.solve(self.L.T, np.linalg.solve(self.L, z))
        self.X = X
        return self

    def predict(self, Xs):
        """Posterior mean and variance in standardized output units."""
        Xs = np.asarray(Xs, dtype=float)
        d2 = ((Xs[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=-1)
        Ks = np.exp(-0.5 * d2 / self.ls2)
        mean = Ks @ self.alpha
        v = np.linalg.solve(self.L, Ks.T)
        var = np.clip(1.0 + self.jitter - (v ** 2).sum(axis=0), 1e-12, None)
        return mean, var


def expected_improvement(mean, var, best: float, xi: float = config.EI_XI):
    """EI for maximization against the incumbent ``best`` (standardized)."""
    sd = np.sqrt(var)
    improve = mean - best - xi
    z = improve / sd
    return improve * norm.cdf(z) + sd * norm.pdf(z)
