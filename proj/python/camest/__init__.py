"""Complete-case adjustment estimators for data with missing features."""

import json

import numpy as np

from . import _camest
from ._camest import CamError, combine, optimal_gamma

__all__ = [
    "CamError",
    "combine",
    "optimal_gamma",
    "estimate_mean",
    "estimate_cov",
    "density",
    "regress",
    "generate",
    "run_cli",
]


def _matrix(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 1) if x.ndim == 1 else x


def estimate_mean(x, y, feature, *, phim="linear", alpha=0.05, budget=100000, seed=0, min_count=20,
                  integrate=False):
    """CAM estimate of E[X_feature] with a normal interval. Missing cells are NaN."""
    return json.loads(_camest.estimate_json(_matrix(x), np.asarray(y, dtype=float), feature, -1, False, phim,
                                            alpha, budget, seed, min_count, integrate))


def estimate_cov(x, y, feature_a, feature_b=-1, *, phim="linear", alpha=0.05, budget=100000, seed=0,
                 min_count=20, integrate=False):
    """CAM estimate of Cov(X_a, X_b); feature_b = -1 selects the response."""
    return json.loads(_camest.estimate_json(_matrix(x), np.asarray(y, dtype=float), feature_a, feature_b, True,
                                            phim, alpha, budget, seed, min_count, integrate))


def density(x, points, *, h=0.0, family="gaussian", min_count=20, integrate=False):
    """CAM kernel density estimate at each row of points; h = 0 uses the rule of thumb."""
    x = _matrix(x)
    pts = np.asarray(points, dtype=float).reshape(-1, x.shape[1])
    return json.loads(_camest.density_json(x, pts, h, family, min_count, integrate))


def regress(x, y, points, *, h=0.0, family="gaussian", min_count=20, integrate=False):
    """CAM local-constant regression at each row of points; h = 0 selects h by leave-one-out."""
    x = _matrix(x)
    pts = np.asarray(points, dtype=float).reshape(-1, x.shape[1])
    return json.loads(_camest.regress_json(x, np.asarray(y, dtype=float), pts, h, family, min_count, integrate))


def generate(model, n, p1=0.0, seed=0):
    """Draw (x, y) from a synthetic model with feature 1 missing with probability p1."""
    return _camest.generate(model, n, p1, seed)


def run_cli(*args):
    """Run the cam command line in-process; returns (exit_code, stdout, stderr)."""
    return _camest.run_cli([str(a) for a in args])
