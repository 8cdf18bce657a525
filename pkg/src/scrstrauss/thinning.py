"""Covariate-thinned Strauss process.

Potential centers follow the Strauss process; each one is kept
independently with logistic probability ``expit(X(s)' beta)``.  Kept
individuals form the population and are the only ones that can be caught.
"""
from __future__ import annotations

import csv

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import expit

from scrstrauss.geometry import Domain, TrapArray
from scrstrauss.likelihood import DetectionParams, capture_probs, log_likelihood_individual
from scrstrauss.strauss import StraussParams, sample_fixed_n


class CovariateField:
    """Nearest-cell lookup into one or more gridded rasters.

    Each raster is an ``(m, 3)`` array of (x, y, value).  With
    ``intercept=True`` a leading constant 1 is prepended to every vector.
    """

    def __init__(self, rasters, intercept: bool = True, names=None):
        self.rasters = []
        for r in rasters:
            r = np.asarray(r, dtype=float).reshape(-1, 3)
            if not np.all(np.isfinite(r)):
                raise ValueError("covariate rasters must be finite")
            self.rasters.append((cKDTree(r[:, :2]), r[:, 2].copy()))
        self.intercept = intercept
        self.names = list(names) if names is not None else [f"x{k}" for k in range(len(self.rasters))]

    @property
    def p(self) -> int:
        return len(self.rasters) + int(self.intercept)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        cols = [np.ones(pts.shape[0])] if self.intercept else []
        for tree, vals in self.rasters:
            _, k = tree.query(pts)
            cols.append(vals[k])
        return np.column_stack(cols) if cols else np.empty((pts.shape[0], 0))

    @classmethod
    def from_csv(cls, paths, intercept: bool = True) -> "CovariateField":
        rasters = []
        for path in paths:
            with open(path, newline="") as fh:
                reader = csv.DictReader(fh)
                if reader.fieldnames is None or not {"x", "y", "value"} <= set(reader.fieldnames):
                    raise ValueError(f"{path}: raster CSV needs columns x,y,value")
                rasters.append([(float(r["x"]), float(r["y"]), float(r["value"])) for r in reader])
        return cls(rasters, intercept=intercept, names=[str(p) for p in paths])


def thinning_prob(x, beta) -> float | np.ndarray:
    """Logistic retention probability ``exp(x'beta) / (1 + exp(x'beta))``."""
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if x.shape[-1] != beta.shape[0]:
        raise ValueError(f"covariate dimension {x.shape[-1]} does not match beta ({beta.shape[0]})")
    out = expit(x @ beta)
    return float(out) if np.ndim(out) == 0 else out


def capture_probs_thinned(s, delta: int, gamma: int, params: DetectionParams, traps: TrapArray) -> np.ndarray:
    return capture_probs(s, delta * gamma, params, traps)


def log_likelihood_thinned(y, s, delta: int, gamma: int, params: DetectionParams, traps: TrapArray) -> float:
    return log_likelihood_individual(y, s, delta * gamma, params, traps)


def simulate_thinned_process(n_potential: int, params: StraussParams, field: CovariateField, beta,
                             domain: Domain, rng: np.random.Generator, burn_in: int = 200):
    """Return (retained, removed) patterns and the retention indicators."""
    pts = sample_fixed_n(n_potential, params, domain, burn_in=burn_in, rng=rng)
    p = np.atleast_1d(thinning_prob(field(pts), beta))
    gamma = (rng.random(n_potential) < p).astype(np.int64)
    return pts[gamma == 1], pts[gamma == 0], gamma
