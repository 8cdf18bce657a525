"""Strauss pair-interaction process on a rectangle.

The unnormalized density of a pattern ``s_1..s_n`` is ``exp(-a * N_b)`` where
``N_b`` counts unordered pairs closer than ``b`` (strictly).  Fixed-n
simulation uses single-site Metropolis sweeps with a uniform independence
proposal over the domain.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from scrstrauss.geometry import Domain, uniform_sample

# brute force is faster than binning below this size
CELL_LIST_MIN_POINTS = 400


@dataclass(frozen=True)
class StraussParams:
    a: float
    b: float
    a_max: float = 3.0

    def __post_init__(self):
        if not (self.a >= 0 and np.isfinite(self.a)):
            raise ValueError(f"interaction strength a must be finite and >= 0, got {self.a}")
        if not (self.b >= 0 and np.isfinite(self.b)):
            raise ValueError(f"interaction range b must be finite and >= 0, got {self.b}")


def as_pattern(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.empty((0, 2))
    return np.ascontiguousarray(pts.reshape(-1, 2))


@nb.njit(cache=True)
def _pair_count_brute(pts, b):
    n = pts.shape[0]
    b2 = b * b
    c = 0
    for i in range(n):
        xi = pts[i, 0]
        yi = pts[i, 1]
        for j in range(i + 1, n):
            dx = xi - pts[j, 0]
            dy = yi - pts[j, 1]
            if dx * dx + dy * dy < b2:
                c += 1
    return c


@nb.njit(cache=True)
def _pair_count_cells(pts, b):
    n = pts.shape[0]
    if n < 2 or b <= 0.0:
        return 0
    xmin = pts[:, 0].min()
    ymin = pts[:, 1].min()
    nx = min(int((pts[:, 0].max() - xmin) / b) + 1, 2048)
    ny = min(int((pts[:, 1].max() - ymin) / b) + 1, 2048)
    # cells at least b wide so that only the 3x3 neighbourhood matters
    wx = max(b, (pts[:, 0].max() - xmin) / nx * (1.0 + 1e-12))
    wy = max(b, (pts[:, 1].max() - ymin) / ny * (1.0 + 1e-12))
    cell = np.empty(n, dtype=np.int64)
    counts = np.zeros(nx * ny + 1, dtype=np.int64)
    for i in range(n):
        cx = min(int((pts[i, 0] - xmin) / wx), nx - 1)
        cy = min(int((pts[i, 1] - ymin) / wy), ny - 1)
        cell[i] = cx * ny + cy
        counts[cell[i] + 1] += 1
    start = np.cumsum(counts)
    fill = start[:-1].copy()
    order = np.empty(n, dtype=np.int64)
    for i in range(n):
        order[fill[cell[i]]] = i
        fill[cell[i]] += 1
    b2 = b * b
    c = 0
    for i in range(n):
        cx = cell[i] // ny
        cy = cell[i] % ny
        for ox in range(max(cx - 1, 0), min(cx + 2, nx)):
            for oy in range(max(cy - 1, 0), min(cy + 2, ny)):
                k = ox * ny + oy
                for m in range(start[k], start[k + 1]):
                    j = order[m]
                    if j <= i:
                        continue
                    dx = pts[i, 0] - pts[j, 0]
                    dy = pts[i, 1] - pts[j, 1]
                    if dx * dx + dy * dy < b2:
                        c += 1
    return c


def pair_count(points, b: float, method: str = "auto") -> int:
    """Number of unordered pairs at distance strictly less than ``b``."""
    if b < 0:
        raise ValueError("b must be >= 0")
    pts = as_pattern(points)
    if pts.shape[0] < 2 or b == 0:
        return 0
    if method == "auto":
        method = "cells" if pts.shape[0] >= CELL_LIST_MIN_POINTS else "brute"
    if method == "cells":
        return int(_pair_count_cells(pts, float(b)))
    if method == "brute":
        return int(_pair_count_brute(pts, float(b)))
    raise ValueError(f"unknown method {method!r}")


def log_unnormalized_density(points, params: StraussParams) -> float:
    """``-a * pair_count(points, b)``."""
    if params.a == 0:
        return 0.0
    return -params.a * pair_count(points, params.b)


@nb.njit(cache=True)
def neighbours_within(pts, px, py, b2, skip):
    """Count rows of ``pts`` (excluding index ``skip``) closer than sqrt(b2)."""
    c = 0
    for j in range(pts.shape[0]):
        if j == skip:
            continue
        dx = px - pts[j, 0]
        dy = py - pts[j, 1]
        if dx * dx + dy * dy < b2:
            c += 1
    return c


@nb.njit(cache=True)
def _sweeps(pts, a, b, bounds, nsweeps, rng):
    n = pts.shape[0]
    b2 = b * b
    wx = bounds[1] - bounds[0]
    wy = bounds[3] - bounds[2]
    acc = 0
    for _ in range(nsweeps):
        for i in range(n):
            px = bounds[0] + wx * rng.random()
            py = bounds[2] + wy * rng.random()
            if a == 0.0:
                pts[i, 0] = px
                pts[i, 1] = py
                acc += 1
                continue
            dn = neighbours_within(pts, px, py, b2, i) - neighbours_within(pts, pts[i, 0], pts[i, 1], b2, i)
            if dn <= 0 or rng.random() < np.exp(-a * dn):
                pts[i, 0] = px
                pts[i, 1] = py
                acc += 1
    return acc


@nb.njit(cache=True)
def _chained_pair_counts(pts, a, b, bounds, n_samples, sweeps_per_sample, rng):
    out = np.empty(n_samples, dtype=np.int64)
    for m in range(n_samples):
        _sweeps(pts, a, b, bounds, sweeps_per_sample, rng)
        out[m] = _pair_count_brute(pts, b)
    return out


def metropolis_sweeps(points: np.ndarray, params: StraussParams, domain: Domain, sweeps: int,
                      rng: np.random.Generator) -> float:
    """Run ``sweeps`` single-site sweeps in place; return the acceptance rate."""
    pts = points
    if pts.shape[0] == 0 or sweeps == 0:
        return 1.0
    acc = _sweeps(pts, float(params.a), float(params.b), domain.bounds, int(sweeps), rng)
    return acc / (sweeps * pts.shape[0])


def sample_fixed_n(n: int, params: StraussParams, domain: Domain, burn_in: int = 200,
                   init=None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Draw one ``n``-point Strauss pattern on ``domain``.

    The chain starts at ``init`` (copied) when given, otherwise at ``n``
    uniform points, and runs ``burn_in`` full sweeps.
    """
    if n < 1:
        raise ValueError("sample_fixed_n needs n >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    rng = np.random.default_rng() if rng is None else rng
    if init is None:
        pts = uniform_sample(domain, rng, n)
    else:
        pts = as_pattern(init).copy()
        if pts.shape[0] != n:
            raise ValueError(f"init has {pts.shape[0]} points, expected {n}")
    metropolis_sweeps(pts, params, domain, burn_in, rng)
    return pts


def chained_pair_counts(pts: np.ndarray, params: StraussParams, domain: Domain, n_samples: int,
                        sweeps_per_sample: int, rng: np.random.Generator) -> np.ndarray:
    """Pair counts of ``n_samples`` successive draws of one chain (``pts`` is advanced in place)."""
    return _chained_pair_counts(pts, float(params.a), float(params.b), domain.bounds,
                                int(n_samples), int(sweeps_per_sample), rng)
