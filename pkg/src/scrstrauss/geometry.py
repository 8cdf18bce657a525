"""Rectangular domains, trap arrays and uniform placement.

Points are plain ``(x, y)`` pairs in meters; collections of points are
``(n, 2)`` float arrays.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Domain:
    """Axis-aligned rectangle ``[xmin, xmax] x [ymin, ymax]``."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        vals = (self.xmin, self.xmax, self.ymin, self.ymax)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"domain bounds must be finite, got {vals}")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError(f"degenerate domain {vals}")

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def bounds(self) -> np.ndarray:
        return np.array([self.xmin, self.xmax, self.ymin, self.ymax], dtype=float)

    def contains(self, pts) -> np.ndarray | bool:
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        inside = (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)
        return bool(inside) if inside.ndim == 0 else inside

    @classmethod
    def around(cls, points, buffer: float = 15.0) -> "Domain":
        """Bounding box of ``points`` grown by ``buffer`` on every side."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(
            float(pts[:, 0].min() - buffer),
            float(pts[:, 0].max() + buffer),
            float(pts[:, 1].min() - buffer),
            float(pts[:, 1].max() + buffer),
        )


@dataclass(frozen=True)
class TrapArray:
    """Ordered trap locations; trap ``j`` (1-based) is ``locations[j - 1]``."""

    locations: np.ndarray

    def __post_init__(self):
        locs = np.ascontiguousarray(np.asarray(self.locations, dtype=float).reshape(-1, 2))
        if locs.shape[0] < 1:
            raise ValueError("a trap array needs at least one trap")
        if not np.all(np.isfinite(locs)):
            raise ValueError("trap coordinates must be finite")
        locs.setflags(write=False)
        object.__setattr__(self, "locations", locs)

    @property
    def J(self) -> int:
        return self.locations.shape[0]

    def __len__(self):
        return self.J

    def check_inside(self, domain: Domain) -> None:
        if not np.all(domain.contains(self.locations)):
            raise ValueError("all traps must lie inside the domain")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trap_id", "x", "y"])
            for j, (x, y) in enumerate(self.locations, start=1):
                w.writerow([j, repr(float(x)), repr(float(y))])

    @classmethod
    def from_csv(cls, path) -> "TrapArray":
        rows = _read_csv(path, ("trap_id", "x", "y"))
        ids = [int(r["trap_id"]) for r in rows]
        if sorted(ids) != list(range(1, len(ids) + 1)):
            raise ValueError(f"{path}: trap_id must be 1..J without gaps")
        locs = np.empty((len(rows), 2))
        for r, j in zip(rows, ids):
            locs[j - 1] = float(r["x"]), float(r["y"])
        return cls(locs)


def _read_csv(path, required) -> list[dict]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in required):
            raise ValueError(f"{path}: header must contain {','.join(required)}")
        return list(reader)


def distance(p, q) -> float:
    """Euclidean distance between two points."""
    return float(np.hypot(q[0] - p[0], q[1] - p[1]))


def pairwise_distances(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def uniform_sample(domain: Domain, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on ``domain``; shape ``(2,)`` or ``(size, 2)``."""
    shape = (2,) if size is None else (size, 2)
    u = rng.random(shape)
    lo = np.array([domain.xmin, domain.ymin])
    span = np.array([domain.xmax - domain.xmin, domain.ymax - domain.ymin])
    return lo + u * span


def make_trap_grid(rows: int, cols: int, spacing: float, center=(0.0, 0.0)) -> TrapArray:
    """Regular ``rows x cols`` grid, row-major, centred on ``center``."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    ys = (np.arange(rows) - (rows - 1) / 2.0) * spacing + center[1]
    xs = (np.arange(cols) - (cols - 1) / 2.0) * spacing + center[0]
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    return TrapArray(np.column_stack([gx.ravel(), gy.ravel()]))
