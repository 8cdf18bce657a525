"""Log normalizing constants of the fixed-n Strauss process.

``d/da log c_n(a, b) = -E[N_b | a, b, n]`` and ``c_n(0, b) = |D|^n``, so

    log c_n(a, b) = n log|D| - int_0^a E[N_b | a', b, n] da'.

The expected pair count is estimated by simulation on a grid of ``a'``,
smoothed with a weighted least-squares polynomial in ``a'`` and integrated
in closed form.  One polynomial is stored per ``(b, n)`` cell.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from scrstrauss.geometry import Domain, uniform_sample
from scrstrauss.strauss import StraussParams, chained_pair_counts, metropolis_sweeps

log = logging.getLogger(__name__)

FORMAT_NAME = "scrstrauss-normconst"
FORMAT_VERSION = 1
STDERR_FLOOR = 1e-6


class FitError(RuntimeError):
    """Weighted least-squares system could not be solved."""


class OutOfGridError(KeyError):
    """Query outside the tabulated (b, n) grid or a-range."""

    def __str__(self):
        return str(self.args[0]) if self.args else "out of grid"


@dataclass(frozen=True)
class GridSpec:
    a_grid: tuple
    b_grid: tuple
    n_grid: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.a_grid)
        b = tuple(float(v) for v in self.b_grid)
        n = tuple(int(v) for v in self.n_grid)
        for name, g in (("a_grid", a), ("b_grid", b), ("n_grid", n)):
            if not g:
                raise ValueError(f"{name} is empty")
            if any(y <= x for x, y in zip(g, g[1:])):
                raise ValueError(f"{name} must be strictly increasing")
        if a[0] != 0.0:
            raise ValueError("a_grid must start at 0")
        if b[0] <= 0:
            raise ValueError("b_grid must be positive")
        if n[0] < 1:
            raise ValueError("n_grid must be positive")
        object.__setattr__(self, "a_grid", a)
        object.__setattr__(self, "b_grid", b)
        object.__setattr__(self, "n_grid", n)

    @classmethod
    def full(cls) -> "GridSpec":
        """a' = 0.0, 0.1, ..., 3.0; b = 1..10; n = 100..200."""
        return cls(tuple(np.round(np.arange(31) * 0.1, 10)), tuple(range(1, 11)), tuple(range(100, 201)))


def fit_polynomial_wls(xs, ys, stderrs, degree: int, cell=None) -> np.ndarray:
    """Weighted least-squares polynomial, weights ``1 / stderr^2``.

    Returns coefficients constant-first.  Standard errors are floored at
    ``STDERR_FLOOR``.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    se = np.maximum(np.asarray(stderrs, dtype=float), STDERR_FLOOR)
    where = f" in cell {cell}" if cell is not None else ""
    if xs.shape[0] <= degree:
        raise FitError(f"need more than {degree} points for degree {degree}{where}")
    sw = 1.0 / se
    V = np.vander(xs, degree + 1, increasing=True)
    A = V * sw[:, None]
    # column scaling keeps the high powers comparable to the constant column
    scale = np.linalg.norm(A, axis=0)
    if np.any(scale == 0) or not np.all(np.isfinite(A)):
        raise FitError(f"singular normal equations{where}")
    coef, _, rank, _ = np.linalg.lstsq(A / scale, ys * sw, rcond=None)
    if rank < degree + 1:
        raise FitError(f"singular normal equations{where} (rank {rank} < {degree + 1})")
    return coef / scale


def integrate_polynomial(coeffs, lower: float, upper: float) -> float:
    """Exact integral of ``sum_k c_k x^k`` over ``[lower, upper]``."""
    c = np.asarray(coeffs, dtype=float)
    k = np.arange(1, c.shape[0] + 1)
    return float(np.sum(c * (upper**k - lower**k) / k))


def estimate_mean_pair_count(a: float, b: float, n: int, n_samples: int, burn_in: int,
                             rng: np.random.Generator, domain: Domain, init=None,
                             return_state: bool = False):
    """Mean and standard error of the pair count over chained Strauss draws.

    Each of the ``n_samples`` draws runs ``burn_in`` sweeps starting from the
    previous draw.  The standard error is sd / sqrt(n_samples).
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if n < 2:
        if not return_state:
            return 0.0, 0.0
        state = uniform_sample(domain, rng, n) if init is None else np.asarray(init, dtype=float)
        return 0.0, 0.0, state
    pts = uniform_sample(domain, rng, n) if init is None else np.array(init, dtype=float).reshape(n, 2)
    counts = chained_pair_counts(pts, StraussParams(a, b), domain, n_samples, burn_in, rng)
    mean = float(counts.mean())
    se = float(counts.std(ddof=1) / np.sqrt(n_samples))
    return (mean, se, pts) if return_state else (mean, se)


@dataclass
class NormConstTable:
    grid: GridSpec
    domain_area: float
    degree: int
    coeffs: np.ndarray  # (len(b_grid), len(n_grid), degree + 1)
    means: np.ndarray  # (len(b_grid), len(n_grid), len(a_grid))
    stderrs: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        nb_, nn_ = len(self.grid.b_grid), len(self.grid.n_grid)
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(nb_, nn_, self.degree + 1)
        self.means = np.asarray(self.means, dtype=float).reshape(nb_, nn_, len(self.grid.a_grid))
        self.stderrs = np.asarray(self.stderrs, dtype=float).reshape(self.means.shape)
        self._b_index = {b: i for i, b in enumerate(self.grid.b_grid)}
        self._n_index = {n: i for i, n in enumerate(self.grid.n_grid)}
        self._powers = np.arange(1, self.degree + 2)

    # -- queries -------------------------------------------------------
    def b_index(self, b: float) -> int:
        i = self._b_index.get(float(b))
        if i is None:
            for bb, j in self._b_index.items():
                if abs(bb - b) <= 1e-9 * max(1.0, abs(b)):
                    return j
            raise OutOfGridError(f"b={b} is not on the table grid {self.grid.b_grid}")
        return i

    def n_index(self, n: int) -> int:
        i = self._n_index.get(int(n))
        if i is None:
            raise OutOfGridError(
                f"n={n} is outside the table n-grid [{self.grid.n_grid[0]}..{self.grid.n_grid[-1]}]"
            )
        return i

    def check_a(self, a: float) -> None:
        if not (0.0 <= a <= self.grid.a_grid[-1] + 1e-12):
            raise OutOfGridError(f"a={a} outside [0, {self.grid.a_grid[-1]}]")

    def covers(self, n_values) -> bool:
        return all(int(n) <= 1 or int(n) in self._n_index for n in n_values)

    def log_c(self, a: float, b: float, n: int) -> float:
        self.check_a(a)
        n = int(n)
        if n < 0:
            raise OutOfGridError(f"n={n} is negative")
        if n <= 1:
            # no pairs: c_0 = 1, c_1 = |D|
            return n * np.log(self.domain_area)
        bi = self.b_index(b)
        ni = self.n_index(n)
        if a == 0.0:
            return n * np.log(self.domain_area)
        return n * np.log(self.domain_area) - integrate_polynomial(self.coeffs[bi, ni], 0.0, a)

    def log_c_all_n(self, a: float, bi: int) -> np.ndarray:
        """``log c_n(a, b)`` for every n in the n-grid at b-grid index ``bi``."""
        n = np.asarray(self.grid.n_grid, dtype=float)
        base = n * np.log(self.domain_area)
        if a == 0.0:
            return base
        return base - self.coeffs[bi] @ (a**self._powers / self._powers)

    def expected_pair_count(self, a: float, b: float, n: int) -> float:
        if n <= 1:
            return 0.0
        c = self.coeffs[self.b_index(b), self.n_index(n)]
        return float(np.polynomial.polynomial.polyval(a, c))

    # -- persistence ---------------------------------------------------
    def to_dict(self) -> dict:
        h = lambda arr: [float(v).hex() for v in np.asarray(arr, dtype=float).ravel()]
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "grid": {k: list(v) for k, v in asdict(self.grid).items()},
            "domain_area": float(self.domain_area).hex(),
            "degree": int(self.degree),
            "coeffs": h(self.coeffs),
            "means": h(self.means),
            "stderrs": h(self.stderrs),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormConstTable":
        if d.get("format") != FORMAT_NAME:
            raise ValueError("not a normalizing-constant table file")
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported table version {d.get('version')}")
        uh = lambda xs: np.array([float.fromhex(v) for v in xs])
        grid = GridSpec(**{k: tuple(v) for k, v in d["grid"].items()})
        return cls(grid, float.fromhex(d["domain_area"]), int(d["degree"]), uh(d["coeffs"]),
                   uh(d["means"]), uh(d["stderrs"]), d.get("provenance", {}))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "NormConstTable":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_csv(self, path) -> None:
        """Long-format export: one row per (b, n) with coefficients c0..c<degree>."""
        with open(path, "w") as fh:
            cols = ",".join(f"c{k}" for k in range(self.degree + 1))
            fh.write(f"b,n,{cols}\n")
            for bi, b in enumerate(self.grid.b_grid):
                for ni, n in enumerate(self.grid.n_grid):
                    vals = ",".join(repr(float(v)) for v in self.coeffs[bi, ni])
                    fh.write(f"{b!r},{n},{vals}\n")


def log_c(table: NormConstTable, a: float, b: float, n: int) -> float:
    return table.log_c(a, b, n)


def _cell_rng(seed: int, bi: int, ni: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(bi, ni))))


def _build_cell(args):
    spec, bounds, bi, ni, n_samples, burn_in, warmup, seed = args
    domain = Domain(*bounds)
    b = spec.b_grid[bi]
    n = spec.n_grid[ni]
    na = len(spec.a_grid)
    means = np.zeros(na)
    ses = np.zeros(na)
    if n < 2:
        return bi, ni, means, ses
    rng = _cell_rng(seed, bi, ni)
    pts = uniform_sample(domain, rng, n)
    for ai, a in enumerate(spec.a_grid):
        metropolis_sweeps(pts, StraussParams(a, b), domain, warmup, rng)
        means[ai], ses[ai], pts = estimate_mean_pair_count(
            a, b, n, n_samples, burn_in, rng, domain, init=pts, return_state=True)
    return bi, ni, means, ses


def build_table(spec: GridSpec, domain: Domain, n_samples: int = 1000, burn_in: int = 200,
                seed: int = 0, degree: int = 10, warmup: int | None = None, workers: int = 1,
                progress=None) -> NormConstTable:
    """Simulate ``E[N | a', b, n]`` on the grid and fit one polynomial per (b, n).

    ``burn_in`` sweeps separate consecutive retained draws; ``warmup``
    (default ``burn_in``) extra sweeps are run whenever ``a'`` changes.  The
    chain for a (b, n) cell walks up the a'-grid, each level starting from
    the previous level's final draw.  Cells use independent streams derived
    from ``(seed, b index, n index)``.
    """
    warmup = burn_in if warmup is None else warmup
    deg = min(degree, len(spec.a_grid) - 1)
    nb_, nn_, na = len(spec.b_grid), len(spec.n_grid), len(spec.a_grid)
    means = np.zeros((nb_, nn_, na))
    ses = np.zeros((nb_, nn_, na))
    coeffs = np.zeros((nb_, nn_, deg + 1))
    tasks = [(spec, tuple(domain.bounds), bi, ni, n_samples, burn_in, warmup, seed)
             for bi in range(nb_) for ni in range(nn_)]
    if workers > 1:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_build_cell, tasks, chunksize=1)
    else:
        pool = None
        results = map(_build_cell, tasks)
    try:
        for done, (bi, ni, m, s) in enumerate(results, start=1):
            means[bi, ni], ses[bi, ni] = m, s
            cell = (spec.b_grid[bi], spec.n_grid[ni])
            if spec.n_grid[ni] >= 2:
                coeffs[bi, ni] = fit_polynomial_wls(spec.a_grid, m, s, deg, cell=f"b={cell[0]}, n={cell[1]}")
            log.info("cell b=%g n=%d done (%d/%d)", cell[0], cell[1], done, len(tasks))
            if progress is not None:
                progress(done, len(tasks), cell)
    finally:
        if pool is not None:
            pool.shutdown()
    prov = {"n_samples": int(n_samples), "burn_in": int(burn_in), "warmup": int(warmup),
            "seed": int(seed), "requested_degree": int(degree),
            "domain_bounds": [float(v) for v in domain.bounds]}
    return NormConstTable(spec, domain.area, deg, coeffs, means, ses, prov)
