"""Trap-encounter observation model.

On each occasion an individual with home-range center ``s`` lands in trap
``j`` with probability proportional to ``delta * lam * w(||s - t_j||)`` or
escapes capture with weight 1, where ``w(d) = exp(-0.5 (d / rho)^2)``.
Trap indices are 1-based; index ``J + 1`` means "not captured".
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from scrstrauss.geometry import TrapArray, _read_csv


@dataclass(frozen=True)
class DetectionParams:
    lam: float
    rho: float

    def __post_init__(self):
        if not (self.lam > 0 and self.rho > 0):
            raise ValueError(f"lambda and rho must be positive, got {self.lam}, {self.rho}")


@dataclass
class CaptureHistory:
    """Observed capture records.

    ``Y[i, k]`` is the 1-based trap of observed individual ``i`` on occasion
    ``k`` (``J + 1`` for no capture).  ``periods[k]`` optionally gives the
    0-based primary period of occasion ``k``.  ``source_index`` maps observed
    rows back to rows of the simulated population, when known.
    """

    Y: np.ndarray
    J: int
    periods: np.ndarray | None = None
    source_index: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=np.int64)
        if Y.ndim != 2:
            Y = Y.reshape(-1, Y.shape[-1] if Y.ndim else 0)
        self.Y = Y
        if Y.size and (Y.min() < 1 or Y.max() > self.J + 1):
            raise ValueError(f"capture indices must lie in 1..{self.J + 1}")
        if Y.shape[0] and np.any(np.all(Y == self.J + 1, axis=1)):
            raise ValueError("every observed individual needs at least one capture")
        if self.periods is not None:
            p = np.asarray(self.periods, dtype=np.int64)
            if p.shape != (self.K,):
                raise ValueError(f"period map has {p.shape[0]} entries for {self.K} occasions")
            if p.min() < 0:
                raise ValueError("period indices must be >= 0")
            self.periods = p

    @property
    def n_observed(self) -> int:
        return self.Y.shape[0]

    @property
    def K(self) -> int:
        return self.Y.shape[1]

    @property
    def T(self) -> int:
        return 1 if self.periods is None else int(self.periods.max()) + 1

    def to_csv(self, path) -> None:
        """Long format; trap_id 0 marks no capture."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["individual_id", "occasion", "trap_id"])
            for i, row in enumerate(self.Y, start=1):
                for k, y in enumerate(row, start=1):
                    w.writerow([i, k, 0 if y == self.J + 1 else int(y)])

    @classmethod
    def from_csv(cls, path, J: int, K: int | None = None, periods=None) -> "CaptureHistory":
        rows = _read_csv(path, ("individual_id", "occasion", "trap_id"))
        recs = []
        for lineno, r in enumerate(rows, start=2):
            try:
                i, k, t = int(r["individual_id"]), int(r["occasion"]), int(r["trap_id"])
            except (TypeError, ValueError):
                raise ValueError(f"{path}:{lineno}: non-integer field") from None
            if k < 1 or not 0 <= t <= J:
                raise ValueError(f"{path}:{lineno}: occasion or trap_id out of range")
            recs.append((i, k, t))
        ids = sorted({i for i, _, _ in recs})
        K = max((k for _, k, _ in recs), default=0) if K is None else K
        if periods is not None:
            K = max(K, len(periods))
        pos = {i: m for m, i in enumerate(ids)}
        Y = np.full((len(ids), K), J + 1, dtype=np.int64)
        for i, k, t in recs:
            if k > K:
                raise ValueError(f"{path}: occasion {k} exceeds K={K}")
            if t:
                Y[pos[i], k - 1] = t
        keep = np.any(Y <= J, axis=1)
        return cls(Y[keep], J, periods=periods)


def detection_kernel(d, rho: float):
    """Half-normal detection kernel ``exp(-0.5 (d / rho)^2)``."""
    d = np.asarray(d, dtype=float)
    out = np.exp(-0.5 * (d / rho) ** 2)
    return float(out) if out.ndim == 0 else out


def trap_weights(s, params: DetectionParams, traps: TrapArray) -> np.ndarray:
    d2 = np.sum((traps.locations - np.asarray(s, dtype=float)) ** 2, axis=1)
    return params.lam * np.exp(-0.5 * d2 / params.rho**2)


def capture_probs(s, delta: int, params: DetectionParams, traps: TrapArray) -> np.ndarray:
    """Length ``J + 1`` cell probabilities for one occasion; last cell is no capture."""
    out = np.zeros(traps.J + 1)
    if not delta:
        out[-1] = 1.0
        return out
    h = trap_weights(s, params, traps)
    denom = 1.0 + h.sum()
    out[:-1] = h / denom
    out[-1] = 1.0 / denom
    return out


def log_likelihood_individual(y, s, delta: int, params: DetectionParams, traps: TrapArray) -> float:
    """Sum over occasions of log capture probabilities for history ``y``."""
    y = np.asarray(y, dtype=np.int64)
    p = capture_probs(s, delta, params, traps)
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(p[y - 1])))


def simulate_captures(locations, deltas, params: DetectionParams, traps: TrapArray, K: int,
                      rng: np.random.Generator, periods=None, period_deltas=None) -> CaptureHistory:
    """Draw capture histories and keep only individuals caught at least once.

    With ``periods`` (occasion -> period map) and ``period_deltas`` (N x T
    presence indicators) an individual can only be caught in periods where it
    is present.
    """
    locations = np.asarray(locations, dtype=float).reshape(-1, 2)
    deltas = np.asarray(deltas, dtype=np.int64)
    if locations.shape[0] != deltas.shape[0]:
        raise ValueError("locations and deltas must align")
    J = traps.J
    N = locations.shape[0]
    if periods is not None:
        periods = np.asarray(periods, dtype=np.int64)
        if periods.shape != (K,):
            raise ValueError("period map must have K entries")
        period_deltas = np.asarray(period_deltas, dtype=np.int64).reshape(N, -1)
    Y = np.full((N, K), J + 1, dtype=np.int64)
    for i in range(N):
        if not deltas[i]:
            continue
        cdf = np.cumsum(capture_probs(locations[i], 1, params, traps))
        cdf[-1] = 1.0
        u = rng.random(K)
        Y[i] = np.searchsorted(cdf, u, side="right") + 1
        if periods is not None:
            absent = period_deltas[i, periods] == 0
            Y[i, absent] = J + 1
    caught = np.flatnonzero(np.any(Y <= J, axis=1))
    return CaptureHistory(Y[caught], J, periods=periods, source_index=caught)
