"""Metropolis-within-Gibbs sampler for SCR with Strauss-distributed centers.

The population is embedded in ``N`` augmented individuals with inclusion
indicators ``delta``.  Observed individuals occupy the first rows.  Centers
of excluded individuals are kept (uniform on the domain) so the state never
changes dimension.

One iteration is a fixed systematic scan::

    delta block, pi, b, a, log(lambda), log(rho), center block, period block

Step sizes of the Metropolis updates adapt towards a 0.4 acceptance rate
during burn-in and are frozen afterwards.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field

import numba as nb
import numpy as np

from scrstrauss.geometry import Domain, TrapArray
from scrstrauss.likelihood import CaptureHistory
from scrstrauss.normconst import NormConstTable, OutOfGridError

log = logging.getLogger(__name__)

PARAMS = ("n", "a", "b", "lam", "rho", "pi")
PERIOD_PARAMS = ("pi2",)
SCALARS = ("a", "log_lambda", "log_rho")


@dataclass(frozen=True)
class Priors:
    N: int = 200
    a_pi: float = 1.0
    b_pi: float = 1.0
    a_max: float = 3.0
    b_support: tuple = tuple(float(b) for b in range(1, 11))
    mu_log_lambda: float = 0.0
    sd_log_lambda: float = 1.0
    mu_log_rho: float = 2.0
    sd_log_rho: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "b_support", tuple(float(b) for b in self.b_support))
        if self.N < 1:
            raise ValueError("augmentation bound N must be >= 1")
        if min(self.a_pi, self.b_pi, self.a_max, self.sd_log_lambda, self.sd_log_rho) <= 0:
            raise ValueError("prior hyperparameters must be positive")
        if not self.b_support or min(self.b_support) <= 0:
            raise ValueError("b_support must be a non-empty set of positive ranges")


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 50_000
    burn_in: int = 10_000
    thin: int = 1
    seed: int = 0
    tune: bool = True
    model: str = "strauss"  # or "independence"
    target_accept: float = 0.4
    adapt_interval: int = 50
    steps: dict = field(default_factory=lambda: {"a": 0.3, "log_lambda": 0.1, "log_rho": 0.05, "s": 2.0})
    fixed: tuple = ()
    init: dict = field(default_factory=dict)
    debug: bool = False

    def __post_init__(self):
        if self.model not in ("strauss", "independence"):
            raise ValueError(f"unknown model {self.model!r}")
        if not (0 <= self.burn_in < self.iterations) or self.thin < 1:
            raise ValueError("need 0 <= burn_in < iterations and thin >= 1")
        unknown = set(self.fixed) - {"delta", "pi", "b", "a", "log_lambda", "log_rho", "s", "periods"}
        if unknown:
            raise ValueError(f"cannot fix unknown blocks {sorted(unknown)}")


class CoverageError(OutOfGridError):
    pass


class AnalyticLogC:
    """Exact ``log c_n = n log|D|`` of the independence (a = 0) model."""

    def __init__(self, domain_area: float, b_support=(1.0,)):
        self.domain_area = float(domain_area)
        self.b_support = tuple(b_support)

    def log_c(self, a, b, n):
        if a != 0:
            raise ValueError("analytic constant only exists at a = 0")
        return n * np.log(self.domain_area)

    def vector(self, a, b, nmax):
        return np.arange(nmax + 2) * np.log(self.domain_area)


class TableLogC:
    """Dense ``log c_n(a, b)`` lookups over n = 0..N+1 for the sampler."""

    def __init__(self, table: NormConstTable):
        self.table = table
        self.domain_area = table.domain_area
        self._cache_key = None
        self._cache = None

    def log_c(self, a, b, n):
        return self.table.log_c(a, b, n)

    def vector(self, a, b, nmax):
        key = (a, b, nmax)
        if key != self._cache_key:
            t = self.table
            t.check_a(a)
            out = np.full(nmax + 2, np.nan)
            logd = np.log(t.domain_area)
            out[0], out[1] = 0.0, logd
            bi = t.b_index(b)
            vals = t.log_c_all_n(a, bi)
            grid = np.asarray(t.grid.n_grid)
            ok = grid <= nmax + 1
            out[grid[ok]] = vals[ok]
            self._cache_key, self._cache = key, out
        return self._cache


# ---------------------------------------------------------------------------
# numba kernels


@nb.njit(cache=True)
def _trap_sum(px, py, tx, ty, inv2r2):
    w = 0.0
    for j in range(tx.shape[0]):
        dx = px - tx[j]
        dy = py - ty[j]
        w += np.exp(-(dx * dx + dy * dy) * inv2r2)
    return w


@nb.njit(cache=True)
def _all_trap_sums(s, tx, ty, rho):
    inv2r2 = 0.5 / (rho * rho)
    out = np.empty(s.shape[0])
    for i in range(s.shape[0]):
        out[i] = _trap_sum(s[i, 0], s[i, 1], tx, ty, inv2r2)
    return out


@nb.njit(cache=True)
def _cap_sqdist(px, py, i, cap_ptr, cap_trap, tx, ty):
    d = 0.0
    for m in range(cap_ptr[i], cap_ptr[i + 1]):
        dx = px - tx[cap_trap[m]]
        dy = py - ty[cap_trap[m]]
        d += dx * dx + dy * dy
    return d


@nb.njit(cache=True)
def _in_pop_neighbours(s, delta, px, py, b2, skip):
    c = 0
    for j in range(s.shape[0]):
        if j == skip or delta[j] == 0:
            continue
        dx = px - s[j, 0]
        dy = py - s[j, 1]
        if dx * dx + dy * dy < b2:
            c += 1
    return c


@nb.njit(cache=True)
def _pair_counts_multi(pts, b2s):
    out = np.zeros(b2s.shape[0], dtype=np.int64)
    n = pts.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            dx = pts[i, 0] - pts[j, 0]
            dy = pts[i, 1] - pts[j, 1]
            d2 = dx * dx + dy * dy
            for k in range(b2s.shape[0]):
                if d2 < b2s[k]:
                    out[k] += 1
    return out


@nb.njit(cache=True)
def _delta_block(idx, delta, delta_t, observed, s, W, K_t, log_pi_odds, pi2, a, b2,
                 logc, log_area, lam, n, npairs, periods_on, track, rng):
    T = K_t.shape[0]
    for i in idx:
        if observed[i]:
            continue
        d_old = delta[i]
        m = 0
        if track:
            m = _in_pop_neighbours(s, delta, s[i, 0], s[i, 1], b2, i)
        n_minus = n - d_old
        lc0 = logc[n_minus]
        lc1 = logc[n_minus + 1]
        if np.isnan(lc0):
            return n, npairs, n_minus
        if np.isnan(lc1):
            return n, npairs, n_minus + 1
        h = np.log1p(lam * W[i])
        ll1 = 0.0
        if periods_on:
            for t in range(T):
                ll1 += np.log(pi2 * np.exp(-K_t[t] * h) + 1.0 - pi2)
        else:
            ll1 = -K_t[0] * h
        lo = log_pi_odds - a * m - lc1 + lc0 + log_area + ll1
        if lo >= 0:
            p1 = 1.0 / (1.0 + np.exp(-lo))
        else:
            e = np.exp(lo)
            p1 = e / (1.0 + e)
        d_new = 1 if rng.random() < p1 else 0
        if d_new != d_old:
            delta[i] = d_new
            if d_new == 1:
                n += 1
                npairs += m
            else:
                n -= 1
                npairs -= m
        if periods_on:
            for t in range(T):
                if d_new == 1:
                    q = pi2 * np.exp(-K_t[t] * h)
                    delta_t[i, t] = 1 if rng.random() * (q + 1.0 - pi2) < q else 0
                else:
                    delta_t[i, t] = 0
        else:
            delta_t[i, 0] = d_new
    return n, npairs, -1


@nb.njit(cache=True)
def _location_block(idx, props, s, delta, delta_t, K_t, W, Dsq, cap_ptr, cap_trap, tx, ty,
                    lam, rho, a, b2, bounds, track, rng):
    inv2r2 = 0.5 / (rho * rho)
    acc = 0
    prop = 0
    dpairs = 0
    for r in range(idx.shape[0]):
        i = idx[r]
        px = props[r, 0]
        py = props[r, 1]
        in_pop = delta[i] == 1
        if in_pop:
            prop += 1
        if px < bounds[0] or px > bounds[1] or py < bounds[2] or py > bounds[3]:
            continue
        w_new = _trap_sum(px, py, tx, ty, inv2r2)
        d_new = _cap_sqdist(px, py, i, cap_ptr, cap_trap, tx, ty)
        dm = 0
        if in_pop:
            keff = 0.0
            for t in range(K_t.shape[0]):
                keff += delta_t[i, t] * K_t[t]
            logr = -(d_new - Dsq[i]) * inv2r2 - keff * (np.log1p(lam * w_new) - np.log1p(lam * W[i]))
            if track:
                dm = (_in_pop_neighbours(s, delta, px, py, b2, i)
                      - _in_pop_neighbours(s, delta, s[i, 0], s[i, 1], b2, i))
                logr -= a * dm
            if logr < 0.0 and np.log(rng.random()) >= logr:
                continue
            acc += 1
            dpairs += dm
        s[i, 0] = px
        s[i, 1] = py
        W[i] = w_new
        Dsq[i] = d_new
    return acc, prop, dpairs


# ---------------------------------------------------------------------------


@dataclass
class ChainOutput:
    records: dict
    acceptance: dict
    steps: dict
    provenance: dict

    @property
    def n_records(self) -> int:
        return len(self.records["n"])

    def to_csv(self, path) -> None:
        cols = list(self.records)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration"] + cols)
            its = self.records_iterations()
            for r in range(self.n_records):
                w.writerow([int(its[r])] + [_fmt(self.records[c][r]) for c in cols])

    def records_iterations(self):
        return self.provenance["burn_in"] + self.provenance["thin"] * (np.arange(self.n_records) + 1)

    @classmethod
    def read_csv(cls, path) -> dict:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            return {}
        return {k: np.array([float(r[k]) for r in rows]) for k in rows[0] if k != "iteration"}


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class Sampler:
    """Holds the augmented state and implements each full-conditional update."""

    def __init__(self, data: CaptureHistory, traps: TrapArray, domain: Domain, priors: Priors,
                 table: NormConstTable | None = None, config: ChainConfig | None = None):
        self.config = config = config or ChainConfig()
        self.data, self.traps, self.domain, self.priors = data, traps, domain, priors
        traps.check_inside(domain)
        if data.J != traps.J:
            raise ValueError(f"capture data use J={data.J} traps, trap array has {traps.J}")
        N = priors.N
        n_obs = data.n_observed
        if n_obs > N:
            raise ValueError(f"{n_obs} observed individuals exceed augmentation bound N={N}")
        self.strauss = config.model == "strauss"
        if self.strauss:
            if table is None:
                raise ValueError("the Strauss model needs a normalizing-constant table (run `table build`)")
            missing = [b for b in priors.b_support if not any(abs(b - g) < 1e-9 for g in table.grid.b_grid)]
            if missing:
                raise CoverageError(f"b values {missing} are not in the table b-grid {table.grid.b_grid}")
            if priors.a_max > table.grid.a_grid[-1] + 1e-12:
                raise CoverageError(f"a_max={priors.a_max} exceeds table a-range {table.grid.a_grid[-1]}")
            gaps = [n for n in range(max(n_obs, 2), N + 1) if n not in set(table.grid.n_grid)]
            if gaps:
                raise CoverageError(
                    f"table n-grid does not cover reachable n in [{n_obs}, {N}]; first missing n={gaps[0]}")
            if abs(table.domain_area - domain.area) > 1e-9 * domain.area:
                raise ValueError(f"table was built for |D|={table.domain_area}, domain has |D|={domain.area}")
            self.logc = TableLogC(table)
        else:
            self.logc = AnalyticLogC(domain.area)
        self.rng = np.random.Generator(np.random.PCG64(config.seed))
        self.tx = np.ascontiguousarray(traps.locations[:, 0])
        self.ty = np.ascontiguousarray(traps.locations[:, 1])
        self.bounds = domain.bounds
        self.log_area = float(np.log(domain.area))
        self.b_support = np.array(priors.b_support)

        # captures, CSR by individual; periods
        J, K = data.J, data.K
        self.periods_on = data.periods is not None
        periods = data.periods if self.periods_on else np.zeros(K, dtype=np.int64)
        T = int(periods.max()) + 1 if K else 1
        self.K_t = np.bincount(periods, minlength=T).astype(float)
        ptr = [0]
        traps_hit = []
        self.caught_t = np.zeros((N, T), dtype=bool)
        self.n_caps = np.zeros(N)
        for i in range(n_obs):
            hit = np.flatnonzero(data.Y[i] <= J)
            traps_hit.extend(data.Y[i, hit] - 1)
            ptr.append(ptr[-1] + hit.size)
            self.caught_t[i, periods[hit]] = True
            self.n_caps[i] = hit.size
        ptr.extend([ptr[-1]] * (N - n_obs))
        self.cap_ptr = np.array(ptr, dtype=np.int64)
        self.cap_trap = np.array(traps_hit, dtype=np.int64)
        self.observed = np.zeros(N, dtype=np.bool_)
        self.observed[:n_obs] = True
        self._init_state()

    # -- state -----------------------------------------------------------
    def _init_state(self):
        cfg, pr, rng = self.config, self.priors, self.rng
        N, n_obs = pr.N, self.data.n_observed
        init = cfg.init
        s = np.empty((N, 2))
        for i in range(n_obs):
            hits = self.cap_trap[self.cap_ptr[i]:self.cap_ptr[i + 1]]
            s[i] = self.traps.locations[hits].mean(axis=0)
        lo = np.array([self.domain.xmin, self.domain.ymin])
        span = np.array([self.domain.xmax - self.domain.xmin, self.domain.ymax - self.domain.ymin])
        s[n_obs:] = lo + rng.random((N - n_obs, 2)) * span
        if "s" in init:
            s[:] = np.asarray(init["s"], dtype=float).reshape(N, 2)
        self.s = np.ascontiguousarray(s)
        if "delta" in init:
            delta = np.asarray(init["delta"], dtype=np.int64).copy()
            if np.any(delta[:n_obs] == 0):
                raise ValueError("observed individuals must start with delta = 1")
        else:
            delta = np.zeros(N, dtype=np.int64)
            delta[:n_obs] = 1
            target = int(init.get("n", min(N, max(n_obs, round(1.25 * n_obs)))))
            extra = rng.permutation(np.arange(n_obs, N))[: max(0, target - n_obs)]
            delta[extra] = 1
        self.delta = delta
        T = self.K_t.shape[0]
        self.delta_t = np.repeat(delta[:, None], T, axis=1).astype(np.int64)
        self.pi = float(init.get("pi", 0.5))
        self.pi2 = float(init.get("pi2", 0.9))
        self.a = 0.0 if not self.strauss else float(init.get("a", min(0.5, pr.a_max / 2)))
        b0 = float(init.get("b", pr.b_support[len(pr.b_support) // 2]))
        self.b_idx = int(np.argmin(np.abs(self.b_support - b0)))
        self.lam = float(init.get("lam", np.exp(pr.mu_log_lambda)))
        self.rho = float(init.get("rho", np.exp(pr.mu_log_rho)))
        self.W = _all_trap_sums(self.s, self.tx, self.ty, self.rho)
        self.Dsq = np.array([_cap_sqdist(self.s[i, 0], self.s[i, 1], i, self.cap_ptr, self.cap_trap,
                                         self.tx, self.ty) for i in range(N)])
        self.steps = {"a": 0.3, "log_lambda": 0.1, "log_rho": 0.05, "s": 2.0, **cfg.steps}
        self._acc = {k: [0, 0] for k in ("a", "log_lambda", "log_rho", "s")}
        self._refresh_pairs()

    @property
    def b(self) -> float:
        return float(self.b_support[self.b_idx])

    @property
    def n(self) -> int:
        return int(self.delta.sum())

    def _refresh_pairs(self):
        self.n_cur = int(self.delta.sum())
        pts = self.s[self.delta == 1]
        self.npairs = int(_pair_counts_multi(np.ascontiguousarray(pts), np.array([self.b**2]))[0])

    def logc_vector(self):
        try:
            return self.logc.vector(self.a, self.b, self.priors.N)
        except OutOfGridError as e:
            raise CoverageError(str(e)) from None

    def keff(self) -> np.ndarray:
        return self.delta_t @ self.K_t

    def log_lik(self, lam=None, rho=None, W=None) -> float:
        """Capture log-likelihood of the in-population individuals."""
        lam = self.lam if lam is None else lam
        rho = self.rho if rho is None else rho
        W = self.W if W is None else W
        on = self.delta == 1
        keff = self.keff()[on]
        return float(np.sum(self.n_caps[on] * np.log(lam) - 0.5 * self.Dsq[on] / rho**2
                            - keff * np.log1p(lam * W[on])))

    # -- Gibbs updates ----------------------------------------------------
    def gibbs_delta(self, idx=None):
        idx = np.arange(self.priors.N) if idx is None else np.atleast_1d(np.asarray(idx, dtype=np.int64))
        pi = self.pi
        log_odds = np.log(pi) - np.log1p(-pi) if 0 < pi < 1 else (np.inf if pi >= 1 else -np.inf)
        n, npairs, bad = _delta_block(
            idx, self.delta, self.delta_t, self.observed, self.s, self.W, self.K_t, log_odds, self.pi2,
            self.a, self.b**2, self.logc_vector(), self.log_area, self.lam, self.n_cur, self.npairs,
            self.periods_on, self.strauss, self.rng)
        if bad >= 0:
            raise CoverageError(f"normalizing-constant table does not cover n={bad}")
        self.n_cur, self.npairs = int(n), int(npairs)

    def gibbs_pi(self):
        pr = self.priors
        self.pi = float(self.rng.beta(self.n_cur + pr.a_pi, pr.N - self.n_cur + pr.b_pi))

    def b_log_weights(self) -> tuple[np.ndarray, np.ndarray]:
        pts = np.ascontiguousarray(self.s[self.delta == 1])
        counts = _pair_counts_multi(pts, self.b_support**2)
        logw = np.array([-self.a * counts[k] - self._logc(self.a, b, self.n_cur)
                         for k, b in enumerate(self.b_support)])
        return logw, counts

    def _logc(self, a, b, n):
        try:
            return self.logc.log_c(a, b, n)
        except OutOfGridError as e:
            raise CoverageError(str(e)) from None

    def gibbs_b(self):
        logw, counts = self.b_log_weights()
        p = np.exp(logw - logw.max())
        p /= p.sum()
        k = int(np.searchsorted(np.cumsum(p), self.rng.random() * p.sum(), side="right"))
        self.b_idx = min(k, p.shape[0] - 1)
        self.npairs = int(counts[self.b_idx])

    # -- Metropolis updates ---------------------------------------------
    def metropolis_scalar(self, which: str, step: float | None = None, proposal: float | None = None) -> bool:
        """Random-walk update of ``a``, ``log_lambda`` or ``log_rho``; returns acceptance.

        ``proposal`` (on the updated scale) replaces the Gaussian draw.
        """
        step = self.steps[which] if step is None else step
        if step <= 0:
            raise ValueError("step must be positive")
        pr = self.priors
        z = self.rng.standard_normal() if proposal is None else 0.0
        self._acc[which][1] += 1
        if which == "a":
            prop = self.a + step * z if proposal is None else float(proposal)
            if prop < 0 or prop > pr.a_max:
                return False
            n = self.n_cur
            logr = -(prop - self.a) * self.npairs - self._logc(prop, self.b, n) + self._logc(self.a, self.b, n)
            if logr >= 0 or np.log(self.rng.random()) < logr:
                self.a = float(prop)
                self._acc[which][0] += 1
                return True
            return False
        if which == "log_lambda":
            cur = np.log(self.lam)
            prop = cur + step * z if proposal is None else float(proposal)
            logr = (self.log_lik(lam=np.exp(prop)) - self.log_lik()
                    + _norm_logpdf(prop, pr.mu_log_lambda, pr.sd_log_lambda)
                    - _norm_logpdf(cur, pr.mu_log_lambda, pr.sd_log_lambda))
            if logr >= 0 or np.log(self.rng.random()) < logr:
                self.lam = float(np.exp(prop))
                self._acc[which][0] += 1
                return True
            return False
        if which == "log_rho":
            cur = np.log(self.rho)
            prop = cur + step * z if proposal is None else float(proposal)
            rho_new = float(np.exp(prop))
            W_new = _all_trap_sums(self.s, self.tx, self.ty, rho_new)
            logr = (self.log_lik(rho=rho_new, W=W_new) - self.log_lik()
                    + _norm_logpdf(prop, pr.mu_log_rho, pr.sd_log_rho)
                    - _norm_logpdf(cur, pr.mu_log_rho, pr.sd_log_rho))
            if logr >= 0 or np.log(self.rng.random()) < logr:
                self.rho, self.W = rho_new, W_new
                self._acc[which][0] += 1
                return True
            return False
        raise ValueError(f"unknown scalar {which!r}")

    def metropolis_location(self, idx=None, step: float | None = None, proposals=None):
        """Gaussian random-walk update of the centers in ``idx`` (default: all).

        Every proposal is drawn relative to the center it replaces, so the
        whole block can be drawn up front; ``proposals`` overrides them.
        """
        step = self.steps["s"] if step is None else step
        if step <= 0:
            raise ValueError("step must be positive")
        idx = np.arange(self.priors.N) if idx is None else np.atleast_1d(np.asarray(idx, dtype=np.int64))
        if proposals is None:
            proposals = self.s[idx] + step * self.rng.standard_normal((idx.shape[0], 2))
        proposals = np.ascontiguousarray(np.asarray(proposals, dtype=float).reshape(idx.shape[0], 2))
        acc, prop, dpairs = _location_block(
            idx, proposals, self.s, self.delta, self.delta_t, self.K_t, self.W, self.Dsq, self.cap_ptr, self.cap_trap,
            self.tx, self.ty, self.lam, self.rho, self.a, self.b**2, self.bounds, self.strauss, self.rng)
        self.npairs += int(dpairs)
        self._acc["s"][0] += acc
        self._acc["s"][1] += prop

    def update_period_indicators(self):
        """Resample presence-by-period indicators, then pi2 and pi."""
        if not self.periods_on:
            return
        h = np.log1p(self.lam * self.W)
        q = self.pi2 * np.exp(-np.outer(h, self.K_t))
        p1 = q / (q + 1.0 - self.pi2)
        u = self.rng.random(self.delta_t.shape)
        dt = (u < p1).astype(np.int64)
        dt[self.caught_t] = 1
        dt[self.delta == 0] = 0
        self.delta_t = dt
        on = self.delta == 1
        present = int(dt[on].sum())
        slots = int(on.sum()) * dt.shape[1]
        self.pi2 = float(self.rng.beta(1 + present, 1 + slots - present))
        self.gibbs_pi()

    # -- driver ---------------------------------------------------------------
    def sweep(self):
        fixed = set(self.config.fixed)
        if "delta" not in fixed:
            self.gibbs_delta()
        if "pi" not in fixed:
            self.gibbs_pi()
        if self.strauss:
            if "b" not in fixed and len(self.b_support) > 1:
                self.gibbs_b()
            if "a" not in fixed:
                self.metropolis_scalar("a")
        if "log_lambda" not in fixed:
            self.metropolis_scalar("log_lambda")
        if "log_rho" not in fixed:
            self.metropolis_scalar("log_rho")
        if "s" not in fixed:
            self.metropolis_location()
        if self.periods_on and "periods" not in fixed:
            self.update_period_indicators()
        if self.config.debug:
            self.check_invariants()

    def check_invariants(self):
        N = self.priors.N
        assert self.n_cur == int(self.delta.sum())
        assert self.data.n_observed <= self.n_cur <= N
        assert np.all(self.delta[self.observed] == 1)
        assert np.all(self.domain.contains(self.s))
        pts = np.ascontiguousarray(self.s[self.delta == 1])
        assert self.npairs == int(_pair_counts_multi(pts, np.array([self.b**2]))[0])
        assert np.allclose(self.W, _all_trap_sums(self.s, self.tx, self.ty, self.rho))
        assert np.all(self.delta_t[self.delta == 0] == 0)
        if self.periods_on:
            assert np.all(self.delta_t[self.caught_t] == 1)
        assert 0 <= self.a <= self.priors.a_max

    def _adapt(self, window_acc, k):
        cfg = self.config
        gain = 1.0 / np.sqrt(k)
        for name, (acc, prop) in window_acc.items():
            if prop == 0:
                continue
            rate = acc / prop
            self.steps[name] = float(self.steps[name] * np.exp(gain * (rate - cfg.target_accept)))

    def run(self, progress=None) -> ChainOutput:
        cfg = self.config
        keep = list(PARAMS) + (list(PERIOD_PARAMS) if self.periods_on else [])
        n_rec = (cfg.iterations - cfg.burn_in) // cfg.thin
        rec = {k: np.empty(n_rec, dtype=np.int64 if k == "n" else float) for k in keep}
        r = 0
        k_adapt = 0
        snap = {k: list(v) for k, v in self._acc.items()}
        post = None
        for it in range(1, cfg.iterations + 1):
            self.sweep()
            if it <= cfg.burn_in:
                if cfg.tune and it % cfg.adapt_interval == 0:
                    k_adapt += 1
                    window = {k: (self._acc[k][0] - snap[k][0], self._acc[k][1] - snap[k][1]) for k in self._acc}
                    self._adapt(window, k_adapt)
                    snap = {k: list(v) for k, v in self._acc.items()}
                if it == cfg.burn_in:
                    post = {k: list(v) for k, v in self._acc.items()}
            elif (it - cfg.burn_in) % cfg.thin == 0 and r < n_rec:
                rec["n"][r] = self.n_cur
                rec["a"][r] = self.a
                rec["b"][r] = self.b if self.strauss else np.nan
                rec["lam"][r] = self.lam
                rec["rho"][r] = self.rho
                rec["pi"][r] = self.pi
                if self.periods_on:
                    rec["pi2"][r] = self.pi2
                r += 1
            if progress is not None and it % 1000 == 0:
                progress(it, cfg.iterations)
        post = post or {k: [0, 0] for k in self._acc}
        acceptance = {k: (self._acc[k][0] - post[k][0]) / max(1, self._acc[k][1] - post[k][1])
                      for k in self._acc}
        prov = {"seed": cfg.seed, "iterations": cfg.iterations, "burn_in": cfg.burn_in, "thin": cfg.thin,
                "model": cfg.model, "N": self.priors.N, "n_observed": self.data.n_observed,
                "priors": asdict(self.priors)}
        return ChainOutput(rec, acceptance, dict(self.steps), prov)


def _norm_logpdf(x, mu, sd):
    return -0.5 * ((x - mu) / sd) ** 2


def run_chain(data: CaptureHistory, traps: TrapArray, domain: Domain, priors: Priors,
              table: NormConstTable | None = None, config: ChainConfig | None = None,
              progress=None) -> ChainOutput:
    """Run one posterior chain; deterministic given ``config.seed``."""
    return Sampler(data, traps, domain, priors, table, config).run(progress=progress)
