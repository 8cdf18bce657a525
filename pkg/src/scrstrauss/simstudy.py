"""Simulation study: Strauss vs independence fits on replicate datasets.

Each replicate draws ``n_true`` Strauss centers plus ``N - n_true``
uniform auxiliary centers, simulates captures, and fits both models.  The
posterior median of n is the point estimate and the 5%/95% posterior
quantiles form the 90% interval.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from scrstrauss.geometry import Domain, TrapArray, uniform_sample
from scrstrauss.likelihood import CaptureHistory, DetectionParams, simulate_captures
from scrstrauss.sampler import ChainConfig, Priors, run_chain
from scrstrauss.strauss import StraussParams, sample_fixed_n

log = logging.getLogger(__name__)

MODELS = ("strauss", "independence")


@dataclass(frozen=True)
class SimDesign:
    a_true: float = 2.0
    n_true: int = 150
    N: int = 200
    lam: float = 0.3
    rho: float = 5.0
    b_true: float = 5.0
    K: int = 17
    replicates: int = 20
    seed: int = 2013
    strauss_burn_in: int = 200

    def __post_init__(self):
        if not (0 < self.n_true <= self.N):
            raise ValueError("need 0 < n_true <= N")
        if min(self.lam, self.rho, self.K, self.replicates) <= 0 or self.a_true < 0 or self.b_true < 0:
            raise ValueError("design parameters must be positive")


@dataclass
class SimMetrics:
    S: int
    bias: float
    bias_se: float
    mse: float
    mse_se: float
    cover90: float
    cover90_se: float
    width90: float
    width90_se: float
    wilcoxon_p: float = float("nan")


def _design_rng(design: SimDesign, replicate: int, stream: int = 0) -> np.random.Generator:
    key = (int(round(design.a_true * 1000)), int(replicate), int(stream))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(design.seed, spawn_key=key)))


def _centers(design: SimDesign, domain: Domain, rng) -> np.ndarray:
    pop = sample_fixed_n(design.n_true, StraussParams(design.a_true, design.b_true), domain,
                         burn_in=design.strauss_burn_in, rng=rng)
    aux = uniform_sample(domain, rng, design.N - design.n_true)
    return np.vstack([pop, aux])


def generate_dataset(design: SimDesign, replicate: int, traps: TrapArray, domain: Domain):
    """One replicate dataset and its truth record; deterministic in (design, replicate)."""
    rng = _design_rng(design, replicate)
    s = _centers(design, domain, rng)
    delta = np.zeros(design.N, dtype=np.int64)
    delta[: design.n_true] = 1
    data = simulate_captures(s, delta, DetectionParams(design.lam, design.rho), traps, design.K, rng)
    truth = {"n_true": design.n_true, "locations": s, "delta": delta, "a": design.a_true,
             "b": design.b_true, "lam": design.lam, "rho": design.rho}
    return data, truth


def split_occasions(K: int, T: int) -> np.ndarray:
    """Occasion -> period map with periods as equal as possible, larger ones first."""
    sizes = [K // T + (1 if t < K % T else 0) for t in range(T)]
    return np.repeat(np.arange(T), sizes)


def generate_period_dataset(design: SimDesign, replicate: int, traps: TrapArray, domain: Domain,
                            T: int = 4, pi2: float = 0.9):
    """Multi-period replicate: each member is present in period t with probability ``pi2``."""
    rng = _design_rng(design, replicate, stream=7)
    s = _centers(design, domain, rng)
    delta = np.zeros(design.N, dtype=np.int64)
    delta[: design.n_true] = 1
    periods = split_occasions(design.K, T)
    delta_t = (rng.random((design.N, T)) < pi2).astype(np.int64) * delta[:, None]
    data = simulate_captures(s, delta, DetectionParams(design.lam, design.rho), traps, design.K, rng,
                             periods=periods, period_deltas=delta_t)
    truth = {"n_true": design.n_true, "locations": s, "delta": delta, "delta_t": delta_t, "pi2": pi2}
    return data, truth


def compute_metrics(estimates, n_true: float) -> SimMetrics:
    """Bias, MSE, 90% coverage and width with Monte Carlo standard errors.

    ``estimates`` is an ``(S, 3)`` array of (point, lower90, upper90).
    """
    est = np.asarray(estimates, dtype=float).reshape(-1, 3)
    S = est.shape[0]
    if S < 1:
        raise ValueError("need at least one replicate")
    err = est[:, 0] - n_true
    cover = ((est[:, 1] <= n_true) & (n_true <= est[:, 2])).astype(float)
    width = est[:, 2] - est[:, 1]

    def se(v):
        return float(np.std(v, ddof=1) / math.sqrt(S)) if S > 1 else float("nan")

    return SimMetrics(S, float(err.mean()), se(err), float(np.mean(err**2)), se(err**2),
                      float(cover.mean()), se(cover), float(width.mean()), se(width))


def _signed_rank_null_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """Counts of each doubled W+ value over all 2^n sign patterns."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(x, y, exact_max: int = 25) -> float:
    """Two-sided p-value of the paired signed-rank test of ``x - y``.

    Zero differences are dropped and tied magnitudes get mid-ranks.  Exact
    permutation distribution when at most ``exact_max`` non-zero pairs remain,
    otherwise the normal approximation with tie and continuity corrections.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y must be paired")
    d = x - y
    d = d[d != 0]
    n = d.shape[0]
    if n == 0:
        return 1.0
    from scipy.stats import rankdata

    ranks = rankdata(np.abs(d))  # mid-ranks
    w_plus = float(ranks[d > 0].sum())
    if n <= exact_max:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _signed_rank_null_counts(doubled)
        total = 2**n
        w2 = int(round(2 * w_plus))
        lower = sum(counts[: w2 + 1]) / total
        upper = sum(counts[w2:]) / total
        return float(min(1.0, 2 * min(lower, upper)))
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    if var <= 0:
        return 1.0
    z = (abs(w_plus - mean) - 0.5) / math.sqrt(var)
    from scipy.stats import norm

    return float(min(1.0, 2 * norm.sf(max(z, 0.0))))


def summarize_n(draws) -> tuple[float, float, float]:
    draws = np.asarray(draws, dtype=float)
    lo, med, hi = np.quantile(draws, [0.05, 0.5, 0.95])
    return float(med), float(lo), float(hi)


def fit_replicate(data: CaptureHistory, traps: TrapArray, domain: Domain, priors: Priors, table,
                  chain: dict, model: str, seed: int) -> dict:
    cfg = ChainConfig(model=model, seed=int(seed), **chain)
    out = run_chain(data, traps, domain, priors, table if model == "strauss" else None, cfg)
    med, lo, hi = summarize_n(out.records["n"])
    return {"median": med, "lower90": lo, "upper90": hi, "post_mean_n": float(out.records["n"].mean()),
            "post_mean_a": float(out.records["a"].mean()) if model == "strauss" else float("nan"),
            "accept_s": out.acceptance["s"]}


def _chain_seed(design: SimDesign, replicate: int, model: str) -> int:
    ss = np.random.SeedSequence(design.seed, spawn_key=(int(round(design.a_true * 1000)), replicate,
                                                        100 + MODELS.index(model)))
    return int(ss.generate_state(1)[0])


def _run_replicate(args):
    design, rep, traps, domain, priors, table, chain, models = args
    rows = []
    try:
        data, truth = generate_dataset(design, rep, traps, domain)
        for model in models:
            res = fit_replicate(data, traps, domain, priors, table, chain, model, _chain_seed(design, rep, model))
            rows.append({"replicate": rep, "model": model, "a_true": design.a_true,
                         "n_observed": data.n_observed, **res,
                         "sq_error": (res["median"] - truth["n_true"]) ** 2})
        return rows, None
    except Exception as e:  # noqa: BLE001 - per-replicate failures are reported, not fatal
        log.warning("replicate %d failed: %s", rep, e)
        return [], f"replicate {rep}: {type(e).__name__}: {e}"


def run_study(design: SimDesign, traps: TrapArray, domain: Domain, priors: Priors, table,
              chain: dict, workers: int = 1, models=MODELS, progress=None) -> dict:
    """Fit every replicate with each model and aggregate the metrics.

    Returns ``{"rows": per-replicate dicts, "metrics": {model: SimMetrics},
    "failures": [...]}``.  Output is independent of ``workers``.
    """
    tasks = [(design, r, traps, domain, priors, table, chain, tuple(models)) for r in range(design.replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replicate, tasks, chunksize=1))
    else:
        results = []
        for k, t in enumerate(tasks, start=1):
            results.append(_run_replicate(t))
            if progress is not None:
                progress(k, len(tasks))
    rows = [r for res, _ in results for r in res]
    failures = [f for _, f in results if f]
    ok_reps = sorted({r["replicate"] for r in rows if all(
        any(q["replicate"] == r["replicate"] and q["model"] == m for q in rows) for m in models)})
    metrics = {}
    sq = {}
    for m in models:
        sel = sorted((r for r in rows if r["model"] == m and r["replicate"] in ok_reps), key=lambda r: r["replicate"])
        if not sel:
            continue
        metrics[m] = compute_metrics([[r["median"], r["lower90"], r["upper90"]] for r in sel], design.n_true)
        sq[m] = np.array([r["sq_error"] for r in sel])
    if len(sq) == 2 and len(ok_reps) >= 1:
        p = wilcoxon_signed_rank(sq[models[0]], sq[models[1]])
        for m in metrics:
            metrics[m].wilcoxon_p = p
    return {"design": design, "rows": rows, "metrics": metrics, "failures": failures}


ROW_FIELDS = ("replicate", "model", "a_true", "n_observed", "median", "lower90", "upper90",
              "post_mean_n", "post_mean_a", "sq_error", "accept_s")


def write_rows(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=ROW_FIELDS, extrasaction="ignore")
        w.writeheader()
        for r in sorted(rows, key=lambda r: (r["a_true"], r["replicate"], MODELS.index(r["model"]))):
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        out = []
        for r in csv.DictReader(fh):
            r = dict(r)
            for k in ROW_FIELDS:
                if k not in ("model",) and k in r:
                    r[k] = float(r[k])
            r["replicate"] = int(r["replicate"])
            out.append(r)
        return out


def metrics_from_rows(rows, n_true: float) -> dict:
    """Re-aggregate per-replicate rows into ``{(model, a_true): SimMetrics}``."""
    out = {}
    for a in sorted({r["a_true"] for r in rows}):
        sq = {}
        for m in MODELS:
            sel = sorted((r for r in rows if r["model"] == m and r["a_true"] == a), key=lambda r: r["replicate"])
            if sel:
                out[(m, a)] = compute_metrics([[r["median"], r["lower90"], r["upper90"]] for r in sel], n_true)
                sq[m] = np.array([r["sq_error"] for r in sel])
        if len(sq) == 2 and len(sq[MODELS[0]]) == len(sq[MODELS[1]]):
            p = wilcoxon_signed_rank(sq[MODELS[0]], sq[MODELS[1]])
            for m in MODELS:
                out[(m, a)].wilcoxon_p = p
    return out


def format_report(metrics: dict) -> str:
    """Markdown table with Monte Carlo standard errors in parentheses."""
    lines = ["| Model | a | MSE | BIAS | Width90 | Cover90 | Wilcoxon p |",
             "|---|---|---|---|---|---|---|"]
    for (m, a), s in sorted(metrics.items(), key=lambda kv: (kv[0][1], MODELS.index(kv[0][0]))):
        lines.append(f"| {m.capitalize()} | {a:g} | {s.mse:.2f} ({s.mse_se:.2f}) | {s.bias:.2f} ({s.bias_se:.2f}) "
                     f"| {s.width90:.2f} ({s.width90_se:.2f}) | {s.cover90:.2f} ({s.cover90_se:.2f}) "
                     f"| {s.wilcoxon_p:.4g} |")
    return "\n".join(lines) + "\n"


def write_metrics_csv(metrics: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        fields = list(asdict(next(iter(metrics.values()))).keys()) if metrics else []
        w.writerow(["model", "a_true"] + fields)
        for (m, a), s in sorted(metrics.items(), key=lambda kv: (kv[0][1], MODELS.index(kv[0][0]))):
            w.writerow([m, repr(float(a))] + [repr(float(v)) for v in asdict(s).values()])
