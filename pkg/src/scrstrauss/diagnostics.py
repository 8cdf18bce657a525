"""Posterior summaries and a Geweke convergence check."""
from __future__ import annotations

import numpy as np

LABELS = {
    "n": "Population size, n",
    "rho": "Scale parameter, rho",
    "lam": "Baseline detection, lambda",
    "b": "Interaction range, b",
    "a": "Interaction strength, a",
    "pi": "Inclusion probability, pi",
    "pi1": "Inclusion probability, pi1",
    "pi2": "Inclusion probability, pi2",
}


def summarize(records: dict) -> list[dict]:
    """Mean, sd, median and central 90% interval per recorded parameter.

    The interaction rows are omitted for independence fits (b all NaN), and
    pi is reported as pi1 when a second-level inclusion probability exists.
    """
    rows = []
    independence = "b" in records and np.all(np.isnan(np.asarray(records["b"], dtype=float)))
    for name in ("n", "rho", "lam", "b", "a", "pi", "pi2"):
        if name not in records or (independence and name == "a"):
            continue
        x = np.asarray(records[name], dtype=float)
        if x.size == 0 or np.all(np.isnan(x)):
            continue
        q05, med, q95 = np.quantile(x, [0.05, 0.5, 0.95])
        key = "pi1" if name == "pi" and "pi2" in records else name
        rows.append({"parameter": key, "label": LABELS[key], "mean": float(x.mean()),
                     "sd": float(x.std(ddof=1)) if x.size > 1 else 0.0,
                     "median": float(med), "q05": float(q05), "q95": float(q95)})
    return rows


def format_summary(rows, model_name: str = "") -> str:
    head = f"| Parameter | {model_name or 'Posterior'} mean (sd) | median | 90% interval |"
    lines = [head, "|---|---|---|---|"]
    for r in rows:
        lines.append(f"| {r['label']} | {r['mean']:.3f} ({r['sd']:.3f}) | {r['median']:.3f} "
                     f"| ({r['q05']:.3f}, {r['q95']:.3f}) |")
    return "\n".join(lines) + "\n"


def batch_means_var(x, n_batches: int = 20) -> float:
    """Variance of the mean of ``x`` estimated from non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0] // n_batches
    if m < 1:
        return float(np.var(x, ddof=1) / x.shape[0])
    means = x[: m * n_batches].reshape(n_batches, m).mean(axis=1)
    return float(np.var(means, ddof=1) / n_batches)


def geweke_z(x, first: float = 0.1, last: float = 0.5) -> float:
    """Geweke z-score comparing the early and late segments of a chain."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    a = x[: int(first * n)]
    b = x[n - int(last * n):]
    return float((a.mean() - b.mean()) / np.sqrt(batch_means_var(a) + batch_means_var(b)))


def effective_sample_size(x) -> float:
    x = np.asarray(x, dtype=float)
    v = batch_means_var(x)
    if v == 0:
        return float(x.shape[0])
    return float(np.var(x, ddof=1) / v)
