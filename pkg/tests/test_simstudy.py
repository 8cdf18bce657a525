import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from scrstrauss.geometry import Domain, make_trap_grid
from scrstrauss.simstudy import (SimDesign, compute_metrics, format_report, generate_dataset,
                                 generate_period_dataset, metrics_from_rows, read_rows, run_study,
                                 split_occasions, wilcoxon_signed_rank, write_rows)
from scrstrauss.sampler import Priors


def enumerate_signed_rank(x, y):
    """Two-sided p-value by listing every sign pattern."""
    d = np.asarray(x, float) - np.asarray(y, float)
    d = d[d != 0]
    if d.size == 0:
        return 1.0
    r = stats.rankdata(np.abs(d))
    obs = r[d > 0].sum()
    w = np.array([sum(ri for ri, s in zip(r, signs) if s) for signs in itertools.product((0, 1), repeat=d.size)])
    lo = np.mean(w <= obs + 1e-9)
    hi = np.mean(w >= obs - 1e-9)
    return min(1.0, 2 * min(lo, hi))


def test_metrics_example():
    m = compute_metrics([[149, 135, 165], [150, 135, 165], [151, 135, 165]], 150)
    assert m.bias == 0
    assert m.mse == pytest.approx(2 / 3)
    assert m.cover90 == 1 and m.width90 == 30
    assert m.S == 3


def test_metrics_standard_errors():
    est = np.array([[140, 130, 145], [160, 150, 170], [150, 140, 160], [155, 151, 159]], float)
    m = compute_metrics(est, 150)
    err = est[:, 0] - 150
    assert m.bias_se == pytest.approx(err.std(ddof=1) / 2)
    assert m.cover90 == 0.5
    assert m.cover90_se == pytest.approx(np.std([0, 1, 1, 0], ddof=1) / 2)


def test_wilcoxon_equal_inputs():
    x = np.arange(10.0)
    assert wilcoxon_signed_rank(x, x) == 1.0


def test_wilcoxon_all_larger():
    x = np.arange(1, 11) + 100.0
    y = np.arange(1, 11, dtype=float)
    assert wilcoxon_signed_rank(x, y) == pytest.approx(2 / 2**10)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=12))
def test_wilcoxon_matches_enumeration(pairs):
    x, y = map(np.array, zip(*pairs))
    assert wilcoxon_signed_rank(x, y) == pytest.approx(enumerate_signed_rank(x, y), abs=1e-10)


def test_wilcoxon_normal_branch_close_to_scipy():
    rng = np.random.default_rng(1)
    x = rng.normal(0.3, 1, 60)
    y = rng.normal(0, 1, 60)
    ours = wilcoxon_signed_rank(x, y, exact_max=0)
    ref = stats.wilcoxon(x, y, correction=True, method="approx").pvalue
    assert ours == pytest.approx(ref, rel=1e-6)


def test_split_occasions():
    assert split_occasions(17, 4).tolist() == [0] * 5 + [1] * 4 + [2] * 4 + [3] * 4
    assert np.bincount(split_occasions(9, 3)).tolist() == [3, 3, 3]


@pytest.fixture(scope="module")
def tiny_world():
    traps = make_trap_grid(3, 3, 5.0, center=(10.0, 10.0))
    return traps, Domain(0, 20, 0, 20)


def test_dataset_deterministic(tiny_world):
    traps, dom = tiny_world
    design = SimDesign(n_true=8, N=12, K=5, lam=0.5, rho=3.0)
    d1, t1 = generate_dataset(design, 3, traps, dom)
    d2, t2 = generate_dataset(design, 3, traps, dom)
    assert np.array_equal(d1.Y, d2.Y) and np.array_equal(t1["locations"], t2["locations"])
    d3, t3 = generate_dataset(design, 4, traps, dom)
    assert not np.array_equal(t1["locations"], t3["locations"])
    assert 0 <= d3.n_observed <= 8


def test_design_population_size():
    traps = make_trap_grid(12, 16, 7.0)
    dom = Domain.around(traps.locations, 15)
    data, truth = generate_dataset(SimDesign(), 0, traps, dom)
    assert truth["delta"].sum() == 150 and truth["locations"].shape == (200, 2)
    assert 0 < data.n_observed <= 150
    assert data.K == 17


def test_period_dataset(tiny_world):
    traps, dom = tiny_world
    design = SimDesign(n_true=8, N=12, K=9, lam=0.5, rho=3.0)
    data, truth = generate_period_dataset(design, 0, traps, dom, T=3)
    assert data.T == 3
    src = data.source_index
    for i, row in enumerate(data.Y):
        for k, y in enumerate(row):
            if y <= traps.J:
                assert truth["delta_t"][src[i], data.periods[k]] == 1


def test_smoke_study(tiny_world, small_table, tmp_path):
    traps, dom = tiny_world
    design = SimDesign(a_true=1.0, b_true=5.0, n_true=8, N=12, K=5, lam=0.5, rho=3.0, replicates=2)
    pri = Priors(N=12, b_support=(3.0, 5.0))
    chain = {"iterations": 300, "burn_in": 100}
    res = run_study(design, traps, dom, pri, small_table, chain)
    assert not res["failures"]
    assert len(res["rows"]) == 4
    assert set(res["metrics"]) == {"strauss", "independence"}
    write_rows(res["rows"], tmp_path / "r.csv")
    back = metrics_from_rows(read_rows(tmp_path / "r.csv"), 8)
    assert back[("strauss", 1.0)].mse == pytest.approx(res["metrics"]["strauss"].mse)
    text = format_report(back)
    assert "(" in text and "Strauss" in text
    again = run_study(design, traps, dom, pri, small_table, chain)
    assert repr(again["rows"]) == repr(res["rows"])


def test_failed_replicate_reported(tiny_world, small_table):
    traps, dom = tiny_world
    design = SimDesign(n_true=8, N=12, K=5, replicates=1)
    # b_support outside the table grid makes every fit fail
    res = run_study(design, traps, dom, Priors(N=12, b_support=(4.0,)), small_table, {"iterations": 10, "burn_in": 0})
    assert res["failures"] and not res["rows"]
