import numpy as np
import pytest
from hypothesis import given, strategies as st

from scrstrauss.geometry import TrapArray, make_trap_grid
from scrstrauss.likelihood import (
    CaptureHistory,
    DetectionParams,
    capture_probs,
    detection_kernel,
    log_likelihood_individual,
    simulate_captures,
)

xy = st.tuples(st.floats(-30, 30), st.floats(-30, 30))
pos = st.floats(0.05, 20)


def test_kernel_examples():
    assert detection_kernel(0.0, 3.0) == 1.0
    assert detection_kernel(3.0, 3.0) == pytest.approx(np.exp(-0.5), rel=1e-15)
    assert detection_kernel(6.0, 3.0) == pytest.approx(np.exp(-2.0), rel=1e-15)


def test_kernel_decreasing():
    d = np.linspace(0, 20, 50)
    assert np.all(np.diff(detection_kernel(d, 4.0)) < 0)


def test_excluded_individual_never_captured():
    traps = make_trap_grid(3, 3, 5)
    p = capture_probs((0, 0), 0, DetectionParams(0.3, 5), traps)
    assert p[-1] == 1.0 and np.all(p[:-1] == 0)


def test_single_trap_at_center():
    traps = TrapArray([[2.0, 3.0]])
    p = capture_probs((2.0, 3.0), 1, DetectionParams(0.3, 5), traps)
    assert np.allclose(p, [0.3 / 1.3, 1 / 1.3], rtol=1e-15)


def test_equidistant_traps_equal():
    traps = TrapArray([[-4.0, 0.0], [4.0, 0.0]])
    p = capture_probs((0.0, 1.0), 1, DetectionParams(0.7, 3), traps)
    assert p[0] == p[1]


@given(xy, pos, pos)
def test_probs_sum_to_one(s, lam, rho):
    p = capture_probs(s, 1, DetectionParams(lam, rho), make_trap_grid(4, 5, 3))
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) < 1e-12


@given(xy, st.floats(-50, 50), st.floats(-50, 50))
def test_translation_invariance(s, dx, dy):
    traps = make_trap_grid(3, 4, 5)
    shifted = TrapArray(traps.locations + [dx, dy])
    params = DetectionParams(0.4, 5)
    p1 = capture_probs(s, 1, params, traps)
    p2 = capture_probs((s[0] + dx, s[1] + dy), 1, params, shifted)
    assert np.allclose(p1, p2, rtol=1e-9, atol=1e-300)


def test_lambda_monotone():
    traps = make_trap_grid(3, 3, 5)
    lo = capture_probs((1, 2), 1, DetectionParams(0.2, 5), traps)
    hi = capture_probs((1, 2), 1, DetectionParams(0.5, 5), traps)
    assert np.all(hi[:-1] > lo[:-1]) and hi[-1] < lo[-1]


def test_loglik_examples():
    traps = make_trap_grid(2, 2, 5)
    params = DetectionParams(0.3, 5)
    J = traps.J
    assert log_likelihood_individual([J + 1] * 4, (0, 0), 0, params, traps) == 0.0
    assert log_likelihood_individual([1, J + 1], (0, 0), 0, params, traps) == -np.inf
    one = log_likelihood_individual([2], (1, 1), 1, params, traps)
    assert log_likelihood_individual([2, 2], (1, 1), 1, params, traps) == pytest.approx(2 * one, rel=1e-14)


def test_loglik_direct_product():
    rng = np.random.default_rng(3)
    traps = make_trap_grid(3, 4, 6)
    for _ in range(20):
        params = DetectionParams(rng.uniform(0.05, 2), rng.uniform(1, 10))
        s = rng.uniform(-15, 15, 2)
        y = rng.integers(1, traps.J + 2, size=8)
        # direct evaluation, no shared helper
        h = np.array([params.lam * np.exp(-0.5 * np.sum((s - t) ** 2) / params.rho**2) for t in traps.locations])
        prob = 1.0
        for yk in y:
            prob *= (h[yk - 1] if yk <= traps.J else 1.0) / (1 + h.sum())
        assert log_likelihood_individual(y, s, 1, params, traps) == pytest.approx(np.log(prob), abs=1e-12)


def test_simulation_limits():
    traps = make_trap_grid(3, 3, 5)
    rng = np.random.default_rng(0)
    locs = rng.uniform(-5, 5, (50, 2))
    tiny = simulate_captures(locs, np.ones(50, int), DetectionParams(1e-9, 5), traps, 5, rng)
    assert tiny.n_observed == 0
    none = simulate_captures(locs, np.zeros(50, int), DetectionParams(5.0, 5), traps, 5, rng)
    assert none.n_observed == 0


def test_simulated_frequencies_match_probs():
    traps = make_trap_grid(2, 3, 4)
    params = DetectionParams(0.6, 4)
    s = np.array([[1.0, -1.5]])
    K = 100_000
    ch = simulate_captures(s, [1], params, traps, K, np.random.default_rng(1))
    p = capture_probs(s[0], 1, params, traps)
    freq = np.bincount(ch.Y[0], minlength=traps.J + 2)[1:] / K
    se = np.sqrt(p * (1 - p) / K)
    assert np.all(np.abs(freq - p) < 3 * se + 1e-12)


def test_source_index_points_to_caught_rows():
    traps = make_trap_grid(3, 3, 5)
    rng = np.random.default_rng(4)
    locs = np.vstack([rng.uniform(-5, 5, (10, 2)), [[500, 500]] * 5])
    ch = simulate_captures(locs, np.ones(15, int), DetectionParams(0.5, 3), traps, 10, rng)
    assert np.all(ch.source_index < 10)


def test_capture_csv_round_trip(tmp_path):
    Y = np.array([[1, 5, 3], [5, 5, 2]])
    ch = CaptureHistory(Y, J=4)
    ch.to_csv(tmp_path / "c.csv")
    text = (tmp_path / "c.csv").read_text().splitlines()
    assert text[0] == "individual_id,occasion,trap_id"
    assert "1,2,0" in text  # no capture written as 0
    back = CaptureHistory.from_csv(tmp_path / "c.csv", J=4)
    assert np.array_equal(back.Y, Y)


def test_capture_history_validation():
    with pytest.raises(ValueError):
        CaptureHistory(np.array([[3, 3]]), J=2)  # never captured
    with pytest.raises(ValueError):
        CaptureHistory(np.array([[0, 1]]), J=2)


def test_capture_csv_errors_carry_line_number(tmp_path):
    (tmp_path / "c.csv").write_text("individual_id,occasion,trap_id\n1,1,2\n1,2,x\n")
    with pytest.raises(ValueError, match=":3:"):
        CaptureHistory.from_csv(tmp_path / "c.csv", J=4)
    with pytest.raises(ValueError):
        (tmp_path / "d.csv").write_text("1,1,2\n")
        CaptureHistory.from_csv(tmp_path / "d.csv", J=4)


def test_period_presence_blocks_capture():
    traps = TrapArray([[0.0, 0.0]])
    periods = np.array([0, 0, 1, 1])
    ch = simulate_captures([[0, 0]], [1], DetectionParams(100.0, 5), traps, 4, np.random.default_rng(0),
                           periods=periods, period_deltas=[[1, 0]])
    assert np.array_equal(ch.Y[0, 2:], [2, 2])
    assert np.all(ch.Y[0, :2] == 1)
