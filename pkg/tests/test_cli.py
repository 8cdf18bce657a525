import json

import pytest

from scrstrauss.cli import main

CONFIG = {
    "schema_version": 1,
    "traps": {"rows": 3, "cols": 3, "spacing": 5.0, "center": [10.0, 10.0]},
    "domain": {"bounds": [0, 20, 0, 20]},
    "priors": {"N": 12, "b_support": [3, 5]},
    "table": {"a_step": 0.5, "a_max": 3.0, "b_grid": [3, 5], "n_min": 2, "n_max": 12,
              "n_samples": 60, "burn_in": 2, "degree": 4, "seed": 5},
    "chain": {"iterations": 300, "burn_in": 100, "seed": 8},
    "design": {"a_true": 1.0, "n_true": 8, "N": 12, "lam": 0.5, "rho": 3.0, "b_true": 5.0, "K": 5,
               "replicates": 2, "seed": 11},
}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "config.json").write_text(json.dumps(CONFIG))
    assert main(["table", "build", "--config", str(d / "config.json"), "--out", str(d / "t1" / "table.json")]) == 0
    return d


def run_twice(workdir, make_args, files):
    outs = []
    for tag in ("r1", "r2"):
        assert main(make_args(workdir / tag)) == 0
        outs.append({f: (workdir / tag / f).read_bytes() for f in files})
    return outs


def test_table_build_deterministic(workdir):
    assert main(["table", "build", "--config", str(workdir / "config.json"),
                 "--out", str(workdir / "t2" / "table.json"), "--csv", str(workdir / "t2" / "coef.csv")]) == 0
    assert (workdir / "t1" / "table.json").read_bytes() == (workdir / "t2" / "table.json").read_bytes()
    assert (workdir / "t1" / "manifest.json").exists()


def test_table_inspect(workdir, capsys):
    assert main(["table", "inspect", str(workdir / "t1" / "table.json")]) == 0
    out = capsys.readouterr().out
    assert "b grid      : 3, 5" in out and "provenance" in out


def test_simulate_fit_report(workdir, capsys):
    cfg = str(workdir / "config.json")
    a, b = run_twice(workdir, lambda d: ["simulate", "--config", cfg, "--out", str(d / "sim")],
                     ["sim/captures.csv", "sim/centers.csv", "sim/traps.csv"])
    assert a == b
    sim = workdir / "r1" / "sim"
    fit_args = lambda d: ["fit", "--config", cfg, "--data", str(sim / "captures.csv"), "--traps", str(sim / "traps.csv"),
                          "--table", str(workdir / "t1" / "table.json"), "--out", str(d / "fit")]
    a, b = run_twice(workdir, fit_args, ["fit/chain.csv", "fit/summary.csv", "fit/summary.md"])
    assert a == b
    assert "Interaction strength, a" in a["fit/summary.md"].decode()
    capsys.readouterr()
    assert main(["report", str(workdir / "r1" / "fit")]) == 0
    assert "Population size, n" in capsys.readouterr().out


def test_fit_independence_omits_strauss_rows(workdir):
    cfg = str(workdir / "config.json")
    sim = workdir / "r1" / "sim"
    assert main(["fit", "--config", cfg, "--data", str(sim / "captures.csv"), "--model", "independence",
                 "--out", str(workdir / "ind")]) == 0
    params = [l.split(",")[0] for l in (workdir / "ind" / "summary.csv").read_text().splitlines()[1:]]
    assert "a" not in params and "b" not in params and "n" in params


def test_periods_path(workdir):
    cfg = str(workdir / "config.json")
    assert main(["simulate", "--config", cfg, "--out", str(workdir / "ps"), "--periods", "2"]) == 0
    assert main(["fit", "--config", cfg, "--data", str(workdir / "ps" / "captures.csv"),
                 "--periods", str(workdir / "ps" / "periods.csv"), "--table", str(workdir / "t1" / "table.json"),
                 "--out", str(workdir / "pf")]) == 0
    params = [l.split(",")[0] for l in (workdir / "pf" / "summary.csv").read_text().splitlines()[1:]]
    assert "pi1" in params and "pi2" in params


def test_covariates_path(workdir):
    cfg = str(workdir / "config.json")
    raster = workdir / "cov.csv"
    raster.write_text("x,y,value\n" + "".join(f"{x},{y},{x / 20}\n" for x in range(21) for y in range(21)))
    a, b = run_twice(workdir, lambda d: ["simulate", "--config", cfg, "--out", str(d / "cov"),
                                         "--covariates", str(raster), "--beta", "0", "2"],
                     ["cov/retained.csv", "cov/removed.csv"])
    assert a == b
    assert main(["simulate", "--config", cfg, "--out", str(workdir / "x"), "--covariates", str(raster),
                 "--beta", "1"]) == 2


def test_simstudy_deterministic(workdir, capsys):
    cfg = str(workdir / "config.json")
    table = str(workdir / "t1" / "table.json")
    a, b = run_twice(workdir, lambda d: ["simstudy", "run", "--design", cfg, "--table", table, "--out", str(d / "ss")],
                     ["ss/replicates.csv", "ss/metrics.csv", "ss/report.md"])
    assert a == b
    assert b"(" in a["ss/report.md"]
    capsys.readouterr()
    assert main(["report", str(workdir / "r1" / "ss"), "--n-true", "8"]) == 0
    assert "MSE" in capsys.readouterr().out


def test_missing_table_message(workdir, capsys):
    sim = workdir / "r1" / "sim"
    code = main(["fit", "--config", str(workdir / "config.json"), "--data", str(sim / "captures.csv"),
                 "--table", str(workdir / "nope.json"), "--out", str(workdir / "z")])
    assert code == 2
    assert "table build" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"chain": {"iterationz": 3}}))
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "iterationz" in capsys.readouterr().err
    p.write_text("{\n  broken")
    assert main(["simulate", "--config", str(p)]) == 2


def test_io_error_exit_code(workdir, tmp_path):
    code = main(["fit", "--config", str(workdir / "config.json"), "--data", str(tmp_path / "missing.csv"),
                 "--model", "independence", "--out", str(tmp_path)])
    assert code == 4


def test_output_env_override(workdir, monkeypatch, tmp_path):
    monkeypatch.setenv("SCRSTRAUSS_OUT", str(tmp_path / "envout"))
    assert main(["simulate", "--config", str(workdir / "config.json")]) == 0
    assert (tmp_path / "envout" / "captures.csv").exists()
