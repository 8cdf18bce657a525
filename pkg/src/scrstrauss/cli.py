"""Command-line entry point: ``scrstrauss <command> ...``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from scrstrauss import diagnostics
from scrstrauss.config import ChainSection, ConfigError, RunConfig, TableSection
from scrstrauss.geometry import TrapArray
from scrstrauss.io import read_periods, write_manifest, write_pattern, write_periods
from scrstrauss.likelihood import CaptureHistory
from scrstrauss.normconst import FitError, NormConstTable, OutOfGridError, build_table
from scrstrauss.sampler import ChainOutput, run_chain

log = logging.getLogger("scrstrauss")

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 2, 3, 4
OUT_ENV = "SCRSTRAUSS_OUT"


def _load_config(path) -> RunConfig:
    return RunConfig.load(path) if path else RunConfig()


def _out_dir(arg) -> Path:
    d = Path(arg) if arg else Path(os.environ.get(OUT_ENV, "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_table(path) -> NormConstTable:
    if not path or not Path(path).exists():
        raise ConfigError(f"normalizing-constant table {path!r} not found; create one with "
                          "`scrstrauss table build --out <file>`")
    return NormConstTable.load(path)


# -- table ---------------------------------------------------------------------
def cmd_table_build(args) -> int:
    cfg = _load_config(args.config)
    if args.desk:
        desk = TableSection.desk()
        cfg.table.burn_in, cfg.table.warmup = desk.burn_in, desk.warmup
    if args.workers:
        cfg.table.workers = args.workers
    traps = cfg.build_traps()
    dom = cfg.build_domain(traps)
    t = cfg.table
    table = build_table(t.grid(), dom, n_samples=t.n_samples, burn_in=t.burn_in, seed=t.seed,
                        degree=t.degree, warmup=t.warmup, workers=t.workers,
                        progress=lambda k, m, cell: log.info("table cell %d/%d b=%g n=%d", k, m, *cell))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.save(out)
    if args.csv:
        table.to_csv(args.csv)
    write_manifest(out.parent, "table build", cfg.digest(), {"table": t.seed},
                   inputs=[args.config] if args.config else [],
                   extra={"output": out.name})
    print(f"wrote {out}")
    return 0


def cmd_table_inspect(args) -> int:
    table = _load_table(args.table)
    g = table.grid
    print(f"domain area : {table.domain_area}")
    print(f"degree      : {table.degree}")
    print(f"a grid      : {g.a_grid[0]} .. {g.a_grid[-1]} ({len(g.a_grid)} values)")
    print(f"b grid      : {', '.join(f'{b:g}' for b in g.b_grid)}")
    print(f"n grid      : {g.n_grid[0]} .. {g.n_grid[-1]} ({len(g.n_grid)} values)")
    print("provenance  : " + json.dumps(table.provenance, sort_keys=True))
    if args.csv:
        table.to_csv(args.csv)
    return 0


# -- simulate ----------------------------------------------------------------
def cmd_simulate(args) -> int:
    from scrstrauss.simstudy import SimDesign, generate_dataset, generate_period_dataset

    cfg = _load_config(args.config)
    traps = cfg.build_traps()
    dom = cfg.build_domain(traps)
    out = _out_dir(args.out)
    design = SimDesign(**asdict(cfg.design))
    traps.to_csv(out / "traps.csv")
    if args.covariates:
        from scrstrauss.strauss import StraussParams
        from scrstrauss.thinning import CovariateField, simulate_thinned_process

        field = CovariateField.from_csv(args.covariates, intercept=not args.no_intercept)
        beta = np.array(args.beta, dtype=float)
        if beta.shape[0] != field.p:
            raise ConfigError(f"--beta needs {field.p} values (intercept + {len(args.covariates)} covariates)")
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(design.seed, spawn_key=(args.replicate,))))
        kept, removed, _ = simulate_thinned_process(design.n_true, StraussParams(design.a_true, design.b_true),
                                                    field, beta, dom, rng, burn_in=design.strauss_burn_in)
        write_pattern(kept, out / "retained.csv")
        write_pattern(removed, out / "removed.csv")
        print(f"retained {kept.shape[0]} of {design.n_true} potential centers")
    elif args.periods:
        data, truth = generate_period_dataset(design, args.replicate, traps, dom, T=args.periods, pi2=args.pi2)
        data.to_csv(out / "captures.csv")
        write_periods(data.periods, out / "periods.csv")
        write_pattern(truth["locations"][truth["delta"] == 1], out / "centers.csv")
        print(f"{data.n_observed} individuals observed")
    else:
        data, truth = generate_dataset(design, args.replicate, traps, dom)
        data.to_csv(out / "captures.csv")
        write_pattern(truth["locations"][truth["delta"] == 1], out / "centers.csv")
        print(f"{data.n_observed} individuals observed")
    write_manifest(out, "simulate", cfg.digest(), {"design": design.seed, "replicate": args.replicate},
                   inputs=[args.config] + list(args.covariates or []))
    return 0


# -- fit -------------------------------------------------------------------------
def cmd_fit(args) -> int:
    cfg = _load_config(args.config)
    traps = TrapArray.from_csv(args.traps) if args.traps else cfg.build_traps()
    dom = cfg.build_domain(traps)
    periods = read_periods(args.periods) if args.periods else None
    data = CaptureHistory.from_csv(args.data, traps.J, periods=periods)
    priors = cfg.priors.build()
    table = _load_table(args.table) if args.model == "strauss" else None
    chain_sec = cfg.chain
    if args.full_scale:
        full = ChainSection.full()
        chain_sec.iterations, chain_sec.burn_in = full.iterations, full.burn_in
    if args.iterations:
        chain_sec.iterations = args.iterations
    if args.burn_in is not None:
        chain_sec.burn_in = args.burn_in
    chain_cfg = chain_sec.build(model=args.model, seed=args.seed)
    out = _out_dir(args.out)
    res = run_chain(data, traps, dom, priors, table, chain_cfg,
                    progress=lambda it, tot: log.info("iteration %d/%d", it, tot))
    res.to_csv(out / "chain.csv")
    rows = diagnostics.summarize(res.records)
    _write_summary(rows, out, args.model)
    with open(out / "acceptance.json", "w") as fh:
        json.dump({"acceptance": res.acceptance, "steps": res.steps}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    write_manifest(out, "fit", cfg.digest(), {"chain": chain_cfg.seed},
                   inputs=[args.config, args.data, args.traps, args.table, args.periods],
                   extra={"model": args.model})
    print(diagnostics.format_summary(rows, args.model.capitalize()), end="")
    return 0


def _write_summary(rows, out: Path, model: str) -> None:
    import csv

    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "mean", "sd", "median", "q05", "q95"])
        for r in rows:
            w.writerow([r["parameter"]] + [repr(r[k]) for k in ("mean", "sd", "median", "q05", "q95")])
    (out / "summary.md").write_text(diagnostics.format_summary(rows, model.capitalize()))


# -- simstudy ------------------------------------------------------------------
def cmd_simstudy_run(args) -> int:
    from scrstrauss import simstudy

    cfg = _load_config(args.design)
    traps = cfg.build_traps()
    dom = cfg.build_domain(traps)
    priors = cfg.priors.build()
    table = _load_table(args.table)
    chain_sec = cfg.chain
    if args.full_scale:
        full = ChainSection.full()
        chain_sec.iterations, chain_sec.burn_in = full.iterations, full.burn_in
    chain = {k: v for k, v in asdict(chain_sec).items() if k != "seed"}
    a_values = args.a if args.a else [cfg.design.a_true]
    design_kw = asdict(cfg.design)
    if args.replicates:
        design_kw["replicates"] = args.replicates
    elif args.full_scale:
        design_kw["replicates"] = 100
    out = _out_dir(args.out)
    rows, failures = [], []
    for a in a_values:
        design = simstudy.SimDesign(**{**design_kw, "a_true": float(a)})
        res = simstudy.run_study(design, traps, dom, priors, table, chain, workers=args.workers,
                                 progress=lambda k, m: log.info("a=%g replicate %d/%d", a, k, m))
        rows += res["rows"]
        failures += res["failures"]
    simstudy.write_rows(rows, out / "replicates.csv")
    metrics = simstudy.metrics_from_rows(rows, cfg.design.n_true)
    simstudy.write_metrics_csv(metrics, out / "metrics.csv")
    report = simstudy.format_report(metrics)
    if failures:
        report += f"\n{len(failures)} replicate(s) failed and were excluded:\n" + "\n".join(failures) + "\n"
    (out / "report.md").write_text(report)
    write_manifest(out, "simstudy run", cfg.digest(), {"design": cfg.design.seed},
                   inputs=[args.design, args.table], extra={"a_values": [float(a) for a in a_values]})
    print(report, end="")
    return 0


# -- report ----------------------------------------------------------------------
def cmd_report(args) -> int:
    from scrstrauss import simstudy

    path = Path(args.path)
    if path.is_dir() and (path / "replicates.csv").exists():
        rows = simstudy.read_rows(path / "replicates.csv")
        print(simstudy.format_report(simstudy.metrics_from_rows(rows, args.n_true)), end="")
        return 0
    chain = path / "chain.csv" if path.is_dir() else path
    if not chain.exists():
        raise FileNotFoundError(f"no chain.csv or replicates.csv under {path}")
    rows = diagnostics.summarize(ChainOutput.read_csv(chain))
    print(diagnostics.format_summary(rows), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scrstrauss", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    tab = sub.add_parser("table", help="normalizing-constant tables")
    tsub = tab.add_subparsers(dest="table_command", required=True)
    tb = tsub.add_parser("build")
    tb.add_argument("--config")
    tb.add_argument("--out", required=True)
    tb.add_argument("--desk", action="store_true", help="one sweep between retained draws")
    tb.add_argument("--workers", type=int)
    tb.add_argument("--csv", help="also export coefficients as CSV")
    tb.set_defaults(func=cmd_table_build)
    ti = tsub.add_parser("inspect")
    ti.add_argument("table")
    ti.add_argument("--csv")
    ti.set_defaults(func=cmd_table_inspect)

    sim = sub.add_parser("simulate", help="simulate one dataset from the design section")
    sim.add_argument("--config")
    sim.add_argument("--out")
    sim.add_argument("--replicate", type=int, default=0)
    sim.add_argument("--periods", type=int, help="number of primary periods")
    sim.add_argument("--pi2", type=float, default=0.9)
    sim.add_argument("--covariates", nargs="+", help="raster CSVs (x,y,value)")
    sim.add_argument("--beta", nargs="+", type=float)
    sim.add_argument("--no-intercept", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="posterior sampling for one dataset")
    fit.add_argument("--config")
    fit.add_argument("--data", required=True)
    fit.add_argument("--traps")
    fit.add_argument("--table")
    fit.add_argument("--out")
    fit.add_argument("--model", choices=("strauss", "independence"), default="strauss")
    fit.add_argument("--periods", help="occasion,period map CSV")
    fit.add_argument("--iterations", type=int)
    fit.add_argument("--burn-in", type=int)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--full-scale", action="store_true", help="50,000 iterations, 10,000 burn-in")
    fit.set_defaults(func=cmd_fit)

    ss = sub.add_parser("simstudy", help="simulation study")
    ssub = ss.add_subparsers(dest="simstudy_command", required=True)
    sr = ssub.add_parser("run")
    sr.add_argument("--design")
    sr.add_argument("--table", required=True)
    sr.add_argument("--out")
    sr.add_argument("--a", nargs="+", type=float, help="true interaction strengths (default: design a_true)")
    sr.add_argument("--replicates", type=int)
    sr.add_argument("--workers", type=int, default=1)
    sr.add_argument("--full-scale", action="store_true")
    sr.set_defaults(func=cmd_simstudy_run)

    rep = sub.add_parser("report", help="summarize a fit or simulation-study directory")
    rep.add_argument("path")
    rep.add_argument("--n-true", type=float, default=150)
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OutOfGridError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (FitError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
