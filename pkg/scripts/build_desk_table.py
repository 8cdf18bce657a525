"""Build the desk-scale normalizing-constant table used by the simulation study.

Equivalent to ``scrstrauss table build --desk --out data/desk_table.json``.
"""
import argparse
import logging

from scrstrauss.config import RunConfig, TableSection
from scrstrauss.normconst import build_table

p = argparse.ArgumentParser()
p.add_argument("--out", default="data/desk_table.json")
p.add_argument("--workers", type=int, default=1)
args = p.parse_args()
logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

cfg = RunConfig(table=TableSection.desk(workers=args.workers))
traps = cfg.build_traps()
dom = cfg.build_domain(traps)
t = cfg.table
table = build_table(t.grid(), dom, n_samples=t.n_samples, burn_in=t.burn_in, seed=t.seed,
                    degree=t.degree, warmup=t.warmup, workers=t.workers)
table.save(args.out)
