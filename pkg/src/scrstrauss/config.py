"""Run configuration: one JSON document with fixed sections.

Every section is a dataclass; unknown keys are rejected so that typos fail
loudly instead of silently falling back to defaults.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from scrstrauss.geometry import Domain, TrapArray, make_trap_grid
from scrstrauss.normconst import GridSpec
from scrstrauss.sampler import ChainConfig, Priors

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class TrapsSection:
    file: str | None = None
    rows: int = 12
    cols: int = 16
    spacing: float = 7.0
    center: tuple = (0.0, 0.0)

    def build(self, base: Path | None = None) -> TrapArray:
        if self.file:
            return TrapArray.from_csv(_resolve(self.file, base))
        return make_trap_grid(self.rows, self.cols, self.spacing, tuple(self.center))


@dataclass
class DomainSection:
    bounds: list | None = None  # [xmin, xmax, ymin, ymax]
    buffer: float = 15.0

    def build(self, traps: TrapArray) -> Domain:
        if self.bounds is not None:
            dom = Domain(*map(float, self.bounds))
        else:
            dom = Domain.around(traps.locations, self.buffer)
        traps.check_inside(dom)
        return dom


@dataclass
class TableSection:
    a_step: float = 0.1
    a_max: float = 3.0
    b_grid: list = field(default_factory=lambda: list(range(1, 11)))
    n_min: int = 100
    n_max: int = 200
    n_samples: int = 1000
    burn_in: int = 200
    warmup: int | None = None
    degree: int = 10
    seed: int = 1
    workers: int = 1

    def grid(self) -> GridSpec:
        na = int(round(self.a_max / self.a_step))
        a = tuple(float(np.round(k * self.a_step, 10)) for k in range(na + 1))
        return GridSpec(a, tuple(float(b) for b in self.b_grid), tuple(range(self.n_min, self.n_max + 1)))

    @classmethod
    def desk(cls, **kw) -> "TableSection":
        """Same grids, one sweep between retained draws instead of 200."""
        return cls(**{"burn_in": 1, "warmup": 50, **kw})


@dataclass
class DesignSection:
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


@dataclass
class ChainSection:
    iterations: int = 10_000
    burn_in: int = 2_000
    thin: int = 1
    seed: int = 0
    tune: bool = True
    target_accept: float = 0.4
    adapt_interval: int = 50

    def build(self, model="strauss", seed=None, **extra) -> ChainConfig:
        d = dataclasses.asdict(self)
        if seed is not None:
            d["seed"] = seed
        return ChainConfig(model=model, **d, **extra)

    @classmethod
    def full(cls, **kw) -> "ChainSection":
        return cls(**{"iterations": 50_000, "burn_in": 10_000, **kw})


@dataclass
class PriorsSection:
    N: int = 200
    a_pi: float = 1.0
    b_pi: float = 1.0
    a_max: float = 3.0
    b_support: list = field(default_factory=lambda: list(range(1, 11)))
    mu_log_lambda: float = 0.0
    sd_log_lambda: float = 1.0
    mu_log_rho: float = 2.0
    sd_log_rho: float = 1.0

    def build(self) -> Priors:
        return Priors(**dataclasses.asdict(self))


SECTIONS = {
    "domain": DomainSection,
    "traps": TrapsSection,
    "priors": PriorsSection,
    "table": TableSection,
    "chain": ChainSection,
    "design": DesignSection,
}


@dataclass
class RunConfig:
    domain: DomainSection = field(default_factory=DomainSection)
    traps: TrapsSection = field(default_factory=TrapsSection)
    priors: PriorsSection = field(default_factory=PriorsSection)
    table: TableSection = field(default_factory=TableSection)
    chain: ChainSection = field(default_factory=ChainSection)
    design: DesignSection = field(default_factory=DesignSection)
    base_dir: Path | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "RunConfig":
        d = dict(d)
        version = d.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version}")
        unknown = set(d) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kw = {}
        for name, sec in SECTIONS.items():
            body = d.get(name, {})
            if not isinstance(body, dict):
                raise ConfigError(f"section [{name}] must be an object")
            allowed = {f.name for f in dataclasses.fields(sec)}
            bad = set(body) - allowed
            if bad:
                raise ConfigError(f"unknown keys in [{name}]: {sorted(bad)}")
            try:
                kw[name] = sec(**body)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"[{name}]: {e}") from None
        cfg = cls(**kw, base_dir=Path(base_dir) if base_dir else None)
        if cfg.traps.file and not _resolve(cfg.traps.file, cfg.base_dir).exists():
            raise ConfigError(f"trap file {cfg.traps.file} does not exist")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            with open(path) as fh:
                d = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}: {e.msg}") from None
        return cls.from_dict(d, base_dir=path.parent)

    def to_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION}
        for name in SECTIONS:
            out[name] = dataclasses.asdict(getattr(self, name))
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def build_traps(self) -> TrapArray:
        return self.traps.build(self.base_dir)

    def build_domain(self, traps: TrapArray | None = None) -> Domain:
        return self.domain.build(traps if traps is not None else self.build_traps())


def _resolve(p, base: Path | None) -> Path:
    p = Path(p)
    return p if p.is_absolute() or base is None else base / p
