"""Spatial capture-recapture with Strauss-process home-range centers."""

from scrstrauss.geometry import Domain, TrapArray, distance, make_trap_grid, uniform_sample
from scrstrauss.strauss import StraussParams, log_unnormalized_density, pair_count, sample_fixed_n
from scrstrauss.likelihood import (
    CaptureHistory,
    DetectionParams,
    capture_probs,
    detection_kernel,
    log_likelihood_individual,
    simulate_captures,
)
from scrstrauss.normconst import GridSpec, NormConstTable, build_table, log_c
from scrstrauss.sampler import ChainConfig, ChainOutput, Priors, Sampler, run_chain
from scrstrauss.config import RunConfig

__version__ = "0.1.0"

__all__ = [
    "Domain",
    "TrapArray",
    "distance",
    "make_trap_grid",
    "uniform_sample",
    "StraussParams",
    "pair_count",
    "log_unnormalized_density",
    "sample_fixed_n",
    "CaptureHistory",
    "DetectionParams",
    "capture_probs",
    "detection_kernel",
    "log_likelihood_individual",
    "simulate_captures",
    "GridSpec",
    "NormConstTable",
    "build_table",
    "log_c",
    "ChainConfig",
    "ChainOutput",
    "Priors",
    "Sampler",
    "run_chain",
    "RunConfig",
]
