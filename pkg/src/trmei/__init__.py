"""Trust-region Bayesian optimization with a big-M penalized expected improvement."""

from .gp import GpModel, HyperBounds, KernelParams, fit, predict, sample_posterior
from .harness import CampaignSpec, run_campaign, summarize, write_outputs
from .optimizer import METHODS, OptimizerConfig, RunTrace, run, run_random_baseline, run_ts_baseline
from .penalized import PenaltyConfig, penalized_moments, penalized_value
from .problems import Problem, make_problem
from .trust_region import TrustRegionConfig

__version__ = "0.1.0"

__all__ = [
    "CampaignSpec",
    "GpModel",
    "HyperBounds",
    "KernelParams",
    "METHODS",
    "OptimizerConfig",
    "PenaltyConfig",
    "Problem",
    "RunTrace",
    "TrustRegionConfig",
    "fit",
    "make_problem",
    "penalized_moments",
    "penalized_value",
    "predict",
    "run",
    "run_campaign",
    "run_random_baseline",
    "run_ts_baseline",
    "sample_posterior",
    "summarize",
    "write_outputs",
]
