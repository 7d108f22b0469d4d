"""Failure probability bounds and estimates for monotone models."""

from __future__ import annotations

from .bootstrap import (
    BootstrapConfig,
    BootstrapReport,
    EstimatorConfig,
    bootstrap,
    bootstrap_bias,
    corrected_estimate,
    sample_dominated,
    surrogate_run,
    surrogate_volume,
)
from .engine import EngineConfig, Trajectory, make_rng, run
from .errors import (
    BoundaryEstimate,
    BracketError,
    ConfigError,
    DegenerateSignatures,
    DimensionMismatch,
    InitFailed,
    MonorareError,
    RejectionBudgetExceeded,
    SeparabilityViolation,
    TrainingDiverged,
)
from .estimator import (
    Estimate,
    LikelihoodData,
    confidence_interval,
    estimate,
    fisher_hat,
    mc_baseline,
    mle,
    score,
    windowed_mle,
)
from .geometry import BoundsPair, FrontierPair, VolumePolicy, bounds, klee_volume, volume_mc
from .problems import hydraulic_problem, toy_problem
from .surrogate import MinMaxNetwork, surrogate_signature, train

__version__ = "0.1.0"
