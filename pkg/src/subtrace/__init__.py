"""Streaming DPM/OJA subspace trackers with a per-step stepsize limiter."""

from .harness import ComparisonReport, ExperimentSpec, run_arm, run_comparison, run_trial
from .metrics import (
    AggregateSeries,
    MetricSample,
    RunMetrics,
    SparkEvent,
    aggregate,
    detect_sparks,
    orthonormality_error,
    projection_error,
)
from .model import ScenarioConfig, TrueBases, generate_true_bases, perturb_basis, snapshot
from .numkit import complete_basis, hermitian_apply, orthonormalize, span_distance
from .tracker import (
    AlgoClass,
    ClampPolicy,
    Mode,
    StepRecord,
    TrackerConfig,
    TrackerState,
    clamp_beta,
    companion_t,
    gamma_angle,
    init_tracker,
    rotated_update_basis,
    update,
)

__version__ = "0.1.0"
