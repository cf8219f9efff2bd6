"""Sublinear makespan estimation on identical machines by weighted sampling.

The package estimates the optimal makespan of n jobs on m machines while
looking at far fewer than n jobs: a weighted-sampling oracle feeds a sketch
(bucketed job counts on a geometric time grid), and a head-solver plus
averaging step turns the sketch into a (1+epsilon)-style estimate, with an
optional expansion back to a concrete schedule.
"""

from .adaptive import AdaptiveConfig, adaptive_round, determine_h, estimate_w0, sketch_adaptive
from .errors import (
    ConfigurationError,
    InstanceFormatError,
    InsufficientSamplesError,
    OracleScaleError,
    PackingError,
    QualityViolation,
    SamplingBudgetExceededError,
    SubsketchError,
)
from .generators import GeneratorSpec, make_instance
from .known import KnownNConfig, birthday_estimate, sketch_known_n
from .model import (
    Instance,
    IntervalScheme,
    Params,
    SketchInstance,
    SketchQuality,
    SketchSchedule,
    load_instance,
    save_instance,
    validate_sketch_quality,
)
from .pipeline import build_sketch, run_estimate
from .report import ExperimentReport
from .sampler import Sample, SamplerIndex
from .scheduling import (
    deterministic_sketch,
    exact_opt,
    expand_schedule,
    expansion_bound_factor,
    list_schedule,
    lpt,
    meta_approx,
    meta_sketch_schedule,
    solve_largest,
)
from .validation import run_validation_suite

__version__ = "0.1.0"

__all__ = [
    "AdaptiveConfig",
    "ConfigurationError",
    "ExperimentReport",
    "GeneratorSpec",
    "Instance",
    "InstanceFormatError",
    "InsufficientSamplesError",
    "IntervalScheme",
    "KnownNConfig",
    "OracleScaleError",
    "PackingError",
    "Params",
    "QualityViolation",
    "Sample",
    "SamplerIndex",
    "SamplingBudgetExceededError",
    "SketchInstance",
    "SketchQuality",
    "SketchSchedule",
    "SubsketchError",
    "adaptive_round",
    "birthday_estimate",
    "build_sketch",
    "deterministic_sketch",
    "determine_h",
    "estimate_w0",
    "exact_opt",
    "expand_schedule",
    "expansion_bound_factor",
    "list_schedule",
    "load_instance",
    "lpt",
    "make_instance",
    "meta_approx",
    "meta_sketch_schedule",
    "run_estimate",
    "run_validation_suite",
    "save_instance",
    "sketch_adaptive",
    "sketch_known_n",
    "solve_largest",
    "validate_sketch_quality",
    "__version__",
]
