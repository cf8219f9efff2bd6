"""End-to-end estimation: instance -> sketch -> makespan estimate -> report.

The sketch resolution is decoupled from the meta step's epsilon/3.  The
conservative wiring Params.delta makes every probabilistic guarantee line up
but costs an impractical number of draws; the default here is epsilon/3,
which keeps the estimate inside the relaxed (1 +/- 3 epsilon) envelope on
the benchmark families while staying runnable.  Callers wanting the strict
wiring pass sketch_delta=params.delta explicitly.
"""

from __future__ import annotations

import time

from .adaptive import AdaptiveConfig, sketch_adaptive
from .errors import ConfigurationError
from .known import KnownNConfig, sketch_known_n
from .model import Instance, Params, SketchInstance
from .report import ExperimentReport, ValidationBlock
from .sampler import SamplerIndex
from .scheduling import (
    deterministic_sketch,
    exact_opt,
    expand_schedule,
    meta_approx,
    meta_sketch_schedule,
)

MODES = ("known", "adaptive", "deterministic")


def default_sketch_delta(params: Params) -> float:
    return params.epsilon / 3.0


def build_sketch(
    instance: Instance,
    mode: str,
    params: Params,
    seed: int,
    sketch_delta: float | None = None,
    max_draws: int | None = None,
) -> tuple[SketchInstance, int]:
    """Construct the sketch for one mode; returns (sketch, draws spent)."""
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}")
    if mode == "deterministic":
        return deterministic_sketch(instance, params.epsilon), 0
    delta = default_sketch_delta(params) if sketch_delta is None else sketch_delta
    sampler = SamplerIndex(instance, seed=seed)
    if mode == "known":
        config = KnownNConfig(
            n=instance.n, m=params.m, delta=delta, gamma0=params.gamma0
        )
        sketch = sketch_known_n(sampler, config)
    else:
        config = AdaptiveConfig(
            m=params.m, delta=delta, gamma0=params.gamma0, max_draws=max_draws
        )
        sketch = sketch_adaptive(sampler, config)
    return sketch, sampler.draws_used()


def _envelope(mode: str, epsilon: float) -> tuple[float, float]:
    """Acceptance band for the estimate as multiples of the exact optimum."""
    if mode == "deterministic":
        return 1.0, 1.0 + epsilon
    return max(0.0, 1.0 - 3.0 * epsilon), 1.0 + 3.0 * epsilon


def run_estimate(
    instance: Instance,
    mode: str,
    params: Params,
    seed: int,
    sketch_delta: float | None = None,
    max_draws: int | None = None,
    validate: bool = False,
    emit_schedule: bool = False,
) -> ExperimentReport:
    """Full pipeline on one instance.

    validate computes the exact optimum (small instances only) and checks
    the estimate against the mode's acceptance band; emit_schedule also
    expands the sketch schedule back over the real jobs and reports its
    makespan.
    """
    started = time.perf_counter()
    sketch, draws = build_sketch(
        instance, mode, params, seed, sketch_delta=sketch_delta, max_draws=max_draws
    )
    estimate = meta_approx(sketch, params.m, params.epsilon)

    expanded_makespan = None
    if emit_schedule:
        _, sketch_schedule = meta_sketch_schedule(sketch, params.m, params.epsilon)
        concrete = expand_schedule(instance, sketch, sketch_schedule)
        expanded_makespan = concrete.makespan

    validation = None
    if validate:
        opt = exact_opt(instance.processing_times, params.m)
        low, high = _envelope(mode, params.epsilon)
        ok = low * opt * (1.0 - 1e-9) <= estimate <= high * opt * (1.0 + 1e-9)
        validation = ValidationBlock(
            exact_opt=opt,
            ratio=estimate / opt if opt > 0 else float("inf"),
            envelope_low=low,
            envelope_high=high,
            envelope_ok=ok,
        )

    elapsed_ms = (time.perf_counter() - started) * 1000.0
    delta_used = (
        params.epsilon / 8.0
        if mode == "deterministic"
        else (default_sketch_delta(params) if sketch_delta is None else sketch_delta)
    )
    return ExperimentReport(
        mode=mode,
        m=params.m,
        epsilon=params.epsilon,
        gamma0=params.gamma0,
        seed=seed,
        sketch_delta=delta_used,
        n=instance.n,
        estimate=estimate,
        sketch_entries=len(sketch.entries),
        draws_used=draws,
        wall_time_ms=elapsed_ms,
        validation=validation,
        expanded_makespan=expanded_makespan,
    )
