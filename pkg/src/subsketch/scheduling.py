"""Scheduling on identical machines: solvers, sketch schedulers, exact oracles.

The central entry points take a sketch rather than a full instance.  The
estimate T returned by ``meta_approx`` is a provable sandwich around the
sketch's optimal makespan: the sketch's largest jobs go to a black-box solver,
everything else is covered by the average-load floor, and one (1+delta)
inflation pays for both.  ``meta_sketch_schedule`` additionally realizes T as
an explicit per-machine assignment of sketch counts, and ``expand_schedule``
maps such an assignment back onto the real jobs of a concrete instance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, OracleScaleError, PackingError
from .model import (
    ConcreteSchedule,
    Instance,
    IntervalScheme,
    SketchInstance,
    SketchQuality,
    SketchSchedule,
)

# Branch and bound explores machine assignments job by job; beyond this many
# jobs the search space stops being a desk-scale object.
EXACT_BB_MAX_JOBS = 20

# exact_opt enumerates load states; the assignment space m**n is capped here.
EXACT_ENUM_MAX_STATES = 10**8

# Integral two-machine instances can be solved by subset-sum DP as long as
# the total processing time stays a manageable bitset.
EXACT_DP_MAX_TOTAL = 2 * 10**7

_REL_SLACK = 1e-9


@dataclass(frozen=True)
class SolverResult:
    makespan: float
    assignment: np.ndarray
    strategy: str
    ratio_bound: float


@dataclass(frozen=True)
class ListScheduleOutcome:
    ok: bool
    assignment: np.ndarray | None
    loads: np.ndarray
    failed_at: int | None


def lpt(jobs, m: int) -> SolverResult:
    """Longest processing time first onto the least-loaded machine.

    Guarantee: makespan <= (4/3 - 1/(3m)) * OPT.  Ties between machines go
    to the lowest index.
    """
    jobs = np.asarray(jobs, dtype=np.float64)
    if m < 1:
        raise ConfigurationError("need at least one machine")
    order = np.argsort(-jobs, kind="stable")
    loads = np.zeros(m)
    assignment = np.zeros(jobs.size, dtype=np.int64)
    for j in order:
        i = int(np.argmin(loads))
        assignment[j] = i
        loads[i] += jobs[j]
    makespan = float(loads.max()) if jobs.size else 0.0
    return SolverResult(makespan, assignment, "lpt", 4.0 / 3.0 - 1.0 / (3.0 * m))


def exact_bb(jobs, m: int) -> SolverResult:
    """Optimal assignment by depth-first branch and bound.

    Jobs are placed largest first; branches are cut by the incumbent, by the
    average-load floor over the remaining work, and by machine-load symmetry.
    Capped at EXACT_BB_MAX_JOBS jobs; use lpt beyond that.
    """
    jobs = np.asarray(jobs, dtype=np.float64)
    if m < 1:
        raise ConfigurationError("need at least one machine")
    n = jobs.size
    if n > EXACT_BB_MAX_JOBS:
        raise OracleScaleError(
            f"exact_bb handles at most {EXACT_BB_MAX_JOBS} jobs, got {n}; "
            "use the lpt strategy instead"
        )
    if n == 0:
        return SolverResult(0.0, np.zeros(0, dtype=np.int64), "exact_bb", 1.0)

    order = np.argsort(-jobs, kind="stable")
    sorted_jobs = jobs[order]
    suffix = np.concatenate([np.cumsum(sorted_jobs[::-1])[::-1], [0.0]])
    seed = lpt(jobs, m)
    best = seed.makespan
    best_assignment = seed.assignment[order].tolist()
    loads = [0.0] * m
    current = [0] * n

    def descend(depth: int, cur_max: float):
        nonlocal best, best_assignment
        if depth == n:
            if cur_max < best:
                best = cur_max
                best_assignment = current.copy()
            return
        floor = (sum(loads) + suffix[depth]) / m
        if max(cur_max, floor) >= best - _REL_SLACK * best:
            return
        p = sorted_jobs[depth]
        tried = set()
        for i in range(m):
            if loads[i] in tried:
                continue
            tried.add(loads[i])
            if loads[i] + p >= best - _REL_SLACK * best:
                continue
            loads[i] += p
            current[depth] = i
            descend(depth + 1, max(cur_max, loads[i]))
            loads[i] -= p

    descend(0, 0.0)
    assignment = np.zeros(n, dtype=np.int64)
    assignment[order] = best_assignment
    return SolverResult(float(best), assignment, "exact_bb", 1.0)


def solve_largest(jobs, m: int, strategy: str = "auto") -> SolverResult:
    """Dispatch the black-box solver used on a sketch's largest jobs."""
    jobs = np.asarray(jobs, dtype=np.float64)
    if strategy == "auto":
        strategy = "exact_bb" if jobs.size <= EXACT_BB_MAX_JOBS else "lpt"
    if strategy == "exact_bb":
        return exact_bb(jobs, m)
    if strategy == "lpt":
        return lpt(jobs, m)
    raise ConfigurationError(f"unknown solver strategy {strategy!r}")


def list_schedule(jobs, m: int, deadline: float, initial_loads=None) -> ListScheduleOutcome:
    """Greedy list scheduling with a deadline.

    Jobs are taken in the given order, each onto the least-loaded machine
    (ties toward the lowest index).  Fails on the first job whose completion
    would exceed the deadline beyond rounding slack.
    """
    jobs = np.asarray(jobs, dtype=np.float64)
    if m < 1:
        raise ConfigurationError("need at least one machine")
    loads = (
        np.zeros(m)
        if initial_loads is None
        else np.asarray(initial_loads, dtype=np.float64).copy()
    )
    if loads.shape != (m,):
        raise ConfigurationError("initial_loads must have one entry per machine")
    assignment = np.zeros(jobs.size, dtype=np.int64)
    limit = deadline * (1.0 + _REL_SLACK)
    for j, p in enumerate(jobs):
        i = int(np.argmin(loads))
        if loads[i] + p > limit:
            # loads are reported as they stood when the job would not fit
            return ListScheduleOutcome(False, None, loads, j)
        loads[i] += p
        assignment[j] = i
    return ListScheduleOutcome(True, assignment, loads, None)


def _top_jobs_with_entries(sketch: SketchInstance, count: int):
    """The ``count`` largest sketch jobs plus the entry index of each."""
    times = []
    entry_of = []
    remaining = count
    for e, entry in enumerate(sketch.entries):
        if remaining <= 0:
            break
        take = min(entry.count, remaining)
        times.extend([entry.time] * take)
        entry_of.extend([e] * take)
        remaining -= take
    return np.asarray(times, dtype=np.float64), entry_of


def _meta_core(sketch: SketchInstance, m: int, epsilon: float, strategy: str):
    if m < 1:
        raise ConfigurationError("need at least one machine")
    if not (0.0 < epsilon < 1.0):
        raise ConfigurationError("epsilon must lie in (0, 1)")
    delta = epsilon / 3.0
    head = math.ceil(m / delta)
    top, entry_of = _top_jobs_with_entries(sketch, head)
    solver = solve_largest(top, m, strategy) if top.size else None
    t0 = solver.makespan if solver is not None else 0.0
    baseline = sketch.total_time / m
    t = (1.0 + delta) * max(t0, baseline)
    return t, solver, entry_of, head, delta


def meta_approx(
    sketch: SketchInstance, m: int, epsilon: float, strategy: str = "auto"
) -> float:
    """Estimate T with OPT(sketch) <= T <= (1+epsilon') * OPT(sketch).

    The upper factor is (1+epsilon/3) times the solver's own guarantee, so
    it is (1+epsilon/3)^2 <= 1+epsilon for an exact solver.  A warning is
    raised when the chosen solver's ratio is too weak to preserve that.
    """
    t, solver, _, _, delta = _meta_core(sketch, m, epsilon, strategy)
    if solver is not None and solver.ratio_bound > 1.0 + delta:
        warnings.warn(
            "solver guarantee exceeds 1+epsilon/3; the sandwich upper bound "
            f"weakens to {(1.0 + delta) * solver.ratio_bound:.4f} * OPT",
            stacklevel=2,
        )
    return t


def meta_sketch_schedule(
    sketch: SketchInstance, m: int, epsilon: float, strategy: str = "auto"
) -> tuple[float, SketchSchedule]:
    """Estimate T and realize it as a per-machine assignment of sketch counts.

    The solver's assignment of the largest jobs is kept; remaining counts are
    poured machine by machine, largest times first, each machine filled up to
    T before moving on.  The pour touches O(m + entries) count cells, never
    the individual jobs.
    """
    t, solver, entry_of, head, _ = _meta_core(sketch, m, epsilon, strategy)
    entries = sketch.entries
    counts = np.zeros((m, len(entries)), dtype=np.int64)
    if solver is not None:
        for job, machine in enumerate(solver.assignment):
            counts[int(machine), entry_of[job]] += 1
    remaining = np.array([e.count for e in entries], dtype=np.int64)
    remaining -= counts.sum(axis=0)

    if sketch.job_count > head:
        loads = counts @ np.array([e.time for e in entries])
        limit = t * (1.0 + _REL_SLACK)
        i = 0
        e = 0
        while e < len(entries):
            if remaining[e] == 0:
                e += 1
                continue
            if i >= m:
                raise PackingError(
                    "ran out of machines pouring sketch counts; deadline "
                    "arithmetic violated its feasibility guarantee"
                )
            fit = int(math.floor((limit - loads[i]) / entries[e].time))
            take = min(int(remaining[e]), max(fit, 0))
            if take > 0:
                counts[i, e] += take
                loads[i] += take * entries[e].time
                remaining[e] -= take
            if remaining[e] == 0:
                e += 1
            else:
                i += 1
    elif remaining.any():
        raise PackingError("solver stage left counts unplaced on a small sketch")

    return t, SketchSchedule(sketch=sketch, machines=m, counts=counts)


def expansion_bound_factor(quality: SketchQuality, m: int) -> float:
    """Makespan guarantee of an expanded schedule, as a multiple of OPT."""
    return (1.0 + quality.beta1) * (
        1.0 + quality.alpha / (1.0 - quality.alpha) * m
    ) + quality.beta2


def expand_schedule(
    instance: Instance,
    sketch: SketchInstance,
    sketch_schedule: SketchSchedule,
    quality: SketchQuality | None = None,
) -> ConcreteSchedule:
    """Map a sketch schedule onto the real jobs of an instance.

    Real jobs of each bucket fill that bucket's slots in index order,
    machine by machine.  When a bucket holds more real jobs than the sketch
    counted, the surplus lands on the machine holding the most slots for
    that bucket (lowest index on ties).  Jobs from buckets the sketch never
    recorded go to machine 0.
    """
    if sketch_schedule.sketch is not sketch and sketch_schedule.sketch != sketch:
        raise ConfigurationError("schedule was built for a different sketch")
    m = sketch_schedule.machines
    job_buckets = sketch.scheme.bucket_array(instance.processing_times)
    assignment = np.zeros(instance.n, dtype=np.int64)
    for e, entry in enumerate(sketch.entries):
        jobs_here = np.flatnonzero(job_buckets == entry.bucket)
        if jobs_here.size == 0:
            continue
        slots = sketch_schedule.counts[:, e]
        slotted = np.repeat(np.arange(m), slots)
        take = min(jobs_here.size, slotted.size)
        assignment[jobs_here[:take]] = slotted[:take]
        if jobs_here.size > slotted.size:
            assignment[jobs_here[take:]] = int(np.argmax(slots))
    loads = np.zeros(m)
    np.add.at(loads, assignment, instance.processing_times)
    makespan = float(loads.max()) if instance.n else 0.0
    bound = expansion_bound_factor(quality, m) if quality is not None else None
    return ConcreteSchedule(
        machines=m, assignment=assignment, makespan=makespan, bound_vs_opt=bound
    )


def exact_sketch(instance: Instance, delta: float) -> SketchInstance:
    """Exact per-bucket histogram of an instance on a grid anchored at its
    maximum time.

    Buckets are cut off once even n copies of the next representative time
    would be negligible next to the largest job, so the dropped mass is at
    most delta times the largest job.
    """
    if not (0.0 < delta < 0.5):
        raise ConfigurationError("delta must lie in (0, 1/2)")
    if instance.n == 0:
        return SketchInstance(IntervalScheme(1.0, delta), ())
    scheme = IntervalScheme(instance.max_time, delta)
    horizon = max(1, math.ceil(math.log(instance.n / delta) / -math.log1p(-delta)))
    buckets = scheme.bucket_array(instance.processing_times)
    kept = buckets[(buckets >= 1) & (buckets <= horizon)]
    histogram = np.bincount(kept, minlength=horizon + 1)
    counts = {k: int(histogram[k]) for k in range(1, horizon + 1) if histogram[k]}
    return SketchInstance.from_counts(scheme, counts)


def deterministic_sketch(instance: Instance, epsilon: float) -> SketchInstance:
    """Two-pass exact sketch at grid resolution epsilon/8.

    Pass one finds the maximum time; pass two histograms every job onto the
    grid.  Feeding the result to meta_approx at the same epsilon keeps the
    combined estimate within (1+epsilon) of the true optimum.
    """
    if not (0.0 < epsilon < 1.0):
        raise ConfigurationError("epsilon must lie in (0, 1)")
    return exact_sketch(instance, epsilon / 8.0)


def _exact_opt_states(jobs: np.ndarray, m: int) -> float:
    # Enumerate machine-load multisets job by job.  Sorting each state row
    # collapses machine relabelings, so the frontier stays tiny while still
    # covering every distinct assignment.
    states = np.zeros((1, m))
    for p in np.sort(jobs)[::-1]:
        grown = states[:, None, :] + p * np.eye(m)[None, :, :]
        states = np.unique(np.sort(grown.reshape(-1, m), axis=1), axis=0)
    return float(states.max(axis=1).min())


def _exact_opt_dp2(jobs: np.ndarray) -> float:
    total = int(round(jobs.sum()))
    reachable = 1
    for p in jobs:
        reachable |= reachable << int(round(p))
    half = (total + 1) // 2
    shifted = reachable >> half
    low = (shifted & -shifted).bit_length() - 1
    best = half + low
    return float(max(best, total - best))


def exact_opt(jobs, m: int) -> float:
    """Exact optimal makespan for desk-scale inputs.

    Uses exhaustive state enumeration while m**n stays within
    EXACT_ENUM_MAX_STATES, and a subset-sum bitset for larger integral
    two-machine instances.  Anything beyond raises OracleScaleError.
    """
    jobs = np.asarray(jobs, dtype=np.float64)
    if m < 1:
        raise ConfigurationError("need at least one machine")
    if jobs.size == 0:
        return 0.0
    if m == 1:
        return float(jobs.sum())
    if m >= jobs.size:
        return float(jobs.max())
    if m**jobs.size <= EXACT_ENUM_MAX_STATES:
        return _exact_opt_states(jobs, m)
    integral = np.allclose(jobs, np.round(jobs), rtol=0.0, atol=1e-9)
    if m == 2 and integral and jobs.sum() <= EXACT_DP_MAX_TOTAL:
        return _exact_opt_dp2(jobs)
    raise OracleScaleError(
        f"no exact oracle for {jobs.size} jobs on {m} machines at this scale"
    )


def sketch_opt_bounds(sketch: SketchInstance, m: int) -> tuple[float, float]:
    """Certified [lower, upper] bracket on a sketch's optimal makespan.

    Lower: average load and largest job.  Upper: the LPT makespan over the
    expanded counts.  Exact solving is hopeless once counts reach the
    thousands, but this bracket is cheap and usually tight enough for
    envelope checks.
    """
    if m < 1:
        raise ConfigurationError("need at least one machine")
    if not sketch.entries:
        return (0.0, 0.0)
    lower = max(sketch.total_time / m, sketch.max_time)
    loads = np.zeros(m)
    for entry in sketch.entries:
        for _ in range(entry.count):
            loads[np.argmin(loads)] += entry.time
    return (lower, float(loads.max()))
