"""Tests for the solvers, the sketch scheduler and the exact oracles."""

import math

import numpy as np
import pytest

from oracles import brute_force_opt
from subsketch.errors import ConfigurationError, OracleScaleError
from subsketch.model import Instance, IntervalScheme, SketchInstance, SketchQuality
from subsketch.scheduling import (
    _exact_opt_dp2,
    _exact_opt_states,
    deterministic_sketch,
    exact_bb,
    exact_opt,
    exact_sketch,
    expand_schedule,
    expansion_bound_factor,
    list_schedule,
    lpt,
    meta_approx,
    meta_sketch_schedule,
    sketch_opt_bounds,
    solve_largest,
)
from subsketch.model import validate_sketch_quality


def _random_sketch(rng, max_jobs=10):
    anchor = float(np.exp(rng.uniform(0.0, 3.0)))
    delta = float(rng.uniform(0.05, 0.45))
    scheme = IntervalScheme(anchor, delta)
    buckets = rng.choice(np.arange(1, 9), size=int(rng.integers(1, 4)), replace=False)
    counts = {}
    budget = int(rng.integers(1, max_jobs + 1))
    for b in sorted(int(x) for x in buckets):
        if budget == 0:
            break
        c = int(rng.integers(1, budget + 1))
        counts[b] = c
        budget -= c
    return SketchInstance.from_counts(scheme, counts)


def test_lpt_hand_example():
    result = lpt([3.0, 3.0, 2.0, 2.0, 2.0], 2)
    assert result.makespan == pytest.approx(7.0)  # classic non-optimal case
    assert result.ratio_bound == pytest.approx(4 / 3 - 1 / 6)
    loads = np.zeros(2)
    np.add.at(loads, result.assignment, [3.0, 3.0, 2.0, 2.0, 2.0])
    assert loads.max() == pytest.approx(result.makespan)


def test_lpt_within_ratio_of_optimum():
    rng = np.random.Generator(np.random.Philox(41))
    for _ in range(40):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 4))
        jobs = rng.uniform(0.5, 3.0, size=n)
        opt = brute_force_opt(jobs, m)
        got = lpt(jobs, m).makespan
        assert got >= opt * (1 - 1e-9)
        assert got <= (4 / 3 - 1 / (3 * m)) * opt * (1 + 1e-9)


def test_exact_bb_hand_example():
    assert exact_bb([5.0, 4.0, 3.0, 3.0, 3.0], 2).makespan == pytest.approx(9.0)


def test_exact_bb_matches_enumeration():
    rng = np.random.Generator(np.random.Philox(42))
    for _ in range(60):
        n = int(rng.integers(1, 10))
        m = int(rng.integers(2, 4))
        jobs = np.round(rng.uniform(0.5, 3.0, size=n), 3)
        want = brute_force_opt(jobs, m)
        result = exact_bb(jobs, m)
        assert result.makespan == pytest.approx(want)
        loads = np.zeros(m)
        np.add.at(loads, result.assignment, jobs)
        assert loads.max() == pytest.approx(result.makespan)


def test_exact_bb_caps_and_edges():
    with pytest.raises(OracleScaleError):
        exact_bb(np.ones(21), 2)
    with pytest.raises(ConfigurationError):
        exact_bb([1.0], 0)
    assert exact_bb([], 3).makespan == 0.0


def test_solve_largest_dispatch():
    small = solve_largest(np.ones(4), 2)
    assert small.strategy == "exact_bb"
    big = solve_largest(np.ones(30), 2)
    assert big.strategy == "lpt"
    forced = solve_largest(np.ones(4), 2, strategy="lpt")
    assert forced.strategy == "lpt"
    with pytest.raises(ConfigurationError):
        solve_largest(np.ones(4), 2, strategy="magic")


def test_list_schedule_within_deadline():
    out = list_schedule([4.0, 3.0, 3.0, 2.0], 2, deadline=6.0)
    assert out.ok
    assert out.failed_at is None
    assert sorted(out.loads.tolist()) == pytest.approx([6.0, 6.0])


def test_list_schedule_reports_failure_point():
    out = list_schedule([4.0, 3.0, 3.0, 2.0], 2, deadline=5.0)
    assert not out.ok
    assert out.assignment is None
    assert out.failed_at == 2  # third job cannot complete by 5
    assert out.loads.tolist() == pytest.approx([4.0, 3.0])


def test_list_schedule_initial_loads():
    out = list_schedule([2.0], 2, deadline=5.0, initial_loads=[5.0, 0.0])
    assert out.ok
    assert out.assignment.tolist() == [1]
    with pytest.raises(ConfigurationError):
        list_schedule([1.0], 2, deadline=5.0, initial_loads=[1.0])


def test_meta_unit_jobs():
    # one unit job per machine: T = (1 + epsilon/3) * 1 exactly
    scheme = IntervalScheme(1.0, 0.1)
    for m in (1, 2, 5):
        sketch = SketchInstance.from_counts(scheme, {1: m})
        assert meta_approx(sketch, m, 0.3) == pytest.approx(1.1)


def test_meta_average_load_branch():
    # many equal small jobs: the load floor dominates the solved head
    scheme = IntervalScheme(1.0, 0.1)
    sketch = SketchInstance.from_counts(scheme, {1: 1000})
    t = meta_approx(sketch, 2, 0.3)
    assert t == pytest.approx(1.1 * 500.0)


def test_meta_sandwiches_sketch_optimum():
    rng = np.random.Generator(np.random.Philox(43))
    for _ in range(60):
        sketch = _random_sketch(rng)
        m = int(rng.integers(1, 4))
        epsilon = float(rng.choice([0.2, 0.5]))
        opt = brute_force_opt(sketch.jobs().tolist(), m)
        t = meta_approx(sketch, m, epsilon)
        assert opt * (1 - 1e-9) <= t <= (1 + epsilon) * opt * (1 + 1e-9)


def test_meta_warns_when_solver_ratio_too_weak():
    rng = np.random.Generator(np.random.Philox(44))
    sketch = _random_sketch(rng, max_jobs=8)
    with pytest.warns(UserWarning, match="solver guarantee"):
        meta_approx(sketch, 2, 0.3, strategy="lpt")


def test_meta_sketch_schedule_realizes_estimate():
    rng = np.random.Generator(np.random.Philox(45))
    for _ in range(40):
        sketch = _random_sketch(rng)
        m = int(rng.integers(1, 4))
        epsilon = float(rng.choice([0.2, 0.5]))
        t, schedule = meta_sketch_schedule(sketch, m, epsilon)
        assert t == meta_approx(sketch, m, epsilon)
        assert schedule.machines == m
        assert schedule.makespan() <= t * (1 + 1e-9)


def test_meta_sketch_schedule_pours_in_count_space():
    # a billion sketch jobs: only count arithmetic can finish this
    scheme = IntervalScheme(4.0, 0.2)
    sketch = SketchInstance.from_counts(scheme, {1: 10**9, 3: 10**9})
    t, schedule = meta_sketch_schedule(sketch, 3, 0.4)
    assert schedule.makespan() <= t * (1 + 1e-9)
    assert schedule.counts.sum() == 2 * 10**9


def test_expand_schedule_fills_slots_in_order():
    scheme = IntervalScheme(8.0, 0.25)
    rep3 = scheme.rep_time(3)
    inst = Instance(np.array([8.0, 8.0, rep3, rep3]))
    sketch = SketchInstance.from_counts(scheme, {1: 2, 3: 2})
    from subsketch.model import SketchSchedule

    schedule = SketchSchedule(sketch=sketch, machines=2, counts=[[1, 0], [1, 2]])
    concrete = expand_schedule(inst, sketch, schedule)
    assert concrete.assignment.tolist() == [0, 1, 1, 1]
    assert concrete.makespan == pytest.approx(8.0 + 2 * rep3)
    assert concrete.bound_vs_opt is None


def test_expand_schedule_surplus_rule():
    scheme = IntervalScheme(2.0, 0.25)
    inst = Instance(np.array([2.0, 2.0, 2.0]))
    sketch = SketchInstance.from_counts(scheme, {1: 2})  # one job short
    from subsketch.model import SketchSchedule

    lopsided = SketchSchedule(sketch=sketch, machines=2, counts=[[0], [2]])
    got = expand_schedule(inst, sketch, lopsided)
    assert got.assignment.tolist() == [1, 1, 1]  # surplus follows the slots

    tied = SketchSchedule(sketch=sketch, machines=2, counts=[[1], [1]])
    got = expand_schedule(inst, sketch, tied)
    assert got.assignment.tolist() == [0, 1, 0]  # ties break to machine 0


def test_expand_schedule_unknown_bucket_goes_to_machine_zero():
    scheme = IntervalScheme(2.0, 0.25)
    small = scheme.rep_time(9)
    inst = Instance(np.array([2.0, small]))
    sketch = SketchInstance.from_counts(scheme, {1: 1})
    from subsketch.model import SketchSchedule

    schedule = SketchSchedule(sketch=sketch, machines=2, counts=[[0], [1]])
    got = expand_schedule(inst, sketch, schedule)
    assert got.assignment.tolist() == [1, 0]


def test_expand_schedule_rejects_foreign_sketch():
    scheme = IntervalScheme(2.0, 0.25)
    sketch_a = SketchInstance.from_counts(scheme, {1: 1})
    sketch_b = SketchInstance.from_counts(scheme, {1: 2})
    from subsketch.model import SketchSchedule

    schedule_b = SketchSchedule(sketch=sketch_b, machines=1, counts=[[2]])
    with pytest.raises(ConfigurationError):
        expand_schedule(Instance(np.array([2.0])), sketch_a, schedule_b)


def test_expansion_bound_factor_by_hand():
    q = SketchQuality(alpha=0.2, beta1=0.1, beta2=0.05)
    assert expansion_bound_factor(q, 2) == pytest.approx(1.1 * 1.5 + 0.05)
    assert expansion_bound_factor(SketchQuality(0.0, 0.0, 0.0), 7) == pytest.approx(1.0)


def test_expanded_makespan_obeys_measured_quality_bound():
    rng = np.random.Generator(np.random.Philox(46))
    for _ in range(30):
        n = 10
        jobs = np.round(rng.uniform(0.5, 4.0, size=n), 3)
        inst = Instance(jobs)
        opt = brute_force_opt(jobs, 2)
        truth = exact_sketch(inst, 0.3)
        counts = truth.counts_by_bucket()
        # nudge one well-populated bucket by a job, sometimes drop the tail
        fat = [b for b, c in counts.items() if c >= 2]
        if fat:
            b = int(rng.choice(fat))
            counts[b] += int(rng.choice([-1, 1]))
        if rng.random() < 0.5 and len(counts) > 1:
            del counts[max(counts)]
        doctored = SketchInstance.from_counts(truth.scheme, counts)
        quality = validate_sketch_quality(inst, doctored, 2, opt)
        _, schedule = meta_sketch_schedule(doctored, 2, 0.3)
        expanded = expand_schedule(inst, doctored, schedule, quality)
        assert expanded.bound_vs_opt == pytest.approx(
            expansion_bound_factor(quality, 2)
        )
        assert expanded.makespan <= expanded.bound_vs_opt * opt * (1 + 1e-9)


def test_exact_sketch_matches_naive_histogram():
    rng = np.random.Generator(np.random.Philox(47))
    times = np.exp(rng.uniform(0.0, 6.0, size=200))
    inst = Instance(times)
    delta = 0.2
    sketch = exact_sketch(inst, delta)
    scheme = sketch.scheme
    assert scheme.anchor == inst.max_time

    # independent horizon: the first depth where even n copies of the next
    # representative are negligible against the largest job
    horizon = 1
    while inst.n * scheme.rep_time(horizon + 1) > delta * inst.max_time:
        horizon += 1

    naive = {}
    for t in times:
        k = scheme.bucket(float(t))
        if 1 <= k <= horizon:
            naive[k] = naive.get(k, 0) + 1
    assert sketch.counts_by_bucket() == naive

    covered = set(naive)
    dropped = sum(float(t) for t in times if scheme.bucket(float(t)) not in covered)
    assert dropped <= delta * inst.max_time * (1 + 1e-9)


def test_deterministic_sketch_rounds_up_by_its_resolution():
    rng = np.random.Generator(np.random.Philox(48))
    inst = Instance(rng.uniform(0.5, 1.5, size=300))
    epsilon = 0.4
    sketch = deterministic_sketch(inst, epsilon)
    delta = epsilon / 8
    assert sketch.scheme.delta == pytest.approx(delta)
    assert sketch.job_count == inst.n  # bounded ratio: nothing dropped
    for t in inst.processing_times:
        rep = sketch.scheme.rep_time(sketch.scheme.bucket(float(t)))
        assert 1.0 - 1e-9 <= rep / float(t) <= 1.0 / (1.0 - delta) + 1e-9


def test_deterministic_estimate_hand_example():
    inst = Instance(np.array([1.0, 1.0, 1.0, 1.0]))
    sketch = deterministic_sketch(inst, 0.3)
    t = meta_approx(sketch, 2, 0.3)
    assert t == pytest.approx(2.2)
    assert 2.0 <= t <= 2.6


def test_exact_opt_hand_and_edges():
    assert exact_opt([5.0, 4.0, 3.0, 3.0, 3.0], 2) == pytest.approx(9.0)
    assert exact_opt([], 2) == 0.0
    assert exact_opt([3.0, 1.0], 1) == 4.0
    assert exact_opt([3.0, 1.0], 5) == 3.0
    with pytest.raises(ConfigurationError):
        exact_opt([1.0], 0)


def test_exact_opt_matches_brute_force():
    rng = np.random.Generator(np.random.Philox(49))
    for _ in range(40):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(2, 4))
        jobs = rng.uniform(0.5, 3.0, size=n)
        assert exact_opt(jobs, m) == pytest.approx(brute_force_opt(jobs, m))


def test_exact_opt_internal_paths_agree():
    rng = np.random.Generator(np.random.Philox(50))
    for _ in range(20):
        jobs = rng.integers(1, 50, size=12).astype(np.float64)
        assert _exact_opt_dp2(jobs) == pytest.approx(_exact_opt_states(jobs, 2))


def test_exact_opt_dp_handles_large_integral_two_machine():
    rng = np.random.Generator(np.random.Philox(51))
    jobs = rng.integers(1, 1000, size=40).astype(np.float64)
    got = exact_opt(jobs, 2)
    assert got >= max(jobs.sum() / 2, jobs.max()) - 1e-9
    assert got <= lpt(jobs, 2).makespan + 1e-9


def test_exact_opt_scale_error():
    rng = np.random.Generator(np.random.Philox(52))
    jobs = rng.uniform(0.5, 1.5, size=50)  # non-integral, 2^50 states
    with pytest.raises(OracleScaleError):
        exact_opt(jobs, 2)


def test_sketch_opt_bounds_bracket_the_optimum():
    rng = np.random.Generator(np.random.Philox(53))
    for _ in range(40):
        sketch = _random_sketch(rng)
        m = int(rng.integers(1, 4))
        lower, upper = sketch_opt_bounds(sketch, m)
        opt = brute_force_opt(sketch.jobs().tolist(), m)
        assert lower <= opt * (1 + 1e-9)
        assert opt <= upper * (1 + 1e-9)
    empty = SketchInstance(IntervalScheme(1.0, 0.2), ())
    assert sketch_opt_bounds(empty, 3) == (0.0, 0.0)
