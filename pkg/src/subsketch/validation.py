"""Monte Carlo validation suites for the probabilistic guarantees.

Each suite reruns one statistical claim with seeded randomness and reports
pass/fail per criterion with the measured frequencies.  Thresholds add a
fixed 0.05 slack to the theoretical probabilities for finite-trial noise;
trial counts keep three standard errors inside that slack.  Seeded draws
make every suite outcome reproducible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .bounds import (
    pr_all_distinct_lower,
    pr_all_distinct_product_bounds,
    pr_all_distinct_upper,
)
from .errors import ConfigurationError
from .generators import two_point, two_point_exact_opt, uniform
from .known import KnownNConfig, birthday_estimate, sketch_known_n
from .model import C_EXPONENT, Instance, Params
from .pipeline import build_sketch
from .sampler import SamplerIndex
from .scheduling import meta_approx, sketch_opt_bounds

_SLACK = 0.05


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    passed: bool
    lines: tuple
    details: dict

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return "\n".join((f"{verdict} suite={self.suite}",) + self.lines)


def sketch_opt_envelope(m: int, delta: float) -> tuple[float, float]:
    """Guaranteed bracket of OPT(sketch)/OPT as a function of the resolution.

    Lower factor (1 - 2cm*delta)(1 - 4*delta) clamped at zero, upper factor
    (1 + 6cm*delta)(1 + delta).  At coarse resolutions the bracket is wide
    but still a checkable claim.
    """
    c = C_EXPONENT
    low = max(0.0, 1.0 - 2.0 * c * m * delta) * max(0.0, 1.0 - 4.0 * delta)
    high = (1.0 + 6.0 * c * m * delta) * (1.0 + delta)
    return low, high


def _ramp_weights(n: int, spread: float = 1.0) -> np.ndarray:
    if n == 1:
        return np.ones(1)
    return 1.0 + spread * np.arange(n) / (n - 1)


def sampler_chisq(
    seed: int = 0,
    sizes=(2, 10, 100),
    trials: int = 50,
    significance: float = 0.001,
) -> SuiteResult:
    """Frequency law of the sampling tree, plus its visit-count bound.

    trials is the number of draws per weight element.  Draws go through the
    per-draw tree descent so every draw also checks the node-visit ceiling
    2*log2(n) + 2.
    """
    lines = []
    details = {}
    passed = True
    for offset, n in enumerate(sizes):
        weights = _ramp_weights(n)
        sampler = SamplerIndex(Instance(weights), seed=seed + offset)
        draws = trials * n
        visit_cap = 2.0 * math.log2(n) + 2.0 if n > 1 else 1.0
        observed = np.zeros(n)
        worst_visits = 0
        for _ in range(draws):
            sample = sampler.sample_one()
            observed[sample.job_index] += 1
            worst_visits = max(worst_visits, sampler.last_draw_node_visits)
        expected = draws * weights / weights.sum()
        p_value = float(stats.chisquare(observed, expected).pvalue)
        ok = p_value >= significance and worst_visits <= visit_cap
        passed &= ok
        lines.append(
            f"{'PASS' if ok else 'FAIL'} n={n} chi2_p={p_value:.4f} "
            f"(need >= {significance}) worst_visits={worst_visits} "
            f"(cap {visit_cap:.1f})"
        )
        details[f"n={n}"] = {"p_value": p_value, "worst_visits": worst_visits}
    return SuiteResult("sampler_chisq", passed, tuple(lines), details)


def collision_bounds(
    seed: int = 0, trials: int = 100_000, grid=((50, 0.05), (50, 0.1), (200, 0.05), (200, 0.1))
) -> SuiteResult:
    """All-distinct probability vs the closed-form bounds.

    Weight vectors span exactly a (1+delta) factor, the regime the bounds
    assume.  Empirical frequencies must sit inside [lower - 3se, upper + 3se]
    for both the generic bounds and the weight-exact product bounds.
    """
    lines = []
    details = {}
    passed = True
    for offset, (n, delta) in enumerate(grid):
        weights = _ramp_weights(n, spread=delta)
        sampler = SamplerIndex(Instance(weights), seed=seed + 101 * offset)
        k_cap = math.ceil(n / (2.0 * (1.0 + delta))) - 1
        for k in sorted({2, k_cap // 2, k_cap}):
            idx = sampler.draw_indices(trials * k).reshape(trials, k)
            idx.sort(axis=1)
            distinct = ~np.any(idx[:, 1:] == idx[:, :-1], axis=1)
            p_hat = float(distinct.mean())
            se = math.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / trials)
            lower = pr_all_distinct_lower(n, k, delta)
            upper = pr_all_distinct_upper(n, k, delta)
            exact_lo, exact_hi = pr_all_distinct_product_bounds(weights, k)
            ok = (lower - 3 * se <= p_hat <= upper + 3 * se) and (
                exact_lo - 3 * se <= p_hat <= exact_hi + 3 * se
            )
            passed &= ok
            lines.append(
                f"{'PASS' if ok else 'FAIL'} n={n} delta={delta} k={k} "
                f"p_hat={p_hat:.5f} in [{lower:.5f}, {upper:.5f}] +/- 3se={3 * se:.5f}"
            )
            details[f"n={n},delta={delta},k={k}"] = {
                "p_hat": p_hat,
                "lower": lower,
                "upper": upper,
                "se": se,
            }
    return SuiteResult("collision_bounds", passed, tuple(lines), details)


def birthday_envelope(
    seed: int = 0,
    trials: int = 200,
    sizes=(1000, 10_000),
    delta: float = 0.1,
    gamma0: float = 1.0 / 12.0,
) -> SuiteResult:
    """Count-estimate envelope for a single bucket of equal jobs.

    The group count comes from the guarantee's own requirement
    u >= (12/delta^2) ln(16 h log_{1+delta}(3 sqrt n) / gamma0); since all
    jobs in the bucket weigh the same, the weighted draw law is uniform and
    is generated directly.
    """
    c = C_EXPONENT
    lines = []
    details = {}
    passed = True
    for size_offset, n in enumerate(sizes):
        config = KnownNConfig(n=n, m=1, delta=delta, gamma0=gamma0)
        h = config.horizon
        grid_points = math.log(config.scan_span) / math.log1p(delta)
        u = math.ceil(12.0 / delta**2 * math.log(16.0 * h * grid_points / gamma0))
        per_trial = u * config.group_len
        low = (1.0 + delta) ** (-2 * c) * n
        high = (1.0 + delta) ** (2 * c + 2) * n
        rng = np.random.Generator(np.random.Philox(seed + 7919 * size_offset))
        hits = 0
        for _ in range(trials):
            samples = rng.integers(0, n, size=per_trial)
            estimate = birthday_estimate(samples, config)
            if low * (1.0 - 1e-9) <= estimate <= high * (1.0 + 1e-9):
                hits += 1
        frequency = hits / trials
        need = 1.0 - 9.0 / 8.0 * gamma0 - _SLACK
        ok = frequency >= need
        passed &= ok
        lines.append(
            f"{'PASS' if ok else 'FAIL'} n={n} freq={frequency:.3f} "
            f"(need >= {need:.3f}) groups={u} envelope=[{low:.0f}, {high:.0f}]"
        )
        details[f"n={n}"] = {"frequency": frequency, "need": need, "groups": u}
    return SuiteResult("birthday_envelope", passed, tuple(lines), details)


def known_n_opt(
    seed: int = 0,
    trials: int = 50,
    n: int = 10_000,
    m: int = 2,
    delta: float = 0.45,
    gamma0: float = 1.0 / 12.0,
) -> SuiteResult:
    """End-to-end known-n sketches vs the optimum-preservation envelope.

    OPT(sketch) itself is intractable at this size, so the check brackets it
    between the load floor and the largest-first list bound; the trial passes
    only when the whole bracket sits inside the envelope, which can only
    under-report success.
    """
    opt = two_point_exact_opt(n, m)
    env_lo, env_hi = sketch_opt_envelope(m, delta)
    hits = 0
    for trial in range(trials):
        instance = two_point(n, seed=seed + trial)
        sampler = SamplerIndex(instance, seed=seed + 10_000 + trial)
        config = KnownNConfig(n=n, m=m, delta=delta, gamma0=gamma0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sketch = sketch_known_n(sampler, config)
        lower, upper = sketch_opt_bounds(sketch, m)
        if lower >= env_lo * opt * (1.0 - 1e-9) and upper <= env_hi * opt * (1.0 + 1e-9):
            hits += 1
    frequency = hits / trials
    ok = frequency >= 0.9
    line = (
        f"{'PASS' if ok else 'FAIL'} n={n} m={m} delta={delta} "
        f"freq={frequency:.3f} (need >= 0.900) envelope=[{env_lo:.2f}, {env_hi:.2f}]*OPT"
    )
    return SuiteResult(
        "known_n_opt",
        ok,
        (line,),
        {"frequency": frequency, "envelope": (env_lo, env_hi), "opt": opt},
    )


def adaptive_opt(
    seed: int = 0,
    trials: int = 50,
    n: int = 10_000,
    m: int = 2,
    epsilon: float = 0.5,
    gamma0: float = 1.0 / 12.0,
) -> SuiteResult:
    """Unknown-n pipeline estimate vs the relaxed (1 +/- 3 epsilon) band."""
    opt = two_point_exact_opt(n, m)
    params = Params(m=m, epsilon=epsilon, gamma0=gamma0)
    low = max(0.0, 1.0 - 3.0 * epsilon)
    high = 1.0 + 3.0 * epsilon
    hits = 0
    draws = []
    for trial in range(trials):
        instance = two_point(n, seed=seed + trial)
        sketch, used = build_sketch(
            instance, "adaptive", params, seed=seed + 20_000 + trial
        )
        estimate = meta_approx(sketch, m, epsilon)
        draws.append(used)
        if low * opt * (1.0 - 1e-9) <= estimate <= high * opt * (1.0 + 1e-9):
            hits += 1
    frequency = hits / trials
    need = 1.0 - 9.0 * gamma0 - _SLACK
    ok = frequency >= need
    line = (
        f"{'PASS' if ok else 'FAIL'} n={n} m={m} epsilon={epsilon} "
        f"freq={frequency:.3f} (need >= {need:.3f}) median_draws={int(np.median(draws))}"
    )
    return SuiteResult(
        "adaptive_opt",
        ok,
        (line,),
        {"frequency": frequency, "need": need, "median_draws": float(np.median(draws))},
    )


def sublinearity(
    seed: int = 0,
    trials: int = 2,
    sizes=(1000, 10_000, 100_000),
    m: int = 2,
    epsilon: float = 0.5,
) -> SuiteResult:
    """Draw growth of the unknown-n pipeline across instance sizes.

    The log-log slope of measured draws vs n must stay at or below 0.6
    (square-root growth plus logarithmic factors).
    """
    params = Params(m=m, epsilon=epsilon)
    medians = []
    for size_offset, n in enumerate(sizes):
        used = []
        for trial in range(trials):
            instance = uniform(n, seed=seed + 100 * size_offset + trial)
            _, draws = build_sketch(
                instance, "adaptive", params, seed=seed + 30_000 + 100 * size_offset + trial
            )
            used.append(draws)
        medians.append(float(np.median(used)))
    slope = float(np.polyfit(np.log(sizes), np.log(medians), 1)[0])
    ok = slope <= 0.6
    line = (
        f"{'PASS' if ok else 'FAIL'} slope={slope:.3f} (need <= 0.600) "
        f"draws={[int(d) for d in medians]} at n={list(sizes)}"
    )
    return SuiteResult(
        "sublinearity", ok, (line,), {"slope": slope, "draws": medians, "sizes": list(sizes)}
    )


_SUITES = {
    "sampler_chisq": sampler_chisq,
    "collision_bounds": collision_bounds,
    "birthday_envelope": birthday_envelope,
    "known_n_opt": known_n_opt,
    "adaptive_opt": adaptive_opt,
    "sublinearity": sublinearity,
}


def run_validation_suite(suite: str, trials: int | None = None, seed: int = 0) -> SuiteResult:
    if suite not in _SUITES:
        known = ", ".join(sorted(_SUITES))
        raise ConfigurationError(f"unknown suite {suite!r} (have: {known})")
    kwargs = {"seed": seed}
    if trials is not None:
        kwargs["trials"] = trials
    return _SUITES[suite](**kwargs)
