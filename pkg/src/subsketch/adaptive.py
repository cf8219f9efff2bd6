"""Sketch construction when the number of jobs is not known.

A short initial batch of draws fixes the weight anchor (largest sampled
time) and the bucket horizon.  One calibration round then splits the
qualifying buckets into exactly-countable ones and ones needing collision
estimates, and sampling rounds of geometrically doubling size run until
every bucket of the second kind is marked with a count.  Each round
discards the previous round's samples, so every estimate rests on one
i.i.d. batch.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, SamplingBudgetExceededError
from .known import SampleTally, distinct_prefix_lens
from .model import IntervalScheme, SketchInstance
from .sampler import SamplerIndex

logger = logging.getLogger(__name__)

_INV_SQRT_E = 1.0 / math.sqrt(math.e)

_DRAW_CHUNK = 1 << 22


@dataclass(frozen=True)
class AdaptiveConfig:
    """Knobs fixed before anything is sampled.

    The constants that depend on the bucket horizon live on the resolved
    form returned by resolve(), since the horizon is itself measured.
    """

    m: int
    delta: float
    gamma0: float = 1.0 / 12.0
    max_draws: int | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ConfigurationError("m must be >= 1")
        if not (0.0 < self.delta <= 1.0 / 3.0):
            raise ConfigurationError("delta must lie in (0, 1/3]")
        if not (0.0 < self.gamma0 <= 1.0 / 12.0):
            raise ConfigurationError("gamma0 must lie in (0, 1/12]")
        if self.max_draws is not None and self.max_draws < 1:
            raise ConfigurationError("max_draws must be >= 1 when given")

    @cached_property
    def tail_miss_rounds(self) -> int:
        """Smallest d with (1 - delta/m)^((m/delta) d) <= gamma0.

        Each block of m/delta draws misses any fixed delta/m weight share
        with probability about 1/e; d blocks push the miss below gamma0.
        """
        rate = -(self.m / self.delta) * math.log1p(-self.delta / self.m)
        d = max(1, math.ceil(math.log(1.0 / self.gamma0) / rate))
        while d > 1 and math.exp(-rate * (d - 1)) <= self.gamma0:
            d -= 1
        while math.exp(-rate * d) > self.gamma0:
            d += 1
        return d

    @property
    def init_draws(self) -> int:
        """Draws for the anchor-and-horizon batch: (m/delta) * d blocks."""
        return math.ceil(self.m / self.delta * self.tail_miss_rounds)

    def resolve(self, horizon: int) -> "ResolvedAdaptive":
        if horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        return ResolvedAdaptive(config=self, horizon=horizon)


@dataclass(frozen=True)
class ResolvedAdaptive:
    """Config plus every constant that needed the measured horizon."""

    config: AdaptiveConfig
    horizon: int

    @property
    def concentration_rate(self) -> float:
        """Chernoff rate for per-bucket counts: delta^3 / (32 m h)."""
        c = self.config
        return c.delta**3 / (32.0 * c.m * self.horizon)

    @cached_property
    def round0_draws(self) -> int:
        """Calibration round size: (8/beta) ln(e/(beta gamma0))."""
        beta = self.concentration_rate
        return math.ceil(8.0 / beta * math.log(math.e / (beta * self.config.gamma0)))

    @property
    def heavy_hit_threshold(self) -> float:
        """Single-job repeat count that makes a bucket exactly countable."""
        return 8.0 * self.concentration_rate * self.round0_draws

    @property
    def min_count(self) -> float:
        """Calibration-round sample floor for a bucket to qualify."""
        c = self.config
        return c.delta / (c.m * self.horizon) * self.round0_draws

    def grid_l(self, level: int) -> float:
        return (1.0 + self.config.delta) ** level

    def level_gamma(self, level: int) -> float:
        c = self.config
        return c.delta * c.gamma0 / (self.horizon * self.grid_l(level))

    def groups_required(self, level: int) -> int:
        """Groups needed to test one grid level: ceil(3e/delta^2 ln(1/gamma))."""
        c = self.config
        return math.ceil(
            3.0 * math.e / c.delta**2 * math.log(1.0 / self.level_gamma(level))
        )


def estimate_w0(sampler: SamplerIndex, config: AdaptiveConfig) -> float:
    """Weight anchor: largest time among init_draws weighted draws.

    Jobs above the anchor can exist but their total weight is small
    (a delta/m share per machine) with probability >= 1 - gamma0.
    """
    draws = sampler.sample_many(config.init_draws)
    return max(s.processing_time for s in draws)


def determine_h(buckets, config: AdaptiveConfig) -> int:
    """Bucket horizon: smallest h whose tail holds <= d/4 of the batch.

    buckets are the interval indices of the anchor batch's draws under the
    scheme anchored at w0.  Samples deeper than the horizon are rare enough
    to be discarded wholesale.
    """
    buckets = np.asarray(buckets)
    if buckets.size == 0:
        return 1
    allowed = config.tail_miss_rounds / 4.0
    counts = np.bincount(buckets)
    deeper = counts.sum() - np.cumsum(counts)
    for h in range(1, counts.size):
        if deeper[h] <= allowed:
            return h
    return max(1, counts.size - 1)


@dataclass(frozen=True)
class RoundState:
    """Progress of the doubling rounds.

    counts holds finished bucket estimates (exactly counted or marked);
    pending maps each unfinished bucket to its grid resume level, which
    never moves backwards.
    """

    scheme: IntervalScheme
    round_index: int
    counts: dict = field(default_factory=dict)
    pending: dict = field(default_factory=dict)
    draws_used: int = 0

    @property
    def done(self) -> bool:
        return not self.pending


def _bucket_streams(sampler: SamplerIndex, table: np.ndarray, wanted, total: int) -> dict:
    """Draw `total` samples, keeping only the index streams of wanted buckets."""
    streams = {k: [] for k in wanted}
    remaining = total
    while remaining > 0:
        step = min(_DRAW_CHUNK, remaining)
        idx = sampler.draw_indices(step)
        marks = table[idx]
        for k, parts in streams.items():
            hit = idx[marks == k]
            if hit.size:
                parts.append(hit.astype(np.int32))
        remaining -= step
    return {
        k: np.concatenate(parts) if parts else np.empty(0, dtype=np.int32)
        for k, parts in streams.items()
    }


def _largest_supported_level(samples: int, resolved: ResolvedAdaptive) -> int:
    """Largest grid level t with samples >= ceil(l_t) * u_t; 0 if none.

    The integer prefix length ceil(l_t) is what each group must actually
    hold, so it is what the support rule charges for.
    """
    t = 0
    level = 1
    while samples >= math.ceil(resolved.grid_l(level)) * resolved.groups_required(level):
        t = level
        level += 1
    return t


def adaptive_round(
    sampler: SamplerIndex, state: RoundState, resolved: ResolvedAdaptive
) -> RoundState:
    """Run one doubling round: fresh draws, then collision tests per bucket.

    For a pending bucket with X samples: find the largest supported grid
    level t, split the samples into u_t equal groups, and walk levels from
    the resume point to t.  A level is accepted when at most a 1/sqrt(e)
    share of its first u_i groups has a duplicate-free prefix of length
    ceil(l_i); acceptance marks the bucket with count round(l_i^2).  A round
    that accepts nothing advances the resume level to t.
    """
    if state.done:
        return state
    config = resolved.config
    draws = (1 << state.round_index) * resolved.round0_draws
    if config.max_draws is not None and state.draws_used + draws > config.max_draws:
        raise SamplingBudgetExceededError(
            f"round {state.round_index} needs {draws} draws; "
            f"{state.draws_used} already used of {config.max_draws}"
        )
    table = state.scheme.bucket_array(sampler.instance.processing_times).astype(np.int32)
    streams = _bucket_streams(sampler, table, state.pending, draws)

    counts = dict(state.counts)
    pending = {}
    for k, resume in state.pending.items():
        seq = streams[k]
        top = _largest_supported_level(seq.size, resolved)
        if top < 1:
            pending[k] = resume
            continue
        u_top = resolved.groups_required(top)
        group_len = seq.size // u_top
        matrix = seq[: u_top * group_len].reshape(u_top, group_len)
        prefix_ok = distinct_prefix_lens(matrix)
        marked = False
        for level in range(resume, top + 1):
            l_value = resolved.grid_l(level)
            need = math.ceil(l_value)
            u_level = resolved.groups_required(level)
            distinct_first = int(np.count_nonzero(prefix_ok[:u_level] >= need))
            if logger.isEnabledFor(logging.DEBUG):
                logger.debug(
                    "round %d bucket %d level %d: %d/%d distinct in tested "
                    "groups, %d/%d over the whole partition",
                    state.round_index,
                    k,
                    level,
                    distinct_first,
                    u_level,
                    int(np.count_nonzero(prefix_ok >= need)),
                    u_top,
                )
            if distinct_first <= u_level * _INV_SQRT_E:
                counts[k] = max(1, round(l_value * l_value))
                marked = True
                break
        if not marked:
            pending[k] = max(resume, top)
    return replace(
        state,
        round_index=state.round_index + 1,
        counts=counts,
        pending=pending,
        draws_used=state.draws_used + draws,
    )


def sketch_adaptive(sampler: SamplerIndex, config: AdaptiveConfig) -> SketchInstance:
    """Full pipeline: anchor batch, calibration round, doubling rounds.

    The calibration round both qualifies buckets (sample floor within the
    horizon) and settles the exactly-countable ones by distinct-job
    enumeration; the rest enter the doubling rounds at resume level 1.
    """
    init_idx = sampler.draw_indices(config.init_draws)
    init_times = sampler.instance.processing_times[init_idx]
    anchor = float(init_times.max())
    scheme = IntervalScheme(anchor, config.delta)
    horizon = determine_h(scheme.bucket_array(init_times), config)
    resolved = config.resolve(horizon)

    table = scheme.bucket_array(sampler.instance.processing_times).astype(np.int32)
    parts = []
    remaining = resolved.round0_draws
    while remaining > 0:
        step = min(_DRAW_CHUNK, remaining)
        parts.append(sampler.draw_indices(step).astype(np.int32))
        remaining -= step
    calib = np.concatenate(parts) if len(parts) > 1 else parts[0]
    tally = SampleTally(scheme, calib, table[calib])

    counts = {}
    pending = {}
    for k in tally.occupied():
        if k > horizon or tally.count(k) < resolved.min_count:
            continue
        if tally.max_hits(k) >= resolved.heavy_hit_threshold:
            counts[k] = tally.distinct(k)
        else:
            pending[k] = 1
    del calib, tally

    state = RoundState(
        scheme=scheme,
        round_index=1,
        counts=counts,
        pending=pending,
        draws_used=config.init_draws + resolved.round0_draws,
    )
    while not state.done:
        state = adaptive_round(sampler, state, resolved)
    return SketchInstance.from_counts(scheme, state.counts)
