"""Sketch construction when the number of jobs is known in advance.

The pipeline draws a fixed budget of weighted samples, buckets them on a
geometric time grid anchored at an upper estimate of the largest job, and
turns the per-bucket sample streams into count estimates.  Buckets whose
sample share clears a floor are kept; of those, buckets where some single job
repeats heavily are counted exactly by distinct-job enumeration, and the rest
are sized by a birthday-collision scan over fixed-size sample groups.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, InsufficientSamplesError
from .model import C_EXPONENT, Instance, IntervalScheme, SketchInstance
from .sampler import SamplerIndex
from .scheduling import exact_sketch

_INV_SQRT_E = 1.0 / math.sqrt(math.e)

# Draws are buffered in slabs of this many indices to bound peak memory.
_DRAW_CHUNK = 1 << 22


def _warn_if_coarse(delta: float) -> None:
    if 4 * C_EXPONENT * delta > 1.0:
        warnings.warn(
            "delta exceeds 1/(4c); the count-envelope guarantees no longer "
            "apply at this resolution",
            stacklevel=3,
        )


@dataclass(frozen=True)
class KnownNConfig:
    """Budgets and thresholds for a known-n sketching run."""

    n: int
    m: int
    delta: float
    gamma0: float = 1.0 / 12.0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if self.m < 1:
            raise ConfigurationError("m must be >= 1")
        if not (0.0 < self.delta < 0.5):
            raise ConfigurationError("delta must lie in (0, 1/2)")
        if not (0.0 < self.gamma0 <= 1.0 / 12.0):
            raise ConfigurationError("gamma0 must lie in (0, 1/12]")
        _warn_if_coarse(self.delta)

    @property
    def needs_fallback(self) -> bool:
        """Small instances fall back to the exact histogram path."""
        return self.n < 1.0 / self.delta**2

    @property
    def anchor_draws(self) -> int:
        """Draws spent estimating the largest time: ceil(log2(1/gamma0))."""
        return math.ceil(math.log2(1.0 / self.gamma0))

    @property
    def horizon(self) -> float:
        """Deepest bucket index the sketch will keep: (1/delta)*ln(n^2/delta)."""
        return (1.0 / self.delta) * math.log(self.n**2 / self.delta)

    @property
    def scan_span(self) -> float:
        """Ceiling of the birthday scan grid: 3*sqrt(n)."""
        return 3.0 * math.sqrt(self.n)

    @property
    def group_len(self) -> int:
        """Sample group length; prefixes up to ceil(scan_span) must fit."""
        return math.ceil(self.scan_span)

    @property
    def total_draws(self) -> int:
        """Main sampling budget: (36*m/delta^4) * sqrt(n) * tau."""
        h = self.horizon
        grid_points = math.log(self.scan_span) / math.log1p(self.delta)
        tau = self.delta * h * math.log(16.0 * h * grid_points / self.gamma0)
        return math.ceil(36.0 * self.m / self.delta**4 * math.sqrt(self.n) * tau)

    @property
    def min_share(self) -> float:
        """Per-bucket sample share floor: delta/(m*h) of all draws."""
        return self.delta / (self.m * self.horizon)

    @property
    def heavy_hit_threshold(self) -> float:
        """Repeat count that flags a bucket as exactly countable: 36*ln(2n/gamma0)."""
        return 36.0 * math.log(2.0 * self.n / self.gamma0)


class SampleTally:
    """Bucketed view of a draw sequence.

    Keeps, per bucket: the number of samples, the ordered job-index
    subsequence, the distinct-job count and the heaviest single-job repeat
    count.  Bucket 0 collects samples whose time exceeded the scheme anchor;
    they stay visible in the totals but never feed an estimate.
    """

    def __init__(self, scheme: IntervalScheme, indices: np.ndarray, buckets: np.ndarray):
        indices = np.asarray(indices)
        buckets = np.asarray(buckets)
        if indices.shape != buckets.shape or indices.ndim != 1:
            raise ConfigurationError("indices and buckets must be equal-length 1d")
        self.scheme = scheme
        self._indices = indices
        self._buckets = buckets

    @classmethod
    def from_draws(cls, scheme: IntervalScheme, instance: Instance, indices) -> "SampleTally":
        indices = np.asarray(indices)
        table = scheme.bucket_array(instance.processing_times)
        return cls(scheme, indices, table[indices])

    @classmethod
    def from_samples(cls, scheme: IntervalScheme, samples) -> "SampleTally":
        indices = np.array([s.job_index for s in samples], dtype=np.int64)
        times = np.array([s.processing_time for s in samples], dtype=np.float64)
        buckets = (
            scheme.bucket_array(times) if times.size else np.zeros(0, dtype=np.int64)
        )
        return cls(scheme, indices, buckets)

    @property
    def total(self) -> int:
        return int(self._indices.size)

    @cached_property
    def bucket_counts(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros(1, dtype=np.int64)
        return np.bincount(self._buckets)

    def count(self, bucket: int) -> int:
        counts = self.bucket_counts
        return int(counts[bucket]) if 0 <= bucket < counts.size else 0

    def occupied(self) -> list[int]:
        """Buckets >= 1 holding at least one sample, ascending."""
        return [int(k) for k in np.flatnonzero(self.bucket_counts) if k >= 1]

    def sequence(self, bucket: int) -> np.ndarray:
        """Job indices of this bucket's samples, in draw order."""
        return self._indices[self._buckets == bucket]

    def distinct(self, bucket: int) -> int:
        return int(np.unique(self.sequence(bucket)).size)

    def max_hits(self, bucket: int) -> int:
        seq = self.sequence(bucket)
        if seq.size == 0:
            return 0
        return int(np.bincount(seq).max())

    def job_hit_counts(self) -> dict[int, int]:
        """Occurrence count per sampled job, across all buckets."""
        values, counts = np.unique(self._indices, return_counts=True)
        return {int(j): int(c) for j, c in zip(values, counts)}


def estimate_pmax_upper(sampler: SamplerIndex, config: KnownNConfig) -> float:
    """Upper estimate of the largest processing time: 2n times the largest
    of a handful of weighted draws.

    The factor 2n covers the worst case where the largest job was missed
    because everything else outweighs it; failure probability is at most
    gamma0 by the draw count.
    """
    draws = sampler.sample_many(config.anchor_draws)
    return 2.0 * config.n * max(s.processing_time for s in draws)


def classify_intervals(tally: SampleTally, config: KnownNConfig) -> tuple[set, set]:
    """Split qualifying buckets into exactly-countable and scan-estimated.

    A bucket qualifies when its index is within the horizon and its sample
    count reaches the per-bucket share floor (measured against the tally's
    own draw count).  Qualifying buckets where some job repeats at least the
    heavy-hit threshold can be counted by distinct enumeration; the rest go
    to the birthday scan.
    """
    floor = config.min_share * tally.total
    heavy = set()
    scan = set()
    for k in tally.occupied():
        if k > config.horizon or tally.count(k) < floor:
            continue
        if tally.max_hits(k) >= config.heavy_hit_threshold:
            heavy.add(k)
        else:
            scan.add(k)
    return heavy, scan


def count_h1(tally: SampleTally, bucket: int) -> int:
    """Exact count of a heavily-sampled bucket: its distinct sampled jobs."""
    return tally.distinct(bucket)


def distinct_prefix_len(seq) -> int:
    """Length of the longest duplicate-free prefix of one group."""
    seen = set()
    for i, v in enumerate(seq):
        if v in seen:
            return i
        seen.add(v)
    return len(seq)


def distinct_prefix_lens(groups: np.ndarray) -> np.ndarray:
    """Vectorized distinct_prefix_len over the rows of a (u, L) matrix.

    A stable value sort puts equal samples next to each other; the earliest
    second occurrence of any value caps the duplicate-free prefix.
    """
    u, width = groups.shape
    if width <= 1:
        return np.full(u, width, dtype=np.int64)
    order = np.argsort(groups, axis=1, kind="stable")
    ranked = np.take_along_axis(groups, order, axis=1)
    duped = ranked[:, 1:] == ranked[:, :-1]
    second = np.maximum(order[:, 1:], order[:, :-1])
    second = np.where(duped, second, width)
    return second.min(axis=1)


@dataclass(frozen=True)
class BirthdayResult:
    count: int
    grid_value: float
    saturated: bool


def birthday_scan(samples, config: KnownNConfig) -> BirthdayResult:
    """Estimate a bucket's job count from collisions in sample groups.

    The sequence is cut into groups of group_len (trailing partial group
    dropped).  Scanning prefix lengths up the geometric grid
    l = 1, (1+delta), ..., the first l at which at most a 1/sqrt(e) share of
    groups is still duplicate-free pins the count at l^2: collisions take
    hold around sqrt of the population size.  If even full groups collide
    nowhere (count far above the scan span squared) the ceiling estimate
    9n is returned, flagged saturated.
    """
    samples = np.asarray(samples)
    groups = samples.size // config.group_len
    if groups == 0:
        raise InsufficientSamplesError(
            f"need at least {config.group_len} samples, got {samples.size}"
        )
    matrix = samples[: groups * config.group_len].reshape(groups, config.group_len)
    prefix_ok = np.sort(distinct_prefix_lens(matrix))
    cutoff = groups * _INV_SQRT_E
    grid = 1.0
    while grid <= config.scan_span * (1.0 + 1e-12):
        need = math.ceil(grid)
        still_distinct = groups - int(np.searchsorted(prefix_ok, need, side="left"))
        if still_distinct <= cutoff:
            return BirthdayResult(max(1, round(grid * grid)), grid, False)
        grid *= 1.0 + config.delta
    span = config.scan_span
    return BirthdayResult(max(1, round(span * span)), span, True)


def birthday_estimate(samples, config: KnownNConfig) -> int:
    """Positive integer count estimate; see birthday_scan for the mechanics."""
    return birthday_scan(samples, config).count


def sketch_known_n(sampler: SamplerIndex, config: KnownNConfig) -> SketchInstance:
    """Build a sketch of the sampler's instance from weighted draws alone.

    Total draws are exactly anchor_draws + total_draws.  Instances too small
    for the collision machinery (n below 1/delta^2) are histogrammed exactly
    instead, spending no draws.
    """
    if sampler.n != config.n:
        raise ConfigurationError("config.n does not match the sampler's instance")
    if config.needs_fallback:
        return exact_sketch(sampler.instance, config.delta)

    anchor = estimate_pmax_upper(sampler, config)
    scheme = IntervalScheme(anchor, config.delta)
    table = scheme.bucket_array(sampler.instance.processing_times).astype(np.int32)

    budget = config.total_draws
    chunks = []
    drawn = 0
    while drawn < budget:
        step = min(_DRAW_CHUNK, budget - drawn)
        chunks.append(sampler.draw_indices(step).astype(np.int32))
        drawn += step
    indices = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
    del chunks
    tally = SampleTally(scheme, indices, table[indices])

    heavy, scan = classify_intervals(tally, config)
    counts = {}
    saturated = set()
    for k in sorted(heavy):
        counts[k] = count_h1(tally, k)
    for k in sorted(scan):
        try:
            result = birthday_scan(tally.sequence(k), config)
        except InsufficientSamplesError:
            warnings.warn(
                f"bucket {k} cleared the share floor with fewer samples than "
                "one scan group; dropping it",
                stacklevel=2,
            )
            continue
        counts[k] = result.count
        if result.saturated:
            saturated.add(k)
    return SketchInstance.from_counts(scheme, counts, saturated)
