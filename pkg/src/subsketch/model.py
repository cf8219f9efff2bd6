"""Core data model: job instances, geometric time buckets, sketches, schedules.

A sketch compresses a scheduling instance into a short list of
(count, representative time) pairs.  Representative times sit on a geometric
grid anchored at (an estimate of) the largest processing time: bucket k covers
the half-open range (anchor*(1-delta)^k, anchor*(1-delta)^(k-1)], so bucket 1
holds the largest jobs and the grid refines downward by a factor (1-delta) per
step.  Everything downstream (sampling tallies, estimators, the scheduler)
speaks in terms of these bucket indices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InstanceFormatError, QualityViolation

# Exponent of the accuracy grid used by the count estimators.  Estimated
# counts are guaranteed (statistically) to land within (1+delta)^(2c+2) of the
# truth; c is frozen here and the configs assert c <= 1/(4*delta) holds.
C_EXPONENT = 4

# Relative tolerance for boundary comparisons on the log-time axis.  Bucket
# boundaries are irrational, so membership tests must absorb the rounding
# noise of exp/log round trips; anything this close to a boundary is treated
# as sitting exactly on it (and closed-right semantics make it the bucket
# representative of the deeper bucket).
_BOUNDARY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class Instance:
    """An immutable multiset of positive job processing times."""

    processing_times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.processing_times, dtype=np.float64)
        if times.ndim != 1:
            raise ConfigurationError("processing times must be a flat sequence")
        if times.size and (not np.all(np.isfinite(times)) or not np.all(times > 0)):
            raise ConfigurationError("processing times must be finite and positive")
        times = times.copy()
        times.setflags(write=False)
        object.__setattr__(self, "processing_times", times)

    @property
    def n(self) -> int:
        return int(self.processing_times.size)

    @property
    def total(self) -> float:
        return float(self.processing_times.sum())

    @property
    def max_time(self) -> float:
        if self.n == 0:
            raise ConfigurationError("empty instance has no maximum time")
        return float(self.processing_times.max())


def load_instance(path) -> Instance:
    """Read an instance file, auto-detecting its format from the first byte.

    A leading ``[`` means a JSON array of numbers; anything else is parsed as
    text with one positive decimal per line.
    """
    raw = Path(path).read_bytes()
    stripped = raw.lstrip()
    if stripped[:1] == b"[":
        try:
            values = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise InstanceFormatError(f"invalid JSON instance: {exc}") from None
        if not isinstance(values, list) or not all(
            isinstance(v, (int, float)) for v in values
        ):
            raise InstanceFormatError("JSON instance must be a flat array of numbers")
        times = values
    else:
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InstanceFormatError(f"instance file is not UTF-8: {exc}") from None
        times = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                value = float(line)
            except ValueError:
                raise InstanceFormatError(
                    f"expected one decimal, got {line!r}", line=lineno
                ) from None
            if not math.isfinite(value) or value <= 0:
                raise InstanceFormatError(
                    f"processing time must be finite and positive, got {line!r}",
                    line=lineno,
                )
            times.append(value)
    try:
        return Instance(np.asarray(times, dtype=np.float64))
    except ConfigurationError as exc:
        raise InstanceFormatError(str(exc)) from None


def save_instance(instance: Instance, path) -> None:
    """Write an instance in the one-decimal-per-line text format."""
    with open(path, "w", encoding="utf-8") as fh:
        for value in instance.processing_times:
            fh.write(f"{float(value)!r}\n")


@dataclass(frozen=True)
class IntervalScheme:
    """Geometric time buckets below a fixed anchor.

    Bucket k covers (anchor*(1-delta)^k, anchor*(1-delta)^(k-1)].  The right
    endpoint is closed, so a time sitting exactly on a boundary lands in the
    bucket whose representative it is.  Boundaries are evaluated in log
    space, where the grid is an exact arithmetic progression.
    """

    anchor: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.anchor) and self.anchor > 0):
            raise ConfigurationError("anchor must be finite and positive")
        if not (0.0 < self.delta < 0.5):
            raise ConfigurationError("delta must lie in (0, 1/2)")

    @property
    def _log_anchor(self) -> float:
        return math.log(self.anchor)

    @property
    def _log_step(self) -> float:
        # log(1 - delta), negative
        return math.log1p(-self.delta)

    def rep_time(self, bucket: int) -> float:
        """Representative time of a bucket: its closed upper boundary.

        Factoring the anchor out of the exponential keeps bucket 1's
        representative exactly equal to the anchor.
        """
        if bucket < 1:
            raise ConfigurationError("bucket indices start at 1")
        return self.anchor * math.exp((bucket - 1) * self._log_step)

    def bucket(self, time: float) -> int:
        """Bucket index for a time, or 0 when the time exceeds the anchor.

        Times above the anchor carry no bucket; they are flagged with 0 so
        tallies can drop them explicitly.
        """
        if not (math.isfinite(time) and time > 0):
            raise ConfigurationError("time must be finite and positive")
        x = (math.log(time) - self._log_anchor) / self._log_step
        nearest = round(x)
        if abs(x - nearest) <= _BOUNDARY_RTOL * max(1.0, abs(nearest)):
            x = nearest
        k = math.floor(x) + 1
        return k if k >= 1 else 0

    def interval_index(self, time: float) -> int:
        """Like bucket(), but times outside (0, anchor] are an error."""
        k = self.bucket(time)
        if k < 1:
            raise ConfigurationError(
                f"time {time!r} exceeds the scheme anchor {self.anchor!r}"
            )
        return k

    def bucket_array(self, times: np.ndarray) -> np.ndarray:
        """Vectorized bucket() over an array of positive times."""
        times = np.asarray(times, dtype=np.float64)
        x = (np.log(times) - self._log_anchor) / self._log_step
        nearest = np.rint(x)
        snap = np.abs(x - nearest) <= _BOUNDARY_RTOL * np.maximum(1.0, np.abs(nearest))
        x = np.where(snap, nearest, x)
        k = np.floor(x).astype(np.int64) + 1
        return np.maximum(k, 0)


@dataclass(frozen=True)
class SketchEntry:
    """One populated bucket of a sketch: an estimated count at a grid time.

    ``saturated`` marks counts produced by the collision estimator's ceiling
    fallback; they are upper-envelope guesses rather than measurements.
    """

    bucket: int
    count: int
    time: float
    saturated: bool = False

    def __post_init__(self):
        if self.bucket < 1:
            raise ConfigurationError("entry bucket must be >= 1")
        if self.count < 1:
            raise ConfigurationError("entry count must be >= 1")


@dataclass(frozen=True)
class SketchInstance:
    """A compressed instance: per-bucket counts on a geometric time grid."""

    scheme: IntervalScheme
    entries: tuple[SketchEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        buckets = [e.bucket for e in self.entries]
        if any(b >= c for b, c in zip(buckets, buckets[1:])):
            raise ConfigurationError(
                "entries must be sorted by bucket with no duplicates"
            )
        for e in self.entries:
            expected = self.scheme.rep_time(e.bucket)
            if e.time != expected:
                raise ConfigurationError(
                    f"entry time {e.time!r} does not sit on the grid point "
                    f"{expected!r} for bucket {e.bucket}"
                )

    @classmethod
    def from_counts(cls, scheme, counts, saturated=()):
        """Build from a {bucket: count} mapping, dropping zero counts."""
        entries = tuple(
            SketchEntry(k, int(c), scheme.rep_time(k), saturated=k in saturated)
            for k, c in sorted(counts.items())
            if c > 0
        )
        return cls(scheme, entries)

    @property
    def job_count(self) -> int:
        return sum(e.count for e in self.entries)

    @property
    def total_time(self) -> float:
        return float(sum(e.count * e.time for e in self.entries))

    @property
    def max_time(self) -> float:
        if not self.entries:
            raise ConfigurationError("empty sketch has no maximum time")
        return self.entries[0].time

    def counts_by_bucket(self) -> dict[int, int]:
        return {e.bucket: e.count for e in self.entries}

    def jobs(self) -> np.ndarray:
        """Expand to explicit job times, largest first.

        Intended for small sketches (oracles and tests); the expansion is
        linear in the total count.
        """
        return np.repeat(
            np.array([e.time for e in self.entries], dtype=np.float64),
            np.array([e.count for e in self.entries], dtype=np.int64),
        )

    def largest_jobs(self, count: int) -> np.ndarray:
        """The ``count`` largest job times, expanded from the top buckets."""
        out = []
        remaining = count
        for e in self.entries:
            if remaining <= 0:
                break
            take = min(e.count, remaining)
            out.extend([e.time] * take)
            remaining -= take
        return np.asarray(out, dtype=np.float64)


@dataclass(frozen=True)
class SketchQuality:
    """Accuracy triple of a sketch relative to the instance it compresses.

    alpha bounds the relative count error of every populated bucket, beta1
    the relative shift of the optimal makespan, and beta2 the total time
    mass the sketch dropped, as a fraction of the optimal makespan.  All
    three must lie in [0, 1) for the expansion bound to be meaningful.
    """

    alpha: float
    beta1: float
    beta2: float

    def __post_init__(self):
        for name in ("alpha", "beta1", "beta2"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ConfigurationError(f"{name} must lie in [0, 1), got {v!r}")


@dataclass(frozen=True, eq=False)
class SketchSchedule:
    """An assignment of sketch counts to machines.

    ``counts[i][e]`` is the number of jobs from ``sketch.entries[e]`` placed
    on machine i.  Column sums must reproduce the sketch counts exactly.
    """

    sketch: SketchInstance
    machines: int
    counts: np.ndarray

    def __post_init__(self):
        if self.machines < 1:
            raise ConfigurationError("need at least one machine")
        counts = np.asarray(self.counts, dtype=np.int64)
        expected = (self.machines, len(self.sketch.entries))
        if counts.shape != expected:
            raise ConfigurationError(
                f"counts must have shape {expected}, got {counts.shape}"
            )
        if counts.size and counts.min() < 0:
            raise ConfigurationError("counts must be nonnegative")
        sketch_counts = np.array([e.count for e in self.sketch.entries])
        if not np.array_equal(counts.sum(axis=0), sketch_counts):
            raise ConfigurationError("column sums must equal the sketch counts")
        counts = counts.copy()
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    def count_for(self, machine: int, bucket: int) -> int:
        for e, entry in enumerate(self.sketch.entries):
            if entry.bucket == bucket:
                return int(self.counts[machine, e])
        return 0

    def loads(self) -> np.ndarray:
        times = np.array([e.time for e in self.sketch.entries], dtype=np.float64)
        if times.size == 0:
            return np.zeros(self.machines)
        return self.counts @ times

    def makespan(self) -> float:
        loads = self.loads()
        return float(loads.max()) if loads.size else 0.0


@dataclass(frozen=True, eq=False)
class ConcreteSchedule:
    """A full job-to-machine assignment for a concrete instance."""

    machines: int
    assignment: np.ndarray
    makespan: float
    # Guaranteed makespan ceiling as a multiple of the true optimum, when
    # the expansion was given a measured sketch quality.
    bound_vs_opt: float | None = None

    def __post_init__(self):
        assignment = np.asarray(self.assignment, dtype=np.int64)
        if assignment.size and (
            assignment.min() < 0 or assignment.max() >= self.machines
        ):
            raise ConfigurationError("machine indices must lie in [0, machines)")
        assignment = assignment.copy()
        assignment.setflags(write=False)
        object.__setattr__(self, "assignment", assignment)

    def loads(self, instance: Instance) -> np.ndarray:
        if instance.n != self.assignment.size:
            raise ConfigurationError("schedule and instance sizes differ")
        loads = np.zeros(self.machines)
        np.add.at(loads, self.assignment, instance.processing_times)
        return loads


@dataclass(frozen=True)
class Params:
    """Top-level accuracy parameters and the constants derived from them.

    The sketching stage and the scheduling stage run at different grid
    resolutions: ``delta`` is the sketch resolution that makes the full
    pipeline a (1+epsilon) approximation, while ``meta_delta`` is the coarser
    resolution the scheduler itself needs.  They are kept separate on
    purpose; conflating them silently changes the guarantee.
    """

    m: int
    epsilon: float
    gamma0: float = 1.0 / 12.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ConfigurationError("m must be a positive integer")
        object.__setattr__(self, "m", int(self.m))
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigurationError("epsilon must lie in (0, 1)")
        if not (0.0 < self.gamma0 <= 1.0 / 12.0):
            raise ConfigurationError("gamma0 must lie in (0, 1/12]")
        if 4 * C_EXPONENT * self.delta > 1.0 + 1e-12:
            raise ConfigurationError("sketch resolution too coarse for the grid")

    @property
    def c(self) -> int:
        return C_EXPONENT

    @property
    def delta(self) -> float:
        return self.epsilon / (12 * C_EXPONENT * self.m)

    @property
    def meta_delta(self) -> float:
        return self.epsilon / 3.0

    @property
    def h_meta(self) -> int:
        return math.ceil(self.m / self.meta_delta)


def validate_sketch_quality(
    instance: Instance, sketch: SketchInstance, m: int, exact_opt: float
) -> SketchQuality:
    """Measure the smallest quality triple a sketch satisfies.

    ``exact_opt`` must be the true optimal makespan of ``instance`` on m
    machines, computed by an exact oracle; this is a test-scale operation
    because it also solves the expanded sketch exactly.  Raises
    QualityViolation when any component of the measured triple falls outside
    [0, 1).
    """
    from .scheduling import exact_opt as solve_exact

    if exact_opt <= 0:
        raise ConfigurationError("exact_opt must be positive")
    job_buckets = sketch.scheme.bucket_array(instance.processing_times)

    alpha = 0.0
    covered = set()
    for entry in sketch.entries:
        covered.add(entry.bucket)
        true_count = int(np.count_nonzero(job_buckets == entry.bucket))
        if true_count == 0:
            # A populated sketch bucket with no real jobs admits no finite
            # count-error bound.
            raise QualityViolation(math.inf, 0.0, 0.0)
        alpha = max(alpha, abs(entry.count - true_count) / true_count)

    if sketch.entries:
        sketch_opt = solve_exact(sketch.jobs(), m)
        ratio = sketch_opt / exact_opt
        beta1 = max(ratio - 1.0, 1.0 - ratio, 0.0)
    else:
        beta1 = 1.0 if instance.n else 0.0

    keep = np.isin(job_buckets, sorted(covered)) if covered else np.zeros(
        instance.n, dtype=bool
    )
    discarded = float(instance.processing_times[~keep].sum()) if instance.n else 0.0
    beta2 = discarded / exact_opt

    if not (alpha < 1.0 and beta1 < 1.0 and beta2 < 1.0):
        raise QualityViolation(alpha, beta1, beta2)
    return SketchQuality(alpha=alpha, beta1=beta1, beta2=beta2)
