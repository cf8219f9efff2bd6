"""Synthetic instance families for experiments and validation suites.

Every family is driven by a counter-based RNG seeded explicitly, so a
(family, n, params, seed) tuple always regenerates the same instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .model import Instance


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def uniform(n: int, seed: int = 0, low: float = 0.5, high: float = 1.5) -> Instance:
    """Processing times uniform on [low, high]."""
    if not (0.0 < low <= high):
        raise ConfigurationError("need 0 < low <= high")
    return Instance(_rng(seed).uniform(low, high, size=n))


def two_point(
    n: int,
    seed: int = 0,
    low: float = 1.0,
    high: float = 100.0,
    high_fraction: float = 0.5,
) -> Instance:
    """Two distinct times, a high_fraction share at the high value.

    The split is exact (round(n * high_fraction) high jobs), which keeps the
    optimum computable by hand; the seed only shuffles the order.
    """
    if not (0.0 < low < high):
        raise ConfigurationError("need 0 < low < high")
    if not (0.0 < high_fraction < 1.0):
        raise ConfigurationError("high_fraction must lie in (0, 1)")
    n_high = round(n * high_fraction)
    if not (0 < n_high < n):
        raise ConfigurationError("high_fraction leaves one side empty")
    times = np.full(n, low)
    times[:n_high] = high
    _rng(seed).shuffle(times)
    return Instance(times)


def two_point_exact_opt(
    n: int, m: int, low: float = 1.0, high: float = 100.0, high_fraction: float = 0.5
) -> float:
    """Optimal makespan of the two_point family, by direct pairing.

    When both job classes split evenly over the machines every load equals
    the average, which is a universal lower bound.  The general case is not
    needed by the suites, so it is rejected rather than approximated.
    """
    n_high = round(n * high_fraction)
    n_low = n - n_high
    if n_high % m or n_low % m:
        raise ConfigurationError("class sizes must divide m for the closed form")
    return (n_high * high + n_low * low) / m


def log_uniform(n: int, seed: int = 0, low: float = 1.0, high: float = 1000.0) -> Instance:
    """Times whose logarithms are uniform on [ln low, ln high]."""
    if not (0.0 < low < high):
        raise ConfigurationError("need 0 < low < high")
    u = _rng(seed).uniform(math.log(low), math.log(high), size=n)
    return Instance(np.exp(u))


def one_giant(n: int, seed: int = 0, small: float = 1.0, giant: float | None = None) -> Instance:
    """n - 1 equal small jobs plus a single giant one.

    The giant defaults to n * small, so it carries about half the total
    weight and dominates the optimum on few machines.
    """
    if n < 2:
        raise ConfigurationError("need n >= 2 for a giant plus the rest")
    if small <= 0.0:
        raise ConfigurationError("small must be positive")
    giant = float(n) * small if giant is None else giant
    if giant <= small:
        raise ConfigurationError("giant must exceed small")
    times = np.full(n, small)
    times[0] = giant
    _rng(seed).shuffle(times)
    return Instance(times)


def geometric(n: int, seed: int = 0, ratio: float = 0.5, levels: int = 10) -> Instance:
    """Times from a geometric ladder ratio^0 .. ratio^(levels-1), uniform level."""
    if not (0.0 < ratio < 1.0):
        raise ConfigurationError("ratio must lie in (0, 1)")
    levels = int(levels)
    if levels < 1:
        raise ConfigurationError("levels must be >= 1")
    draws = _rng(seed).integers(0, levels, size=n)
    return Instance(ratio**draws.astype(np.float64))


_FAMILIES = {
    "uniform": uniform,
    "two_point": two_point,
    "log_uniform": log_uniform,
    "one_giant": one_giant,
    "geometric": geometric,
}


@dataclass(frozen=True)
class GeneratorSpec:
    """A reproducible recipe: family name, size, parameters, seed."""

    family: str
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            known = ", ".join(sorted(_FAMILIES))
            raise ConfigurationError(f"unknown family {self.family!r} (have: {known})")
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")


def make_instance(spec: GeneratorSpec) -> Instance:
    return _FAMILIES[spec.family](spec.n, seed=spec.seed, **spec.params)


def parse_generator_spec(text: str, seed: int = 0) -> GeneratorSpec:
    """Parse 'family:n' or 'family:n:key=value,key=value' from the CLI."""
    parts = text.split(":", 2)
    if len(parts) < 2:
        raise ConfigurationError("generator spec must look like family:n[:k=v,...]")
    family, n_text = parts[0], parts[1]
    try:
        n = int(n_text)
    except ValueError as exc:
        raise ConfigurationError(f"bad generator size {n_text!r}") from exc
    params = {}
    if len(parts) == 3 and parts[2]:
        for item in parts[2].split(","):
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise ConfigurationError(f"bad generator parameter {item!r}")
            try:
                params[key] = float(value)
            except ValueError as exc:
                raise ConfigurationError(f"bad generator parameter {item!r}") from exc
    return GeneratorSpec(family=family, n=n, seed=seed, params=params)
