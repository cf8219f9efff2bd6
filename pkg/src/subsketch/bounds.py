"""Closed-form bounds on collision probabilities under weighted sampling.

These formulas justify the thresholds used by the count estimators and act
as oracles for the Monte Carlo validation suites.  Probabilities concern k
draws, with replacement, from n jobs whose weights all lie within a factor
(1+delta) of each other.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError


def pr_all_distinct_product_bounds(weights, k: int) -> tuple[float, float]:
    """Exact product-form lower/upper bounds for arbitrary weights.

    After j successful draws the mass already covered is at least the j
    lightest weights and at most the j heaviest, which brackets the chance
    that draw j+1 is fresh.
    """
    w = np.sort(np.asarray(weights, dtype=np.float64))
    if w.size == 0 or w.min() <= 0:
        raise ConfigurationError("weights must be positive and nonempty")
    if k <= 1:
        return (1.0, 1.0)
    if k > w.size:
        return (0.0, 0.0)
    total = w.sum()
    light = np.cumsum(w)[: k - 1]
    heavy = np.cumsum(w[::-1])[: k - 1]
    lower = float(np.prod(np.clip(1.0 - heavy / total, 0.0, None)))
    upper = float(np.prod(1.0 - light / total))
    return (lower, upper)


def pr_all_distinct_lower(n: float, k: float, delta: float) -> float:
    """Lower bound when weights are within a factor (1+delta)."""
    if n <= 0 or k < 0:
        raise ConfigurationError("need n > 0 and k >= 0")
    a = (1.0 + delta) * k * k / (2.0 * n)
    b = 2.0 * (1.0 + delta) ** 2 * k**3 / (3.0 * n * n)
    return math.exp(-(a + b))


def pr_all_distinct_upper(n: float, k: float, delta: float) -> float:
    """Upper bound when weights are within a factor (1+delta).

    Valid for k < n / (2*(1+delta)); outside that range the bound statement
    does not apply and this raises.
    """
    if n <= 0 or k < 0:
        raise ConfigurationError("need n > 0 and k >= 0")
    if k >= n / (2.0 * (1.0 + delta)):
        raise ConfigurationError("upper bound requires k < n / (2*(1+delta))")
    return math.exp(-(k - 1.0) * k / (2.0 * n * (1.0 + delta)))


def adaptive_tail_bound(beta: float, k: float) -> float:
    """(1/beta) * exp(-beta*k/8), the miss-probability envelope that sizes
    the adaptive round-zero budget.

    Decreasing in both arguments, with equality to gamma0/e exactly at the
    corner (beta0, K0) by construction of K0.
    """
    if beta <= 0:
        raise ConfigurationError("beta must be positive")
    return (1.0 / beta) * math.exp(-beta * k / 8.0)
