"""Weighted random sampling of jobs, O(log n) per draw.

The index is a perfectly balanced binary sum tree over the job weights
(processing times), padded with zero-weight leaves to a power of two.  A draw
walks from the root choosing a child by comparing a fresh uniform variate
against the cumulative weight bracket of the children; a variate landing on a
bracket boundary goes left, toward the lower job index.  Zero-weight padding
subtrees are never entered.

``sample_one`` implements that walk literally and counts the nodes it
touches.  ``draw_indices`` is the bulk path: it resolves each draw with a
single uniform searched against the leaf-level cumulative brackets, which is
the same bracket rule evaluated by binary search and gives the identical
per-draw law (each job with probability weight/total).  Both paths share the
draw counter; nothing samples outside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .model import Instance


@dataclass(frozen=True)
class Sample:
    job_index: int
    processing_time: float


class SamplerIndex:
    """Sampling oracle over one instance with its own private RNG stream."""

    def __init__(self, instance: Instance, seed: int = 0):
        if instance.n < 1:
            raise ConfigurationError("cannot build a sampler over zero jobs")
        times = instance.processing_times
        depth = (instance.n - 1).bit_length()
        leaf_base = 1 << depth
        tree = np.zeros(2 * leaf_base, dtype=np.float64)
        tree[leaf_base : leaf_base + instance.n] = times
        width = leaf_base
        while width > 1:
            width //= 2
            child = tree[2 * width : 4 * width]
            tree[width : 2 * width] = child[0::2] + child[1::2]
        self.instance = instance
        self._tree = tree
        self._leaf_base = leaf_base
        self._depth = depth
        self._brackets = np.cumsum(times)
        self._rng = np.random.Generator(np.random.Philox(seed))
        self._draws = 0
        self.last_draw_node_visits = 0

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def root_weight(self) -> float:
        return float(self._tree[1])

    @property
    def height(self) -> int:
        """Nodes on a root-to-leaf path; 1 for a single-job tree."""
        return self._depth + 1

    def draws_used(self) -> int:
        return self._draws

    def verify_tree(self, rtol: float = 1e-9) -> None:
        """Audit every internal node against the sum of its children."""
        tree = self._tree
        for node in range(1, self._leaf_base):
            expected = tree[2 * node] + tree[2 * node + 1]
            if abs(tree[node] - expected) > rtol * max(1.0, abs(expected)):
                raise AssertionError(f"node {node} weight drifted from children")
        direct = float(self.instance.processing_times.sum())
        if abs(self.root_weight - direct) > rtol * direct:
            raise AssertionError("root weight drifted from the direct sum")

    def sample_one(self) -> Sample:
        """Draw one job; probability of job j is weight_j / total."""
        tree = self._tree
        node = 1
        visits = 1
        while node < self._leaf_base:
            left = tree[2 * node]
            right = tree[2 * node + 1]
            if right == 0.0:
                go_left = True
            elif left == 0.0:
                go_left = False
            else:
                # Bracket rule: r in (0, left/parent] selects the left child.
                # The boundary itself (and anything within rounding of it)
                # resolves left.
                go_left = self._rng.random() * tree[node] <= left
            node = 2 * node if go_left else 2 * node + 1
            visits += 1
        self._draws += 1
        self.last_draw_node_visits = visits
        job = node - self._leaf_base
        return Sample(job, float(self.instance.processing_times[job]))

    def draw_indices(self, k: int) -> np.ndarray:
        """k independent draws as an array of job indices."""
        if k < 1:
            raise ConfigurationError("draw count must be >= 1")
        total = self._brackets[-1]
        r = self._rng.random(k)
        idx = np.searchsorted(self._brackets, r * total, side="left")
        np.minimum(idx, self.n - 1, out=idx)
        self._draws += k
        return idx

    def sample_many(self, k: int) -> list[Sample]:
        """k independent draws, with replacement, as Sample records."""
        idx = self.draw_indices(k)
        times = self.instance.processing_times
        return [Sample(int(j), float(times[j])) for j in idx]
