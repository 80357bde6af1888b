"""Exact TSP solvers used as ground truth in tests and benchmarks.

Both solvers treat tours as directed (asymmetric instances are the norm here)
and fix city 0 as the starting point, which is lossless for cyclic tours.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .tsplib import Instance

BRUTE_FORCE_MAX = 11
HELD_KARP_MAX = 18


@dataclass(frozen=True)
class ExactResult:
    optimum_length: float
    optimum_tour: tuple[int, ...]


def brute_force(instance: Instance) -> ExactResult:
    """Enumerate all (N-1)! directed tours starting at city 0.

    Returns the lexicographically first minimizer. Feasible up to N=11.
    """
    n = instance.dimension
    if n > BRUTE_FORCE_MAX:
        raise ValueError(f"brute_force handles N <= {BRUTE_FORCE_MAX}, got {n}")
    d = np.asarray(instance.distances, dtype=np.float64)
    perms = np.array(list(itertools.permutations(range(1, n))), dtype=np.int64)
    cost = d[0, perms[:, 0]].copy()
    for k in range(perms.shape[1] - 1):
        cost += d[perms[:, k], perms[:, k + 1]]
    cost += d[perms[:, -1], 0] if n > 2 else d[perms[:, 0], 0]
    best = int(np.argmin(cost))  # argmin takes the first minimum; perms are lexicographic
    tour = (0, *map(int, perms[best]))
    return ExactResult(optimum_length=_scalar(cost[best], d), optimum_tour=tour)


def held_karp(instance: Instance) -> ExactResult:
    """Dynamic program over (visited set, last city); O(2^N * N^2), N <= 18."""
    n = instance.dimension
    if n > HELD_KARP_MAX:
        raise ValueError(f"held_karp handles N <= {HELD_KARP_MAX}, got {n}")
    d = np.asarray(instance.distances, dtype=np.float64)
    if n == 2:
        return ExactResult(_scalar(d[0, 1] + d[1, 0], d), (0, 1))

    size = 1 << n
    inf = np.inf
    # dp[mask, j] = cheapest path 0 -> ... -> j visiting exactly the cities in mask
    dp = np.full((size, n), inf)
    parent = np.full((size, n), -1, dtype=np.int64)
    for j in range(1, n):
        dp[(1 << j) | 1, j] = d[0, j]
        parent[(1 << j) | 1, j] = 0

    col = d.T.copy()  # col[j] = distances into j
    for mask in range(3, size, 2):  # city 0 always in the mask
        if mask.bit_count() < 3:
            continue
        members = [j for j in range(1, n) if mask & (1 << j)]
        for j in members:
            pm = mask ^ (1 << j)
            cand = dp[pm] + col[j]
            i = int(np.argmin(cand))
            if cand[i] < dp[mask, j]:
                dp[mask, j] = cand[i]
                parent[mask, j] = i

    full = size - 1
    totals = dp[full] + d[:, 0]
    totals[0] = inf
    last = int(np.argmin(totals))
    best = totals[last]

    tour = []
    mask, j = full, last
    while j != -1:
        tour.append(j)
        mask, j = mask ^ (1 << j), int(parent[mask, j])
        if j == 0 and mask == 1:
            tour.append(0)
            break
    tour.reverse()
    return ExactResult(optimum_length=_scalar(best, d), optimum_tour=tuple(tour))


def _scalar(value: float, matrix: np.ndarray) -> float:
    # keep integer-weighted results as exact ints
    if np.issubdtype(np.asarray(matrix).dtype, np.integer) or float(value).is_integer():
        return int(value)
    return float(value)
