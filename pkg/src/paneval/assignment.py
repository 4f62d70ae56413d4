"""Minimum-cost bipartite matching for set-distance evaluation.

``solve_assignment`` wraps scipy's exact rectangular solver; the exhaustive
``brute_force_assignment`` exists as an independent oracle for small
instances and stays free of scipy so the two routes never share code.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError

BRUTE_FORCE_LIMIT = 8


@dataclass(frozen=True)
class AssignmentResult:
    """A matching of size min(m, n); ties are broken arbitrarily."""

    pairs: tuple[tuple[int, int], ...]
    total_cost: float


def _as_cost_matrix(costs) -> np.ndarray:
    c = np.asarray(costs, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] == 0 or c.shape[1] == 0:
        raise ValidationError("empty-matrix", f"cost matrix must be 2-d and non-empty, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValidationError("non-finite-cost", "cost matrix contains nan or inf")
    if np.any(c < 0):
        raise ValidationError("negative-cost", "cost matrix contains negative entries")
    return c


def solve_assignment(costs) -> AssignmentResult:
    """Globally minimal matching of the smaller side into the larger one."""
    c = _as_cost_matrix(costs)
    rows, cols = linear_sum_assignment(c)
    pairs = tuple(zip(rows.tolist(), cols.tolist()))
    total = math.fsum(c[i, j] for i, j in pairs)
    return AssignmentResult(pairs, total)


def brute_force_assignment(costs) -> AssignmentResult:
    """Exhaustive minimum over all injections of the smaller side.

    Only intended as a test oracle; refuses instances with min(m, n) > 8.
    """
    c = _as_cost_matrix(costs)
    m, n = c.shape
    transposed = m > n
    if transposed:
        c = c.T
        m, n = n, m
    if m > BRUTE_FORCE_LIMIT:
        raise ValidationError(
            "size-limit", f"brute force supports min(m, n) <= {BRUTE_FORCE_LIMIT}, got {m}"
        )
    rows = c.tolist()
    best_cost = math.inf
    best: tuple[int, ...] | None = None
    for injection in itertools.permutations(range(n), m):
        cost = sum(rows[i][j] for i, j in enumerate(injection))
        if cost < best_cost:
            best_cost = cost
            best = injection
    assert best is not None
    pairs = tuple((i, j) for i, j in enumerate(best))
    if transposed:
        pairs = tuple((j, i) for i, j in pairs)
    total = math.fsum(rows[i][j] for i, j in enumerate(best))
    return AssignmentResult(pairs, total)
