"""Order-1 OSPA set distance with cutoff 1 over mask sets.

For sets X, Y with |X| = m <= n = |Y| (flip otherwise) and base distance
d = 1 - IoU in [0, 1]:

    localization = (minimal assignment cost of X into Y) / n
    cardinality  = (n - m) / n
    total        = localization + cardinality

Both sets empty gives 0; exactly one empty set gives total 1 (all of it
cardinality). With order 1 the two components add up exactly, which is what
makes the reported error decompositions additive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .assignment import solve_assignment
from .rle import Mask, iou_matrix


@dataclass(frozen=True)
class OspaComponents:
    """total == loc + card by construction; every component is in [0, 1]."""

    total: float
    loc: float
    card: float

    @classmethod
    def zero(cls) -> "OspaComponents":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_parts(cls, loc: float, card: float) -> "OspaComponents":
        return cls(loc + card, loc, card)


def ospa_from_cost_matrix(costs: np.ndarray) -> OspaComponents:
    """OSPA value for a precomputed base-distance matrix (entries in [0, 1])."""
    costs = np.asarray(costs, dtype=np.float64)
    m, n = costs.shape
    if m > n:
        costs = costs.T
        m, n = n, m
    if n == 0:
        return OspaComponents.zero()
    if m == 0:
        return OspaComponents.from_parts(0.0, 1.0)
    best = solve_assignment(costs)
    return OspaComponents.from_parts(best.total_cost / n, (n - m) / n)


def ospa_set_distance(xs: Sequence[Mask], ys: Sequence[Mask]) -> OspaComponents:
    """OSPA between two mask sets under the 1 - IoU base distance."""
    if len(xs) == 0 and len(ys) == 0:
        return OspaComponents.zero()
    if len(xs) == 0 or len(ys) == 0:
        return OspaComponents.from_parts(0.0, 1.0)
    return ospa_from_cost_matrix(1.0 - iou_matrix(xs, ys))
