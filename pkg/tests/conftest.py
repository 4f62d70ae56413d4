"""Shared fixtures and independent oracles for the test suite.

The oracles here never route through the code paths they check: IoU is
recomputed from dense bitmaps, OSPA by exhaustive enumeration over all
injections, association/semantic quality from (t, y, x) pixel arrays.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from paneval import ClassDef, Mask, Taxonomy, rle_encode


def bitmap_iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = np.logical_and(a, b).sum()
    union = np.logical_or(a, b).sum()
    return 0.0 if union == 0 else float(inter) / float(union)


def brute_ospa(xs: list[np.ndarray], ys: list[np.ndarray]) -> tuple[float, float, float]:
    """(total, loc, card) by bitmap IoU and exhaustive assignment."""
    if len(xs) > len(ys):
        xs, ys = ys, xs
    m, n = len(xs), len(ys)
    if n == 0:
        return (0.0, 0.0, 0.0)
    if m == 0:
        return (1.0, 0.0, 1.0)
    best = math.inf
    for injection in itertools.permutations(range(n), m):
        cost = math.fsum(1.0 - bitmap_iou(xs[i], ys[j]) for i, j in enumerate(injection))
        best = min(best, cost)
    loc = best / n
    card = (n - m) / n
    return (loc + card, loc, card)


def random_bitmap(rng: np.random.Generator, h: int, w: int, density: float | None = None) -> np.ndarray:
    if density is None:
        density = rng.uniform(0.1, 0.9)
    return rng.random((h, w)) < density


def random_mask(rng: np.random.Generator, h: int, w: int, density: float | None = None) -> Mask:
    return rle_encode(random_bitmap(rng, h, w, density))


def random_mask_set(rng: np.random.Generator, h: int, w: int, max_n: int = 4) -> list[Mask]:
    return [random_mask(rng, h, w) for _ in range(int(rng.integers(0, max_n + 1)))]


def disjoint_masks(rng: np.random.Generator, h: int, w: int, n: int) -> list[Mask]:
    """n disjoint random regions obtained by partitioning a label image."""
    labels = rng.integers(0, n + 1, size=(h, w))
    return [rle_encode(labels == k) for k in range(1, n + 1)]


_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.skipped:
        _ACCEPTANCE_RESULTS[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        verdict = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}.get(
            _ACCEPTANCE_RESULTS[name], _ACCEPTANCE_RESULTS[name].upper()
        )
        terminalreporter.write_line(f"{verdict}  {name}")


@pytest.fixture
def box_floor_taxonomy() -> Taxonomy:
    return Taxonomy(
        (
            ClassDef("box", 0, "thing", "known"),
            ClassDef("floor", 1, "stuff", "known"),
        )
    )


@pytest.fixture
def mixed_taxonomy() -> Taxonomy:
    return Taxonomy(
        (
            ClassDef("person", 0, "thing", "known"),
            ClassDef("cart", 1, "thing", "unknown"),
            ClassDef("wall", 10, "stuff", "known"),
            ClassDef("shrub", 11, "stuff", "unknown"),
        )
    )
