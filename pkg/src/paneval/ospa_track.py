"""Trajectory-level OSPA for panoptic tracking.

The base distance between two same-class tracks is the time average of the
per-frame distance over the union of their two frame domains: 1 - IoU where
both have a mask, 1 where only one of them exists. The per-class OSPA then
treats tracks as set elements exactly like masks in the segmentation case,
and class averaging and empty-set rules carry over unchanged. Matching is
purely geometric, so renaming track ids never changes the score.

``window="sequence"`` switches the averaging denominator to the full frame
window of the evaluated sequence pair; frames where neither track exists
then contribute distance 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .annotations import SequenceAnnotation, Track, build_tracks
from .errors import ValidationError
from .ospa import OspaComponents, ospa_from_cost_matrix
from .ospa_seg import mean_components
from .rle import iou
from .taxonomy import Taxonomy, check_subset

WINDOWS = ("union", "sequence")


@dataclass(frozen=True)
class SequenceOspa:
    per_class: dict[str, OspaComponents]
    mean: OspaComponents
    by_subset: dict[str, OspaComponents]
    warnings: tuple[str, ...] = ()


def track_distance(a: Track, b: Track, window: Iterable[int] | None = None) -> float:
    """Time-averaged mask distance between two tracks of the same class."""
    if a.class_name != b.class_name:
        raise ValidationError(
            "class-mismatch", f"cannot compare tracks of classes {a.class_name!r} and {b.class_name!r}"
        )
    frames = sorted(a.domain | b.domain) if window is None else sorted(set(window) | a.domain | b.domain)
    if not frames:
        return 0.0
    terms = []
    for t in frames:
        ma, mb = a.observations.get(t), b.observations.get(t)
        if ma is not None and mb is not None:
            terms.append(1.0 - iou(ma, mb))
        elif ma is not None or mb is not None:
            terms.append(1.0)
        else:
            terms.append(0.0)
    return math.fsum(terms) / len(frames)


def _class_tracks(tracks: Mapping[tuple[str, int | None], Track]) -> dict[str, list[Track]]:
    by_class: dict[str, list[Track]] = {}
    for (name, _key), track in sorted(tracks.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        by_class.setdefault(name, []).append(track)
    return by_class


def ospa2_components(
    gt: SequenceAnnotation,
    pred: SequenceAnnotation,
    taxonomy: Taxonomy,
    subset: str = "all",
    window: str = "union",
) -> dict[str, OspaComponents]:
    """Per-class trajectory OSPA for an aligned sequence pair."""
    if window not in WINDOWS:
        raise ValidationError("bad-window", f"unknown window {window!r}, expected one of {WINDOWS}")
    if gt.height != pred.height or gt.width != pred.width:
        raise ValidationError(
            "dimension-mismatch",
            f"gt sequence is {gt.height}x{gt.width}, pred sequence is {pred.height}x{pred.width}",
            {"sequence": gt.sequence_id},
        )
    full_window = None
    if window == "sequence":
        full_window = sorted(
            {f.frame_id for f in gt.frames} | {f.frame_id for f in pred.frames}
        )
    gt_by_class = _class_tracks(build_tracks(gt, taxonomy))
    pred_by_class = _class_tracks(build_tracks(pred, taxonomy))
    out: dict[str, OspaComponents] = {}
    for name in sorted(set(gt_by_class) | set(pred_by_class)):
        if not taxonomy.in_subset(name, subset):
            continue
        gts = gt_by_class.get(name, [])
        preds = pred_by_class.get(name, [])
        if not gts and not preds:
            continue
        if not gts or not preds:
            out[name] = OspaComponents.from_parts(0.0, 1.0)
            continue
        costs = np.array(
            [[track_distance(g, p, full_window) for p in preds] for g in gts], dtype=np.float64
        )
        out[name] = ospa_from_cost_matrix(costs)
    return out


def ospa2_pt(
    gt: SequenceAnnotation,
    pred: SequenceAnnotation,
    taxonomy: Taxonomy,
    subset: str = "all",
    window: str = "union",
) -> SequenceOspa:
    """Class-averaged trajectory OSPA plus thing/stuff/known/unknown views."""
    check_subset(subset)
    per_class = ospa2_components(gt, pred, taxonomy, subset, window)
    by_subset = {
        s: mean_components(
            comp for name, comp in per_class.items() if taxonomy.in_subset(name, s)
        )
        for s in ("thing", "stuff", "known", "unknown")
    }
    return SequenceOspa(per_class, mean_components(per_class.values()), by_subset)


def ospa2_breakdowns(
    gt: SequenceAnnotation,
    pred: SequenceAnnotation,
    taxonomy: Taxonomy,
    window: str = "union",
) -> dict[str, OspaComponents]:
    """Thing/stuff and known/unknown fragments of the trajectory OSPA."""
    result = ospa2_pt(gt, pred, taxonomy, "all", window)
    return dict(result.by_subset)
