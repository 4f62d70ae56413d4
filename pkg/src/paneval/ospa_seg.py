"""Frame- and dataset-level OSPA for panoptic segmentation.

The per-frame score averages the per-class OSPA over the classes present in
either side of that frame (classes absent from both contribute nothing).
Dataset scores are unweighted means of per-frame means over all ground-truth
frames; per-class aggregates average only over frames where the class shows
up. Subset views (thing/stuff/known/unknown, scale buckets) reuse the same
per-class values with a narrower class filter, so one evaluation pass feeds
every reported breakdown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .annotations import FrameAnnotation, class_masks
from .errors import ValidationError
from .ospa import OspaComponents, ospa_set_distance
from .taxonomy import Taxonomy, check_subset

SCALE_BUCKETS = ("small", "medium", "large")
_SMALL_MAX_AREA = 32 * 32  # exclusive
_MEDIUM_MAX_AREA = 96 * 96  # inclusive


def scale_bucket(mask_area: int) -> str:
    """Scale bucket for a mask area: small < 32*32 <= medium <= 96*96 < large."""
    if mask_area < _SMALL_MAX_AREA:
        return "small"
    if mask_area <= _MEDIUM_MAX_AREA:
        return "medium"
    return "large"


@dataclass(frozen=True)
class FrameOspa:
    per_class: dict[str, OspaComponents]
    mean: OspaComponents


@dataclass(frozen=True)
class ClassAggregate:
    total: float
    loc: float
    card: float
    frames: int


@dataclass(frozen=True)
class DatasetOspa:
    frames: int
    overall: OspaComponents
    by_subset: dict[str, OspaComponents]
    per_class: dict[str, ClassAggregate]
    warnings: tuple[str, ...] = ()


def frame_ospa_components(
    gt: FrameAnnotation,
    pred: FrameAnnotation,
    taxonomy: Taxonomy,
    subset: str = "all",
) -> dict[str, OspaComponents]:
    """Per-class OSPA for one aligned frame pair."""
    if gt.height != pred.height or gt.width != pred.width:
        raise ValidationError(
            "dimension-mismatch",
            f"gt frame is {gt.height}x{gt.width}, pred frame is {pred.height}x{pred.width}",
            {"frame_id": gt.frame_id},
        )
    gt_masks = class_masks(gt, taxonomy, subset)
    pred_masks = class_masks(pred, taxonomy, subset)
    out: dict[str, OspaComponents] = {}
    for name in sorted(set(gt_masks) | set(pred_masks)):
        out[name] = ospa_set_distance(gt_masks.get(name, []), pred_masks.get(name, []))
    return out


def mean_components(values: Iterable[OspaComponents]) -> OspaComponents:
    values = list(values)
    if not values:
        return OspaComponents.zero()
    loc = math.fsum(v.loc for v in values) / len(values)
    card = math.fsum(v.card for v in values) / len(values)
    return OspaComponents.from_parts(loc, card)


def ospa_ps(
    gt: FrameAnnotation,
    pred: FrameAnnotation,
    taxonomy: Taxonomy,
    subset: str = "all",
) -> FrameOspa:
    """Class-averaged OSPA for one frame."""
    check_subset(subset)
    per_class = frame_ospa_components(gt, pred, taxonomy, subset)
    return FrameOspa(per_class, mean_components(per_class.values()))


def align_frames(
    gt_frames: Sequence[FrameAnnotation],
    pred_frames: Sequence[FrameAnnotation],
) -> tuple[list[tuple[FrameAnnotation, FrameAnnotation]], list[str]]:
    """Pair frames by frame_id; a missing prediction counts as empty.

    Extra prediction frames are ignored but reported. Duplicate gt ids fail.
    """
    seen: set[int] = set()
    for f in gt_frames:
        if f.frame_id in seen:
            raise ValidationError("duplicate-frame-id", f"gt frame_id {f.frame_id} appears twice")
        seen.add(f.frame_id)
    pred_by_id: dict[int, FrameAnnotation] = {}
    warnings: list[str] = []
    for f in pred_frames:
        if f.frame_id in pred_by_id:
            raise ValidationError("duplicate-frame-id", f"pred frame_id {f.frame_id} appears twice")
        pred_by_id[f.frame_id] = f
    pairs = []
    for f in sorted(gt_frames, key=lambda fr: fr.frame_id):
        pred = pred_by_id.pop(f.frame_id, None)
        if pred is None:
            pred = FrameAnnotation(f.frame_id, f.height, f.width, ())
        pairs.append((f, pred))
    for fid in sorted(pred_by_id):
        warnings.append(f"prediction frame {fid} has no ground-truth frame and was ignored")
    return pairs, warnings


def aggregate_frame_components(
    frame_components: Sequence[Mapping[str, OspaComponents]],
    taxonomy: Taxonomy,
    warnings: Sequence[str] = (),
) -> DatasetOspa:
    """Fold per-frame per-class values into dataset-level aggregates."""
    n = len(frame_components)

    def overall_for(subset: str) -> OspaComponents:
        if n == 0:
            return OspaComponents.zero()
        frame_means = [
            mean_components(
                comp for name, comp in per_class.items() if taxonomy.in_subset(name, subset)
            )
            for per_class in frame_components
        ]
        loc = math.fsum(f.loc for f in frame_means) / n
        card = math.fsum(f.card for f in frame_means) / n
        return OspaComponents.from_parts(loc, card)

    per_class_frames: dict[str, list[OspaComponents]] = {}
    for per_class in frame_components:
        for name, comp in per_class.items():
            per_class_frames.setdefault(name, []).append(comp)
    per_class = {}
    for name in sorted(per_class_frames):
        comps = per_class_frames[name]
        loc = math.fsum(c.loc for c in comps) / len(comps)
        card = math.fsum(c.card for c in comps) / len(comps)
        per_class[name] = ClassAggregate(loc + card, loc, card, len(comps))

    return DatasetOspa(
        frames=n,
        overall=overall_for("all"),
        by_subset={s: overall_for(s) for s in ("thing", "stuff", "known", "unknown")},
        per_class=per_class,
        warnings=tuple(warnings),
    )


def ospa_ps_dataset(
    gt_frames: Sequence[FrameAnnotation],
    pred_frames: Sequence[FrameAnnotation],
    taxonomy: Taxonomy,
    subset: str = "all",
) -> DatasetOspa:
    """Dataset OSPA: mean of per-frame class-averaged scores over gt frames."""
    check_subset(subset)
    pairs, warnings = align_frames(gt_frames, pred_frames)
    components = [frame_ospa_components(g, p, taxonomy, subset) for g, p in pairs]
    return aggregate_frame_components(components, taxonomy, warnings)


def restrict_to_bucket(frame: FrameAnnotation, bucket: str) -> FrameAnnotation:
    kept = tuple(s for s in frame.segments if scale_bucket(s.mask.area) == bucket)
    return replace(frame, segments=kept)


def ospa_ps_by_scale(
    gt_frames: Sequence[FrameAnnotation],
    pred_frames: Sequence[FrameAnnotation],
    taxonomy: Taxonomy,
    subset: str = "all",
) -> dict[str, DatasetOspa]:
    """Dataset OSPA per mask-scale bucket.

    Each side keeps only segments whose own area falls in the bucket, then
    the per-class evaluation runs as usual within the bucket.
    """
    check_subset(subset)
    pairs, warnings = align_frames(gt_frames, pred_frames)
    out: dict[str, DatasetOspa] = {}
    for bucket in SCALE_BUCKETS:
        components = [
            frame_ospa_components(
                restrict_to_bucket(g, bucket), restrict_to_bucket(p, bucket), taxonomy, subset
            )
            for g, p in pairs
        ]
        out[bucket] = aggregate_frame_components(components, taxonomy, warnings)
    return out
