"""Threshold-based comparison metrics: PQ, STQ, IDF1 and fragmentation.

These operate on single-label frames (run ``flatten_multilabel`` first when
the ground truth carries multi-label regions). Segment matching uses the
strict IoU > 0.5 rule, which makes matches unique within a class as long as
each side's masks are disjoint there.

IDF1 here scores the best one-to-one track assignment: identity true
positives are frames where a track and its assigned partner overlap with
IoU > 0.5, identity false negatives are the remaining ground-truth frames,
and identity false positives are the remaining frames of *assigned*
prediction tracks. Fragmentation counts, per ground-truth track, how many
times its per-frame matched status resumes after a gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .annotations import FrameAnnotation, SequenceAnnotation, build_tracks
from .errors import ValidationError
from .ospa_seg import align_frames
from .rle import _fg_intervals, _paint_labels
from .taxonomy import Taxonomy, check_subset


@dataclass(frozen=True)
class PqClass:
    pq: float
    sq: float
    rq: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class PqResult:
    per_class: dict[str, PqClass]
    all: PqClass
    thing: PqClass
    stuff: PqClass


@dataclass(frozen=True)
class StqResult:
    stq: float
    aq: float
    sq: float


@dataclass(frozen=True)
class IdfResult:
    idf1: float
    idtp: int
    idfp: int
    idfn: int
    frag: int


def _segment_entries(frame: FrameAnnotation, taxonomy: Taxonomy, subset: str):
    """(class, key, mask) triples; stuff segments of a class share one key."""
    entries = []
    for i, seg in enumerate(frame.segments):
        if not taxonomy.in_subset(seg.class_name, subset):
            continue
        if taxonomy.is_thing(seg.class_name):
            entries.append((seg.class_name, ("inst", i), seg.mask))
        else:
            entries.append((seg.class_name, ("stuff",), seg.mask))
    return entries


def _paint_frame(frame: FrameAnnotation, taxonomy: Taxonomy, subset: str, side: str):
    """Label map + per-segment areas for a single-label frame.

    Segments of one stuff class merge into a single region. Overlap between
    segments of different classes means the input was never flattened and is
    rejected; overlap inside a thing class breaks match uniqueness and is
    rejected as well.
    """
    entries = _segment_entries(frame, taxonomy, subset)
    label = np.zeros(frame.height * frame.width, dtype=np.int64)
    keys: list[tuple[str, tuple]] = []
    index: dict[tuple[str, tuple], int] = {}
    parts: dict[int, list] = {}
    for name, key, mask in entries:
        full = (name, key)
        if full not in index:
            index[full] = len(keys) + 1
            keys.append(full)
        idx = index[full]
        parts.setdefault(idx, []).append(mask)
        starts, ends = _fg_intervals(mask)
        for s, e in zip(starts.tolist(), ends.tolist()):
            label[s:e] = idx

    # Fast path: every entity kept exactly its own pixels, so nothing
    # overlapped. Stuff entities may join several parts; measure their union.
    painted = np.bincount(label, minlength=len(keys) + 1)
    areas = painted[1:].tolist()
    expected = []
    for idx in range(1, len(keys) + 1):
        masks = parts[idx]
        if len(masks) == 1:
            expected.append(masks[0].area)
        else:
            own, _ = _paint_labels(masks, frame.height, frame.width)
            expected.append(int(np.count_nonzero(own)))
    if areas == expected:
        return label, keys, areas

    # Slow path only to name the clashing classes in the error.
    label[:] = 0
    for name, key, mask in entries:
        idx = index[(name, key)]
        starts, ends = _fg_intervals(mask)
        for s, e in zip(starts.tolist(), ends.tolist()):
            taken = label[s:e]
            clash = taken[(taken != 0) & (taken != idx)]
            if clash.size:
                other = keys[int(clash[0]) - 1][0]
                code = "multi-label-input" if other != name else "thing-overlap"
                raise ValidationError(
                    code,
                    f"{side} frame {frame.frame_id}: segments of {other!r} and {name!r} overlap; "
                    "run flatten_multilabel first",
                    {"frame_id": frame.frame_id},
                )
            label[s:e] = idx
    raise AssertionError("overlap detected by the area check but not by repainting")


def _pair_counts(gt_label: np.ndarray, n_gt: int, pred_label: np.ndarray, n_pred: int) -> np.ndarray:
    counts = np.bincount(gt_label * (n_pred + 1) + pred_label, minlength=(n_gt + 1) * (n_pred + 1))
    return counts.reshape(n_gt + 1, n_pred + 1)


def pq_stats(
    pairs: Sequence[tuple[FrameAnnotation, FrameAnnotation]],
    taxonomy: Taxonomy,
    subset: str = "all",
) -> dict[str, list]:
    """Per-class [iou_sum, tp, fp, fn] accumulated over aligned frame pairs."""
    stats: dict[str, list] = {}

    def stat(name: str) -> list:
        return stats.setdefault(name, [0.0, 0, 0, 0])

    for gt, pred in pairs:
        gt_label, gt_keys, gt_areas = _paint_frame(gt, taxonomy, subset, "gt")
        pred_label, pred_keys, pred_areas = _paint_frame(pred, taxonomy, subset, "pred")
        inter = _pair_counts(gt_label, len(gt_keys), pred_label, len(pred_keys))
        gt_matched = set()
        pred_matched = set()
        frame_terms: dict[str, list[float]] = {}
        for gi, gj in zip(*np.nonzero(inter[1:, 1:])):
            name = gt_keys[gi][0]
            if pred_keys[gj][0] != name:
                continue
            overlap = int(inter[gi + 1, gj + 1])
            union = gt_areas[gi] + pred_areas[gj] - overlap
            value = overlap / union
            if value > 0.5:
                assert gi not in gt_matched and gj not in pred_matched, "IoU>0.5 match not unique"
                gt_matched.add(int(gi))
                pred_matched.add(int(gj))
                frame_terms.setdefault(name, []).append(value)
                stat(name)[1] += 1
        for name, terms in frame_terms.items():
            stat(name)[0] += math.fsum(terms)
        for gi, key in enumerate(gt_keys):
            if gi not in gt_matched:
                stat(key[0])[3] += 1
        for gj, key in enumerate(pred_keys):
            if gj not in pred_matched:
                stat(key[0])[2] += 1
    return stats


def combine_pq(parts: Sequence[dict[str, list]], taxonomy: Taxonomy) -> PqResult:
    """Fold per-sequence PQ accumulators into the final per-class scores."""
    stats: dict[str, list] = {}
    for part in parts:
        for name, (iou_sum, tp, fp, fn) in part.items():
            acc = stats.setdefault(name, [0.0, 0, 0, 0])
            acc[0] += iou_sum
            acc[1] += tp
            acc[2] += fp
            acc[3] += fn

    per_class: dict[str, PqClass] = {}
    for name in sorted(stats):
        iou_sum, tp, fp, fn = stats[name]
        sq = iou_sum / tp if tp else 0.0
        denom = tp + 0.5 * fp + 0.5 * fn
        rq = tp / denom if denom else 0.0
        per_class[name] = PqClass(sq * rq, sq, rq, tp, fp, fn)

    def aggregate(names: list[str]) -> PqClass:
        if not names:
            return PqClass(0.0, 0.0, 0.0, 0, 0, 0)
        k = len(names)
        return PqClass(
            pq=math.fsum(per_class[n].pq for n in names) / k,
            sq=math.fsum(per_class[n].sq for n in names) / k,
            rq=math.fsum(per_class[n].rq for n in names) / k,
            tp=sum(per_class[n].tp for n in names),
            fp=sum(per_class[n].fp for n in names),
            fn=sum(per_class[n].fn for n in names),
        )

    names = sorted(per_class)
    return PqResult(
        per_class=per_class,
        all=aggregate(names),
        thing=aggregate([n for n in names if taxonomy.is_thing(n)]),
        stuff=aggregate([n for n in names if taxonomy.is_stuff(n)]),
    )


def pq(
    gt_frames: Sequence[FrameAnnotation],
    pred_frames: Sequence[FrameAnnotation],
    taxonomy: Taxonomy,
    subset: str = "all",
) -> PqResult:
    """Panoptic quality accumulated over aligned frames.

    Per class: PQ = sum of matched IoU / (TP + FP/2 + FN/2) with matches at
    strict IoU > 0.5. Classes seen in either side enter the class average.
    """
    check_subset(subset)
    pairs, _warnings = align_frames(gt_frames, pred_frames)
    return combine_pq([pq_stats(pairs, taxonomy, subset)], taxonomy)


def _sequence_pairs(gt: SequenceAnnotation, pred: SequenceAnnotation):
    if gt.height != pred.height or gt.width != pred.width:
        raise ValidationError(
            "dimension-mismatch",
            f"gt sequence is {gt.height}x{gt.width}, pred sequence is {pred.height}x{pred.width}",
            {"sequence": gt.sequence_id},
        )
    return align_frames(gt.frames, pred.frames)[0]


def stq_stats(gt: SequenceAnnotation, pred: SequenceAnnotation, taxonomy: Taxonomy):
    """Raw STQ accumulators for one sequence.

    Returns (per-gt-track association terms, semantic intersection/union
    counts per class). Association works on thing pixels and ignores class
    labels; tubes are (class, track_id) groups of segments over time.
    """
    pairs = _sequence_pairs(gt, pred)
    gt_tube_index: dict[tuple, int] = {}
    pred_tube_index: dict[tuple, int] = {}
    tpa: dict[tuple[int, int], int] = {}
    gt_sizes: dict[int, int] = {}
    pred_sizes: dict[int, int] = {}
    sem: dict[str, list[int]] = {}  # name -> [intersection, gt_area, pred_area]

    def tube(index: dict, key: tuple) -> int:
        if key not in index:
            index[key] = len(index) + 1
        return index[key]

    for gt_frame, pred_frame in pairs:
        gt_label, gt_keys, gt_areas = _paint_frame(gt_frame, taxonomy, "all", "gt")
        pred_label, pred_keys, pred_areas = _paint_frame(pred_frame, taxonomy, "all", "pred")

        # Semantic: per-class pixel IoU accumulators.
        inter = _pair_counts(gt_label, len(gt_keys), pred_label, len(pred_keys))
        for gi, key in enumerate(gt_keys):
            sem.setdefault(key[0], [0, 0, 0])[1] += gt_areas[gi]
        for gj, key in enumerate(pred_keys):
            sem.setdefault(key[0], [0, 0, 0])[2] += pred_areas[gj]
        for gi, gj in zip(*np.nonzero(inter[1:, 1:])):
            if gt_keys[gi][0] == pred_keys[gj][0]:
                sem[gt_keys[gi][0]][0] += int(inter[gi + 1, gj + 1])

        # Association: relabel thing segments by track tube and intersect.
        def tube_map(frame, label, keys, index, sizes):
            remap = np.zeros(len(keys) + 1, dtype=np.int64)
            for i, (name, key) in enumerate(keys):
                if not taxonomy.is_thing(name):
                    continue
                seg_index = key[1]
                track_id = frame.segments[seg_index].track_id
                if track_id is None:
                    raise ValidationError(
                        "missing-track-id",
                        f"thing segment of class {name!r} has no track_id in frame {frame.frame_id}",
                        {"frame_id": frame.frame_id},
                    )
                remap[i + 1] = tube(index, (name, track_id))
            tube_label = remap[label]
            for t, c in zip(*np.unique(tube_label, return_counts=True)):
                if t:
                    sizes[int(t)] = sizes.get(int(t), 0) + int(c)
            return tube_label

        gt_tubes = tube_map(gt_frame, gt_label, gt_keys, gt_tube_index, gt_sizes)
        pred_tubes = tube_map(pred_frame, pred_label, pred_keys, pred_tube_index, pred_sizes)
        n_gt, n_pred = len(gt_tube_index), len(pred_tube_index)
        overlap = np.bincount(gt_tubes * (n_pred + 1) + pred_tubes, minlength=(n_gt + 1) * (n_pred + 1))
        overlap = overlap.reshape(n_gt + 1, n_pred + 1)
        for gi, gj in zip(*np.nonzero(overlap[1:, 1:])):
            key = (int(gi) + 1, int(gj) + 1)
            tpa[key] = tpa.get(key, 0) + int(overlap[gi + 1, gj + 1])

    track_terms = []
    for g in sorted(gt_sizes):
        total = 0.0
        for (gi, pj), shared in sorted(tpa.items()):
            if gi != g:
                continue
            tube_iou = shared / (gt_sizes[g] + pred_sizes[pj] - shared)
            total += shared * tube_iou
        track_terms.append(total / gt_sizes[g])
    return track_terms, sem


def stq(gt: SequenceAnnotation, pred: SequenceAnnotation, taxonomy: Taxonomy) -> StqResult:
    """Segmentation-and-tracking quality: sqrt(association x semantic)."""
    track_terms, sem = stq_stats(gt, pred, taxonomy)
    return combine_stq([(track_terms, sem)])


def combine_stq(parts: Sequence[tuple[list, dict]]) -> StqResult:
    """Pool per-sequence STQ accumulators into one score."""
    track_terms: list[float] = []
    sem: dict[str, list[int]] = {}
    for terms, sems in parts:
        track_terms.extend(terms)
        for name, (i, g, p) in sems.items():
            acc = sem.setdefault(name, [0, 0, 0])
            acc[0] += i
            acc[1] += g
            acc[2] += p
    aq = math.fsum(track_terms) / len(track_terms) if track_terms else 0.0
    ious = []
    for name in sorted(sem):
        inter, g_area, p_area = sem[name]
        union = g_area + p_area - inter
        if union > 0:
            ious.append(inter / union)
    sq = math.fsum(ious) / len(ious) if ious else 0.0
    return StqResult(math.sqrt(aq * sq), aq, sq)


def idf1_frag_stats(gt: SequenceAnnotation, pred: SequenceAnnotation, taxonomy: Taxonomy):
    """(idtp, idfp, idfn, frag) counts for one sequence of thing tracks."""
    pairs = _sequence_pairs(gt, pred)
    gt_tracks = {k: t for k, t in build_tracks(gt, taxonomy).items() if k[1] is not None}
    pred_tracks = {k: t for k, t in build_tracks(pred, taxonomy).items() if k[1] is not None}
    gt_keys = sorted(gt_tracks)
    pred_keys = sorted(pred_tracks)
    gt_pos = {k: i for i, k in enumerate(gt_keys)}
    pred_pos = {k: i for i, k in enumerate(pred_keys)}

    matched_frames = np.zeros((len(gt_keys), len(pred_keys)), dtype=np.int64)
    frame_matched: dict[tuple, list[bool]] = {k: [] for k in gt_keys}

    for gt_frame, pred_frame in pairs:
        gt_label, g_keys, g_areas = _paint_frame(gt_frame, taxonomy, "thing", "gt")
        pred_label, p_keys, p_areas = _paint_frame(pred_frame, taxonomy, "thing", "pred")
        inter = _pair_counts(gt_label, len(g_keys), pred_label, len(p_keys))
        matched_now: set[tuple] = set()
        for gi, gj in zip(*np.nonzero(inter[1:, 1:])):
            name = g_keys[gi][0]
            if p_keys[gj][0] != name:
                continue
            overlap = int(inter[gi + 1, gj + 1])
            union = g_areas[gi] + p_areas[gj] - overlap
            if overlap / union > 0.5:
                g_track = (name, gt_frame.segments[g_keys[gi][1][1]].track_id)
                p_track = (name, pred_frame.segments[p_keys[gj][1][1]].track_id)
                matched_frames[gt_pos[g_track], pred_pos[p_track]] += 1
                matched_now.add(g_track)
        for key, track in gt_tracks.items():
            if gt_frame.frame_id in track.observations:
                frame_matched[key].append(key in matched_now)

    idtp = 0
    assigned_pred_frames = 0
    if gt_keys and pred_keys:
        # Assign min(G, P) pairs maximizing matched frames; among maximizers
        # prefer partners with fewer total frames (deterministic tie-break).
        # Assigned prediction frames count toward IDFP; when P > G the extra
        # unassigned prediction tracks do not.
        pred_lengths = np.array([len(pred_tracks[k].observations) for k in pred_keys])
        tie = 1.0 / (2.0 * (pred_lengths.sum() + 1.0))
        benefit = matched_frames - tie * pred_lengths[None, :]
        rows, cols = linear_sum_assignment(-benefit)
        for i, j in zip(rows, cols):
            idtp += int(matched_frames[i, j])
            assigned_pred_frames += int(pred_lengths[j])
    idfn = sum(len(t.observations) for t in gt_tracks.values()) - idtp
    idfp = assigned_pred_frames - idtp

    frag = 0
    for status in frame_matched.values():
        runs = 0
        prev = False
        for s in status:
            if s and not prev:
                runs += 1
            prev = s
        frag += max(0, runs - 1)
    return idtp, idfp, idfn, frag


def combine_idf1(parts: Sequence[tuple[int, int, int, int]]) -> IdfResult:
    idtp = sum(p[0] for p in parts)
    idfp = sum(p[1] for p in parts)
    idfn = sum(p[2] for p in parts)
    frag = sum(p[3] for p in parts)
    denom = 2 * idtp + idfp + idfn
    idf1 = 2 * idtp / denom if denom else 1.0
    return IdfResult(idf1, idtp, idfp, idfn, frag)


def idf1_frag(gt: SequenceAnnotation, pred: SequenceAnnotation, taxonomy: Taxonomy) -> IdfResult:
    """Identity F1 and fragmentation for one sequence."""
    return combine_idf1([idf1_frag_stats(gt, pred, taxonomy)])
