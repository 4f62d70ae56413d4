"""Annotation data model: segments, frames, sequences, tracks.

Frames may contain overlapping segments of different classes; that is how
multi-label pixels (an object seen through glass, a poster on a wall) are
represented. Within one frame and one thing class, masks must be disjoint.
``flatten_multilabel`` reduces a frame to the single-label view required by
threshold metrics; the set metrics consume the multi-label form directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .rle import Mask, merge_masks, rle_encode, _fg_intervals, _paint_labels
from .taxonomy import Taxonomy


@dataclass(frozen=True)
class Segment:
    mask: Mask
    class_name: str
    track_id: int | None = None
    layer: int = 0


@dataclass(frozen=True)
class FrameAnnotation:
    frame_id: int
    height: int
    width: int
    segments: tuple[Segment, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        for i, seg in enumerate(self.segments):
            if seg.mask.height != self.height or seg.mask.width != self.width:
                raise ValidationError(
                    "dimension-mismatch",
                    f"segment {i} mask is {seg.mask.height}x{seg.mask.width}, "
                    f"frame is {self.height}x{self.width}",
                    {"frame_id": self.frame_id, "segment": i},
                )


@dataclass(frozen=True)
class Track:
    """One labeled trajectory; ``observations`` maps frame_id -> Mask."""

    class_name: str
    track_id: int | None
    observations: dict[int, Mask] = field(default_factory=dict)

    @property
    def domain(self) -> frozenset[int]:
        return frozenset(self.observations)


@dataclass(frozen=True)
class SequenceAnnotation:
    sequence_id: str
    height: int
    width: int
    frames: tuple[FrameAnnotation, ...] = ()
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        prev = None
        for f in self.frames:
            if f.height != self.height or f.width != self.width:
                raise ValidationError(
                    "dimension-mismatch",
                    f"frame {f.frame_id} is {f.height}x{f.width}, sequence is {self.height}x{self.width}",
                    {"sequence": self.sequence_id, "frame_id": f.frame_id},
                )
            if prev is not None and f.frame_id <= prev:
                raise ValidationError(
                    "frame-order",
                    f"frame ids must be strictly increasing, got {f.frame_id} after {prev}",
                    {"sequence": self.sequence_id, "frame_id": f.frame_id},
                )
            prev = f.frame_id


def class_masks(frame: FrameAnnotation, taxonomy: Taxonomy, subset: str = "all") -> dict[str, list[Mask]]:
    """Per-class mask lists for one frame.

    Thing classes contribute one mask per segment; a stuff class contributes
    the union of its segments as a single class-level mask.
    """
    things: dict[str, list[Mask]] = {}
    stuff_parts: dict[str, list[Mask]] = {}
    for seg in frame.segments:
        if not taxonomy.in_subset(seg.class_name, subset):
            continue
        if taxonomy.is_thing(seg.class_name):
            things.setdefault(seg.class_name, []).append(seg.mask)
        else:
            stuff_parts.setdefault(seg.class_name, []).append(seg.mask)
    out = dict(things)
    for name, parts in stuff_parts.items():
        union = parts[0] if len(parts) == 1 else merge_masks(parts, frame.height, frame.width)
        out[name] = [union]
    return out


def check_thing_disjoint(frame: FrameAnnotation, taxonomy: Taxonomy) -> None:
    """Enforce pairwise-disjoint masks within each thing class of a frame."""
    by_class: dict[str, list[Mask]] = {}
    for seg in frame.segments:
        if seg.class_name in taxonomy and taxonomy.is_thing(seg.class_name):
            by_class.setdefault(seg.class_name, []).append(seg.mask)
    for name, masks in by_class.items():
        if len(masks) < 2:
            continue
        _, disjoint = _paint_labels(masks, frame.height, frame.width)
        if not disjoint:
            raise ValidationError(
                "thing-overlap",
                f"masks of thing class {name!r} overlap within frame {frame.frame_id}",
                {"frame_id": frame.frame_id, "class": name},
            )


def flatten_multilabel(frame: FrameAnnotation, taxonomy: Taxonomy) -> FrameAnnotation:
    """Resolve overlapping segments into a single-label frame.

    At each contested pixel the surviving segment is picked by: thing beats
    stuff, then lower layer, then smaller area, then lower segment index.
    Surviving masks are pairwise disjoint and cover exactly the pixels the
    input covered; untouched segments keep their original mask object.
    """
    if not frame.segments:
        return frame
    order = sorted(
        range(len(frame.segments)),
        key=lambda i: (
            0 if taxonomy.is_thing(frame.segments[i].class_name) else 1,
            frame.segments[i].layer,
            frame.segments[i].mask.area,
            i,
        ),
    )
    # Paint lowest priority first so the highest-priority segment wins each pixel.
    label = np.zeros(frame.height * frame.width, dtype=np.int64)
    for i in reversed(order):
        starts, ends = _fg_intervals(frame.segments[i].mask)
        for s, e in zip(starts.tolist(), ends.tolist()):
            label[s:e] = i + 1
    survivors: list[Segment] = []
    counts = np.bincount(label, minlength=len(frame.segments) + 1)
    for i, seg in enumerate(frame.segments):
        kept = int(counts[i + 1])
        if kept == 0:
            continue
        if kept == seg.mask.area:
            survivors.append(seg)
        else:
            bits = (label == i + 1).reshape((frame.height, frame.width), order="F")
            survivors.append(replace(seg, mask=rle_encode(bits)))
    return replace(frame, segments=tuple(survivors))


def filter_subset(data, taxonomy: Taxonomy, subset: str):
    """Drop segments whose class is outside ``subset``; frames are retained."""
    if isinstance(data, SequenceAnnotation):
        return replace(data, frames=tuple(filter_subset(f, taxonomy, subset) for f in data.frames))
    if isinstance(data, FrameAnnotation):
        kept = tuple(s for s in data.segments if taxonomy.in_subset(s.class_name, subset))
        return replace(data, segments=kept)
    raise TypeError(f"cannot filter {type(data).__name__}")


def build_tracks(seq: SequenceAnnotation, taxonomy: Taxonomy) -> dict[tuple[str, int | None], Track]:
    """Track table for a sequence.

    Thing segments group by (class, track_id); each stuff class becomes one
    synthetic trajectory of its per-frame class-level union masks.
    """
    observations: dict[tuple[str, int | None], dict[int, Mask]] = {}
    stuff_parts: dict[str, dict[int, list[Mask]]] = {}
    for frame in seq.frames:
        for seg in frame.segments:
            if taxonomy.is_thing(seg.class_name):
                if seg.track_id is None:
                    raise ValidationError(
                        "missing-track-id",
                        f"thing segment of class {seg.class_name!r} has no track_id "
                        f"in frame {frame.frame_id}",
                        {"sequence": seq.sequence_id, "frame_id": frame.frame_id},
                    )
                key = (seg.class_name, seg.track_id)
                obs = observations.setdefault(key, {})
                if frame.frame_id in obs:
                    raise ValidationError(
                        "duplicate-track-id",
                        f"track {seg.track_id} of class {seg.class_name!r} appears twice "
                        f"in frame {frame.frame_id}",
                        {"sequence": seq.sequence_id, "frame_id": frame.frame_id},
                    )
                obs[frame.frame_id] = seg.mask
            else:
                stuff_parts.setdefault(seg.class_name, {}).setdefault(frame.frame_id, []).append(seg.mask)
    tracks = {key: Track(key[0], key[1], obs) for key, obs in observations.items()}
    for name, per_frame in stuff_parts.items():
        obs = {
            fid: (parts[0] if len(parts) == 1 else merge_masks(parts, seq.height, seq.width))
            for fid, parts in per_frame.items()
        }
        tracks[(name, None)] = Track(name, None, obs)
    return tracks
