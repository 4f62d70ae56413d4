"""Deterministic synthetic sequences and a perturbation engine for tests.

Thing objects are axis-aligned rectangles moving linearly inside disjoint
grid cells (positions clamp at cell walls), so masks of one class never
overlap and all areas and IoU values have closed forms. Each stuff class is
one full-width horizontal band behind the things, which makes every covered
thing pixel multi-label.

Random stream contract (byte-exact across implementations)
-----------------------------------------------------------
The generator is SplitMix64: state advances by 0x9E3779B97F4A7C15 per draw
and the output of one draw is

    z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB; output = z ^ (z >> 31)

with all arithmetic modulo 2**64. Derived draws: ``u01 = (draw >> 11) *
2**-53`` and ``randint(lo, hi) = lo + floor(u01 * (hi - lo + 1))``.

``generate`` draws, in order: per thing class its object count; then a
Fisher-Yates shuffle of the placement cells (one randint per swap, from the
last index down to 1); then per object (classes in order, objects in order)
rect width, rect height, x offset in cell, y offset in cell, x velocity,
y velocity.

``perturb`` visits frames in order and segments in file order, always
consuming exactly seven draws per segment -- u_drop, dx, dy, u_jitter,
u_idswitch, u_flip, u_classpick -- regardless of which stages trigger, so
streams stay aligned across parameter choices and drop decisions for a
shared seed are nested as drop_prob grows.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .annotations import FrameAnnotation, Segment, SequenceAnnotation
from .errors import ValidationError
from .rle import Mask, intersection_area, rect_mask, rle_decode, rle_encode
from .taxonomy import ClassDef, Taxonomy

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1


class SplitMix64:
    """The documented 64-bit generator behind all synthetic randomness."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def u01(self) -> float:
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (inclusive)."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + min(int(self.u01() * (hi - lo + 1)), hi - lo)

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class SynthParams:
    seed: int
    frames: int = 10
    height: int = 120
    width: int = 160
    thing_classes: int = 2
    stuff_classes: int = 1
    objects_per_class: tuple[int, int] = (2, 4)
    object_size: tuple[int, int] = (8, 16)
    motion_step: int = 1
    sequence_id: str = "synth-000"


@dataclass(frozen=True)
class PerturbParams:
    drop_prob: float = 0.0
    shift_px: int = 0
    iou_jitter: int = 0
    id_switch_prob: float = 0.0
    class_flip_prob: float = 0.0

    def __post_init__(self):
        for name in ("drop_prob", "id_switch_prob", "class_flip_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError("bad-probability", f"{name} must be in [0, 1], got {p}")


def thing_class_name(index: int) -> str:
    return f"thing_{index:02d}"


def stuff_class_name(index: int) -> str:
    return f"stuff_{index:02d}"


def synth_taxonomy(
    params: SynthParams,
    unknown_thing_classes: int = 0,
    unknown_stuff_classes: int = 0,
) -> Taxonomy:
    """Taxonomy matching ``generate``; the last k classes of a kind are unknown."""
    classes = []
    for i in range(params.thing_classes):
        split = "unknown" if i >= params.thing_classes - unknown_thing_classes else "known"
        classes.append(ClassDef(thing_class_name(i), i, "thing", split))
    for i in range(params.stuff_classes):
        split = "unknown" if i >= params.stuff_classes - unknown_stuff_classes else "known"
        classes.append(ClassDef(stuff_class_name(i), 100 + i, "stuff", split))
    return Taxonomy(tuple(classes))


def generate(params: SynthParams) -> SequenceAnnotation:
    """Deterministic synthetic ground truth for the given parameters."""
    if params.frames < 0 or params.thing_classes < 0 or params.stuff_classes < 0:
        raise ValidationError("infeasible-params", "counts must be non-negative")
    lo, hi = params.objects_per_class
    size_lo, size_hi = params.object_size
    if lo < 0 or hi < lo or size_lo < 1 or size_hi < size_lo:
        raise ValidationError("infeasible-params", "bad object count or size range")

    rng = SplitMix64(params.seed)
    counts = [rng.randint(lo, hi) for _ in range(params.thing_classes)]
    total = sum(counts)

    cells: list[tuple[int, int, int, int]] = []
    if total:
        grid = 1
        while grid * grid < total:
            grid += 1
        cell_h = params.height // grid
        cell_w = params.width // grid
        if size_hi > cell_h or size_hi > cell_w:
            raise ValidationError(
                "infeasible-params",
                f"objects up to {size_hi}px do not fit {total} cells of "
                f"{cell_h}x{cell_w} in a {params.height}x{params.width} frame",
            )
        cells = [
            (r * cell_h, c * cell_w, cell_h, cell_w)
            for r in range(grid)
            for c in range(grid)
        ]
        rng.shuffle(cells)

    objects = []  # (class_name, track_id, cell, rect_w, rect_h, x0, y0, vx, vy)
    cell_iter = iter(cells)
    for ci, n_objects in enumerate(counts):
        for oi in range(n_objects):
            cell = next(cell_iter)
            rect_w = rng.randint(size_lo, size_hi)
            rect_h = rng.randint(size_lo, size_hi)
            cy, cx, cell_h, cell_w = cell
            x0 = rng.randint(0, cell_w - rect_w)
            y0 = rng.randint(0, cell_h - rect_h)
            vx = rng.randint(-params.motion_step, params.motion_step)
            vy = rng.randint(-params.motion_step, params.motion_step)
            objects.append((thing_class_name(ci), oi + 1, cell, rect_w, rect_h, x0, y0, vx, vy))

    stuff_masks = []
    if params.stuff_classes:
        band = params.height // params.stuff_classes
        for si in range(params.stuff_classes):
            top = si * band
            bottom = params.height if si == params.stuff_classes - 1 else top + band
            stuff_masks.append(
                (stuff_class_name(si), rect_mask(params.height, params.width, top, 0,
                                                 bottom - top, params.width))
            )

    frames = []
    for t in range(params.frames):
        segments = []
        for name, track_id, cell, rect_w, rect_h, x0, y0, vx, vy in objects:
            cy, cx, cell_h, cell_w = cell
            x = min(max(x0 + vx * t, 0), cell_w - rect_w)
            y = min(max(y0 + vy * t, 0), cell_h - rect_h)
            mask = rect_mask(params.height, params.width, cy + y, cx + x, rect_h, rect_w)
            segments.append(Segment(mask, name, track_id, layer=0))
        for name, mask in stuff_masks:
            segments.append(Segment(mask, name, None, layer=1))
        frames.append(FrameAnnotation(t, params.height, params.width, tuple(segments)))
    return SequenceAnnotation(params.sequence_id, params.height, params.width, tuple(frames))


def _shift_mask(mask: Mask, dx: int, dy: int) -> Mask:
    if dx == 0 and dy == 0:
        return mask
    bits = rle_decode(mask)
    out = np.zeros_like(bits)
    h, w = bits.shape
    src_y = slice(max(0, -dy), min(h, h - dy))
    dst_y = slice(max(0, dy), min(h, h + dy))
    src_x = slice(max(0, -dx), min(w, w - dx))
    dst_x = slice(max(0, dx), min(w, w + dx))
    out[dst_y, dst_x] = bits[src_y, src_x]
    return rle_encode(out)


def _jitter_mask(mask: Mask, amount: int, dilate: bool) -> Mask:
    if amount <= 0 or mask.area == 0:
        return mask
    bits = rle_decode(mask)
    structure = np.ones((2 * amount + 1, 2 * amount + 1), dtype=bool)
    if dilate:
        bits = ndimage.binary_dilation(bits, structure=structure)
    else:
        bits = ndimage.binary_erosion(bits, structure=structure)
    return rle_encode(bits)


def _clip_same_class(frame: FrameAnnotation, taxonomy: Taxonomy) -> FrameAnnotation:
    """Restore within-class disjointness after noise; earlier segments win."""
    claimed: dict[str, list[Segment]] = {}
    out: list[Segment] = []
    for seg in frame.segments:
        if seg.class_name in taxonomy and taxonomy.is_thing(seg.class_name):
            earlier = claimed.setdefault(seg.class_name, [])
            overlap = any(intersection_area(seg.mask, e.mask) for e in earlier)
            if overlap:
                bits = rle_decode(seg.mask)
                for e in earlier:
                    bits &= ~rle_decode(e.mask)
                if not bits.any():
                    continue
                seg = replace(seg, mask=rle_encode(bits))
            earlier.append(seg)
        out.append(seg)
    return replace(frame, segments=tuple(out))


def perturb(gt: SequenceAnnotation, params: PerturbParams, seed: int, taxonomy: Taxonomy) -> SequenceAnnotation:
    """Independently corrupt each segment; all-zero params return ``gt`` as is.

    Stage order per segment: drop, shift, erosion/dilation, id switch, class
    flip. Same-class thing overlaps created by shifts or dilation are clipped
    (earlier segments win) so the output stays a valid annotation.
    """
    rng = SplitMix64(seed)
    thing_names = [c.name for c in taxonomy.classes if c.kind == "thing"]
    stuff_names = [c.name for c in taxonomy.classes if c.kind == "stuff"]
    next_new_id = 1 + max(
        (seg.track_id for f in gt.frames for seg in f.segments if seg.track_id is not None),
        default=0,
    )
    identity = (
        params.drop_prob == 0.0
        and params.shift_px == 0
        and params.iou_jitter == 0
        and params.id_switch_prob == 0.0
        and params.class_flip_prob == 0.0
    )

    frames = []
    for frame in gt.frames:
        segments = []
        for seg in frame.segments:
            u_drop = rng.u01()
            dx = rng.randint(-params.shift_px, params.shift_px)
            dy = rng.randint(-params.shift_px, params.shift_px)
            u_jitter = rng.u01()
            u_id = rng.u01()
            u_flip = rng.u01()
            u_pick = rng.u01()
            if u_drop < params.drop_prob:
                continue
            mask = _shift_mask(seg.mask, dx, dy)
            if params.iou_jitter:
                mask = _jitter_mask(mask, params.iou_jitter, dilate=u_jitter < 0.5)
            if mask.area == 0:
                continue
            track_id = seg.track_id
            if track_id is not None and u_id < params.id_switch_prob:
                track_id = next_new_id
                next_new_id += 1
            class_name = seg.class_name
            if u_flip < params.class_flip_prob:
                pool = thing_names if taxonomy.is_thing(class_name) else stuff_names
                others = [n for n in pool if n != class_name]
                if others:
                    class_name = others[min(int(u_pick * len(others)), len(others) - 1)]
            segments.append(Segment(mask, class_name, track_id, seg.layer))
        new_frame = replace(frame, segments=tuple(segments))
        if not identity:
            new_frame = _clip_same_class(new_frame, taxonomy)
        frames.append(new_frame)
    if identity:
        return gt
    return replace(gt, frames=tuple(frames))
