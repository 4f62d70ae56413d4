"""Run-length encoded binary masks and the set operations every metric uses.

A mask is stored as a list of run lengths over the column-major pixel order
of a fixed-size grid. Runs alternate background/foreground and always start
with a background run, which may be 0 when pixel (0, 0) is foreground. The
canonical form has no other zero runs, so ``counts`` is unique per bitmap
and the JSON form ``{"size": [h, w], "counts": [...]}`` is bit-exact.

Area, intersection and IoU are computed on the run representation directly;
decoding to a dense bitmap is only needed at the image-processing edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Mask:
    """Binary region on an ``height`` x ``width`` grid, run-length encoded."""

    height: int
    width: int
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        h, w = self.height, self.width
        if h < 0 or w < 0:
            raise ValidationError("bad-size", f"mask size {h}x{w} is negative")
        total = 0
        for i, c in enumerate(self.counts):
            if c < 0:
                raise ValidationError("malformed-counts", f"negative run length at index {i}")
            if c == 0 and i > 0:
                raise ValidationError(
                    "malformed-counts", f"zero run at index {i} (only a leading zero is allowed)"
                )
            total += c
        if total != h * w:
            raise ValidationError(
                "malformed-counts", f"counts sum to {total}, expected {h}x{w} = {h * w}"
            )

    @property
    def area(self) -> int:
        return sum(self.counts[1::2])

    def to_json(self) -> dict:
        return {"size": [self.height, self.width], "counts": list(self.counts)}

    @classmethod
    def from_json(cls, obj: dict) -> "Mask":
        try:
            h, w = obj["size"]
            counts = obj["counts"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError("bad-rle", f"rle object missing size/counts: {exc}") from exc
        return cls(int(h), int(w), tuple(counts))


def canonicalize(counts: Iterable[int]) -> tuple[int, ...]:
    """Return the canonical run list equivalent to ``counts``.

    Accepts zero-length runs anywhere, merges the neighbours they separate,
    and keeps a single leading zero when the first pixel is foreground.
    """
    runs: list[list[int]] = []  # [pixel value, length], zero-length runs dropped
    value = 0
    for c in counts:
        c = int(c)
        if c > 0:
            if runs and runs[-1][0] == value:
                runs[-1][1] += c
            else:
                runs.append([value, c])
        value ^= 1
    if not runs:
        return (0,)
    out = [0] if runs[0][0] == 1 else []
    out.extend(length for _, length in runs)
    return tuple(out)


def rle_encode(bitmap: np.ndarray) -> Mask:
    """Encode a dense boolean (height, width) array into a canonical Mask."""
    bits = np.asarray(bitmap, dtype=bool)
    if bits.ndim != 2:
        raise ValidationError("bad-bitmap", f"expected 2-d bitmap, got shape {bits.shape}")
    h, w = bits.shape
    flat = bits.ravel(order="F")
    n = flat.size
    if n == 0:
        return Mask(h, w, (0,))
    boundaries = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    edges = np.concatenate(([0], boundaries, [n]))
    runs = np.diff(edges)
    counts = runs.tolist()
    if flat[0]:
        counts.insert(0, 0)
    return Mask(h, w, tuple(counts))


def rle_decode(mask: Mask) -> np.ndarray:
    """Decode a Mask back into a dense boolean (height, width) array."""
    flat = np.zeros(mask.height * mask.width, dtype=bool)
    starts, ends = _fg_intervals(mask)
    for s, e in zip(starts.tolist(), ends.tolist()):
        flat[s:e] = True
    return flat.reshape((mask.height, mask.width), order="F")


def area(mask: Mask) -> int:
    """Number of foreground pixels (sum of the odd-indexed runs)."""
    return mask.area


def _fg_intervals(mask: Mask) -> tuple[np.ndarray, np.ndarray]:
    """Foreground runs as half-open [start, end) offsets into the flat order.

    Cached on the mask: every metric pass repaints the same masks.
    """
    cached = getattr(mask, "_intervals", None)
    if cached is None:
        cum = np.cumsum(np.asarray(mask.counts, dtype=np.int64))
        starts = cum[0:-1:2]
        ends = cum[1::2]
        k = min(starts.size, ends.size)
        cached = (starts[:k], ends[:k])
        object.__setattr__(mask, "_intervals", cached)
    return cached


def _check_same_size(a: Mask, b: Mask) -> None:
    if a.height != b.height or a.width != b.width:
        raise ValidationError(
            "dimension-mismatch",
            f"mask sizes differ: {a.height}x{a.width} vs {b.height}x{b.width}",
        )


def intersection_area(a: Mask, b: Mask) -> int:
    """Overlap pixel count, computed by merging the two run lists."""
    _check_same_size(a, b)
    sa, ea = (x.tolist() for x in _fg_intervals(a))
    sb, eb = (x.tolist() for x in _fg_intervals(b))
    i = j = 0
    total = 0
    while i < len(sa) and j < len(sb):
        lo = sa[i] if sa[i] > sb[j] else sb[j]
        hi = ea[i] if ea[i] < eb[j] else eb[j]
        if hi > lo:
            total += hi - lo
        if ea[i] <= eb[j]:
            i += 1
        else:
            j += 1
    return total


def iou(a: Mask, b: Mask) -> float:
    """Intersection over union in [0, 1]; two empty masks give 0."""
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union == 0:
        return 0.0
    return inter / union


def merge_masks(masks: Sequence[Mask], height: int, width: int) -> Mask:
    """Union of ``masks`` on a grid of the given size (empty input -> empty mask)."""
    flat = np.zeros(height * width, dtype=bool)
    for m in masks:
        if m.height != height or m.width != width:
            raise ValidationError(
                "dimension-mismatch",
                f"mask size {m.height}x{m.width} does not match frame {height}x{width}",
            )
        starts, ends = _fg_intervals(m)
        for s, e in zip(starts.tolist(), ends.tolist()):
            flat[s:e] = True
    return rle_encode(flat.reshape((height, width), order="F"))


def rect_mask(height: int, width: int, top: int, left: int, rect_h: int, rect_w: int) -> Mask:
    """Axis-aligned rectangle as a Mask; handy for fixtures and synthesis."""
    if rect_h <= 0 or rect_w <= 0:
        return Mask(height, width, (height * width,))
    if top < 0 or left < 0 or top + rect_h > height or left + rect_w > width:
        raise ValidationError(
            "bad-rect", f"rectangle {top},{left} {rect_h}x{rect_w} leaves the {height}x{width} grid"
        )
    counts: list[int] = [left * height + top]
    for col in range(rect_w):
        counts.append(rect_h)
        if col < rect_w - 1:
            counts.append(height - rect_h)
    counts.append((height - top - rect_h) + (width - left - rect_w) * height)
    return Mask(height, width, canonicalize(counts))


def _paint_labels(masks: Sequence[Mask], height: int, width: int) -> tuple[np.ndarray, bool]:
    """Paint masks 1..k onto a flat int label map.

    Returns the map and whether the masks were pairwise disjoint (when they
    are not, later masks have overwritten earlier ones and the map is only
    useful for the disjointness verdict itself).
    """
    flat = np.zeros(height * width, dtype=np.int64)
    total_area = 0
    for idx, m in enumerate(masks, start=1):
        starts, ends = _fg_intervals(m)
        for s, e in zip(starts.tolist(), ends.tolist()):
            flat[s:e] = idx
        total_area += m.area
    disjoint = int(np.count_nonzero(flat)) == total_area
    return flat, disjoint


def iou_matrix(xs: Sequence[Mask], ys: Sequence[Mask]) -> np.ndarray:
    """Pairwise IoU between two mask lists as an (len(xs), len(ys)) array.

    When each list is internally disjoint (the common case for per-class
    segments of a valid frame) all intersections come from one joint label
    histogram pass; otherwise falls back to dense per-pair counting. Both
    paths produce identical integer counts, hence identical floats.
    """
    m, n = len(xs), len(ys)
    if m == 0 or n == 0:
        return np.zeros((m, n), dtype=np.float64)
    h, w = xs[0].height, xs[0].width
    for mask in list(xs) + list(ys):
        if mask.height != h or mask.width != w:
            raise ValidationError(
                "dimension-mismatch",
                f"mask size {mask.height}x{mask.width} does not match {h}x{w}",
            )
    areas_x = np.array([x.area for x in xs], dtype=np.float64)
    areas_y = np.array([y.area for y in ys], dtype=np.float64)

    if m * n <= 4:
        # Tiny matrices (stuff singletons, near-empty classes): run-merge
        # intersections beat painting full label maps.
        inter = np.array(
            [[intersection_area(x, y) for y in ys] for x in xs], dtype=np.float64
        )
        union = areas_x[:, None] + areas_y[None, :] - inter
        out = np.zeros((m, n), dtype=np.float64)
        np.divide(inter, union, out=out, where=union > 0)
        return out

    lx, x_disjoint = _paint_labels(xs, h, w)
    ly, y_disjoint = _paint_labels(ys, h, w)
    if x_disjoint and y_disjoint:
        keys = lx * (n + 1) + ly
        counts = np.bincount(keys, minlength=(m + 1) * (n + 1))
        inter = counts.reshape(m + 1, n + 1)[1:, 1:].astype(np.float64)
    else:
        xbits = np.stack([rle_decode(x).ravel(order="F") for x in xs]).astype(np.float64)
        ybits = np.stack([rle_decode(y).ravel(order="F") for y in ys]).astype(np.float64)
        inter = xbits @ ybits.T

    union = areas_x[:, None] + areas_y[None, :] - inter
    out = np.zeros((m, n), dtype=np.float64)
    np.divide(inter, union, out=out, where=union > 0)
    return out
