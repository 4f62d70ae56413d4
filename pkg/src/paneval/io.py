"""Reading and writing the toolkit's JSON interchange formats.

Sequence files:
    {"sequence": str, "height": int, "width": int,
     "frames": [{"frame_id": int, "segments": [
        {"class": str, "track_id": int|null, "layer": int,
         "rle": {"size": [h, w], "counts": [int, ...]}}]}]}

Manifests:
    {"dataset": str, "sequences": [{"id": str, "path": str}]}

Loading is strict: every accepted file satisfies the documented invariants.
Validation collects all violations in a file before failing so the CLI can
report them in one pass. Predicted class names resolve through the taxonomy
alias table (case-folded, whitespace-normalized); unresolved names are an
error unless ``open_world=True``, in which case the offending segments are
dropped and reported via the sequence's ``warnings``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .annotations import FrameAnnotation, Segment, SequenceAnnotation, build_tracks, check_thing_disjoint
from .errors import ValidationError, ValidationErrorGroup
from .rle import Mask
from .taxonomy import Taxonomy

MODES = ("segmentation", "tracking")


@dataclass(frozen=True)
class ManifestEntry:
    sequence_id: str
    path: Path


@dataclass(frozen=True)
class Manifest:
    dataset: str
    entries: tuple[ManifestEntry, ...]


def _read_json(path: Path, code: str) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(code, f"cannot read {path}: {exc}", {"file": str(path)}) from exc


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    obj = _read_json(path, "bad-manifest")
    if not isinstance(obj, dict) or "sequences" not in obj:
        raise ValidationError("bad-manifest", f"{path} must be an object with a 'sequences' list",
                              {"file": str(path)})
    entries = []
    seen = set()
    for i, entry in enumerate(obj["sequences"]):
        try:
            sid = str(entry["id"])
            rel = str(entry["path"])
        except (KeyError, TypeError) as exc:
            raise ValidationError("bad-manifest", f"sequence entry {i} is malformed: {exc}",
                                  {"file": str(path), "index": i}) from exc
        if sid in seen:
            raise ValidationError("duplicate-sequence-id", f"sequence id {sid!r} appears twice",
                                  {"file": str(path)})
        seen.add(sid)
        seq_path = (path.parent / rel).resolve()
        if not seq_path.is_file():
            raise ValidationError("missing-file", f"sequence file {seq_path} does not exist",
                                  {"file": str(path), "sequence": sid})
        entries.append(ManifestEntry(sid, seq_path))
    return Manifest(str(obj.get("dataset", path.stem)), tuple(entries))


def load_sequence(
    path: str | Path,
    taxonomy: Taxonomy,
    mode: str = "segmentation",
    open_world: bool = False,
) -> SequenceAnnotation:
    """Load and validate one sequence file.

    Raises ValidationErrorGroup listing every violation found. In tracking
    mode thing segments must carry a track_id and tracks must be consistent.
    """
    if mode not in MODES:
        raise ValidationError("bad-mode", f"unknown mode {mode!r}, expected one of {MODES}")
    path = Path(path)
    obj = _read_json(path, "bad-sequence")
    errors: list[ValidationError] = []
    warnings: list[str] = []

    def fail(code: str, message: str, **where) -> None:
        errors.append(ValidationError(code, message, {"file": str(path), **where}))

    if not isinstance(obj, dict):
        raise ValidationError("bad-sequence", f"{path} is not a JSON object", {"file": str(path)})
    try:
        sequence_id = str(obj["sequence"])
        height = int(obj["height"])
        width = int(obj["width"])
        raw_frames = obj["frames"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("bad-sequence", f"{path} misses sequence/height/width/frames: {exc}",
                              {"file": str(path)}) from exc

    frames: list[FrameAnnotation] = []
    prev_id = None
    for fi, raw in enumerate(raw_frames):
        try:
            frame_id = int(raw["frame_id"])
            raw_segments = raw["segments"]
        except (KeyError, TypeError, ValueError) as exc:
            fail("bad-frame", f"frame {fi} is malformed: {exc}", frame=fi)
            continue
        if prev_id is not None and frame_id <= prev_id:
            fail("frame-order", f"frame ids must be strictly increasing, got {frame_id} after {prev_id}",
                 frame_id=frame_id)
        prev_id = frame_id
        segments: list[Segment] = []
        for si, raw_seg in enumerate(raw_segments):
            ctx = {"frame_id": frame_id, "segment": si}
            try:
                raw_class = str(raw_seg["class"])
                track_id = raw_seg.get("track_id")
                layer = int(raw_seg.get("layer", 0))
                rle = raw_seg["rle"]
            except (KeyError, TypeError, ValueError) as exc:
                fail("bad-segment", f"segment {si} of frame {frame_id} is malformed: {exc}", **ctx)
                continue
            name = taxonomy.resolve(raw_class)
            if name is None:
                if open_world:
                    warnings.append(
                        f"frame {frame_id}: segment {si} class {raw_class!r} is not in the "
                        "taxonomy and was dropped"
                    )
                    continue
                fail("unknown-class", f"class {raw_class!r} is not in the taxonomy", **ctx)
                continue
            try:
                mask = Mask.from_json(rle)
            except ValidationError as exc:
                fail(exc.code, f"frame {frame_id} segment {si}: {exc.message}", **ctx)
                continue
            if mask.height != height or mask.width != width:
                fail("dimension-mismatch",
                     f"segment mask is {mask.height}x{mask.width}, sequence is {height}x{width}", **ctx)
                continue
            if track_id is not None:
                track_id = int(track_id)
            if taxonomy.is_stuff(name):
                if track_id is not None:
                    fail("stuff-track-id", f"stuff segment of class {name!r} carries a track_id", **ctx)
                    continue
            elif track_id is None and mode == "tracking":
                fail("missing-track-id",
                     f"thing segment of class {name!r} has no track_id (tracking mode)", **ctx)
                continue
            segments.append(Segment(mask, name, track_id, layer))
        try:
            frame = FrameAnnotation(frame_id, height, width, tuple(segments))
            check_thing_disjoint(frame, taxonomy)
            frames.append(frame)
        except ValidationError as exc:
            errors.append(ValidationError(exc.code, exc.message, {"file": str(path), **exc.where}))

    if errors:
        raise ValidationErrorGroup(errors)
    try:
        seq = SequenceAnnotation(sequence_id, height, width, tuple(frames), tuple(warnings))
        if mode == "tracking":
            build_tracks(seq, taxonomy)
    except ValidationError as exc:
        raise ValidationErrorGroup(
            [ValidationError(exc.code, exc.message, {"file": str(path), **exc.where})]
        ) from exc
    return seq


def sequence_to_json(seq: SequenceAnnotation) -> dict:
    return {
        "sequence": seq.sequence_id,
        "height": seq.height,
        "width": seq.width,
        "frames": [
            {
                "frame_id": f.frame_id,
                "segments": [
                    {
                        "class": s.class_name,
                        "track_id": s.track_id,
                        "layer": s.layer,
                        "rle": s.mask.to_json(),
                    }
                    for s in f.segments
                ],
            }
            for f in seq.frames
        ],
    }


def save_sequence(seq: SequenceAnnotation, path: str | Path) -> None:
    path = Path(path)
    path.write_text(json.dumps(sequence_to_json(seq), separators=(",", ":")) + "\n", encoding="utf-8")


def save_manifest(dataset: str, entries: list[tuple[str, str]], path: str | Path) -> None:
    path = Path(path)
    obj = {"dataset": dataset, "sequences": [{"id": sid, "path": rel} for sid, rel in entries]}
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def validate_manifest(
    manifest_path: str | Path,
    taxonomy: Taxonomy,
    mode: str = "segmentation",
    open_world: bool = False,
) -> dict[str, list[dict]]:
    """All violations per sequence file of a manifest (empty lists when clean)."""
    report: dict[str, list[dict]] = {}
    manifest = load_manifest(manifest_path)
    for entry in manifest.entries:
        try:
            load_sequence(entry.path, taxonomy, mode=mode, open_world=open_world)
            report[entry.sequence_id] = []
        except ValidationErrorGroup as group:
            report[entry.sequence_id] = group.to_list()
        except ValidationError as err:
            report[entry.sequence_id] = [err.to_dict()]
    return report
