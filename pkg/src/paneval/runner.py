"""Dataset evaluation orchestrator behind the CLI and the bindings surface.

Work fans out over sequences: each task loads one gt/pred sequence pair and
reduces it to a plain accumulator dict. The parent folds accumulators in
sequence-id order with compensated summation, so reports are byte-identical
for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from . import __version__
from .annotations import SequenceAnnotation, flatten_multilabel
from .baselines import combine_idf1, combine_pq, combine_stq, idf1_frag_stats, pq_stats, stq_stats
from .io import Manifest, load_manifest, load_sequence
from .taxonomy import load_taxonomy
from .ospa import OspaComponents
from .ospa_seg import (
    SCALE_BUCKETS,
    restrict_to_bucket,
    align_frames,
    frame_ospa_components,
    mean_components,
)
from .ospa_track import ospa2_components
from .taxonomy import Taxonomy, check_subset

WORKERS_ENV = "PANEVAL_WORKERS"
_FILTERS = ("all", "thing", "stuff", "known", "unknown")


@dataclass(frozen=True)
class EvalConfig:
    subset: str = "all"
    flatten_ospa: bool = False
    scale_breakdown: bool = False
    open_world: bool = False
    window: str = "union"
    workers: int = 1

    def echo(self, mode: str) -> dict:
        out = {
            "subset": self.subset,
            "open_world": self.open_world,
            "class_set": "present",
        }
        if mode == "ps":
            out["flatten"] = "on" if self.flatten_ospa else "off"
            out["scale_breakdown"] = self.scale_breakdown
        else:
            out["window"] = self.window
        return out


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _empty_like(gt: SequenceAnnotation) -> SequenceAnnotation:
    return SequenceAnnotation(gt.sequence_id, gt.height, gt.width, ())


def _load_pair(task: dict) -> tuple[SequenceAnnotation, SequenceAnnotation, list[str]]:
    taxonomy = task["taxonomy"]
    mode = "tracking" if task["mode"] == "pt" else "segmentation"
    gt = load_sequence(task["gt_path"], taxonomy, mode=mode, open_world=False)
    warnings = list(gt.warnings)
    if task["pred_path"] is None:
        pred = _empty_like(gt)
        warnings.append(f"sequence {gt.sequence_id!r}: no prediction file, treated as empty")
    else:
        pred = load_sequence(task["pred_path"], taxonomy, mode=mode, open_world=task["open_world"])
        warnings.extend(f"sequence {pred.sequence_id!r} (pred): {w}" for w in pred.warnings)
    return gt, pred, warnings


def _filtered_sums(frame_components: list[dict], taxonomy: Taxonomy) -> dict:
    sums = {}
    for f in _FILTERS:
        means = [
            mean_components(c for name, c in comp.items() if taxonomy.in_subset(name, f))
            for comp in frame_components
        ]
        sums[f] = [math.fsum(m.loc for m in means), math.fsum(m.card for m in means)]
    per_class: dict[str, list] = {}
    for comp in frame_components:
        for name, c in comp.items():
            acc = per_class.setdefault(name, [0.0, 0.0, 0])
            acc[0] += c.loc
            acc[1] += c.card
            acc[2] += 1
    return {"sums": sums, "per_class": per_class}


def _eval_ps_sequence(task: dict) -> dict:
    taxonomy: Taxonomy = task["taxonomy"]
    config: EvalConfig = task["config"]
    gt, pred, warnings = _load_pair(task)

    flat_pairs, align_warnings = align_frames(
        tuple(flatten_multilabel(f, taxonomy) for f in gt.frames),
        tuple(flatten_multilabel(f, taxonomy) for f in pred.frames),
    )
    warnings.extend(f"sequence {gt.sequence_id!r}: {w}" for w in align_warnings)

    if config.flatten_ospa:
        ospa_pairs = flat_pairs
    else:
        ospa_pairs, _ = align_frames(gt.frames, pred.frames)

    comps = [frame_ospa_components(g, p, taxonomy, config.subset) for g, p in ospa_pairs]
    out = {
        "id": gt.sequence_id,
        "frames": len(ospa_pairs),
        "ospa": _filtered_sums(comps, taxonomy),
        "pq": pq_stats(flat_pairs, taxonomy, config.subset),
        "warnings": warnings,
    }
    if config.scale_breakdown:
        out["scale"] = {}
        for bucket in SCALE_BUCKETS:
            bucket_comps = [
                frame_ospa_components(
                    restrict_to_bucket(g, bucket),
                    restrict_to_bucket(p, bucket),
                    taxonomy,
                    config.subset,
                )
                for g, p in ospa_pairs
            ]
            out["scale"][bucket] = _filtered_sums(bucket_comps, taxonomy)
    return out


def _eval_pt_sequence(task: dict) -> dict:
    taxonomy: Taxonomy = task["taxonomy"]
    config: EvalConfig = task["config"]
    gt, pred, warnings = _load_pair(task)

    per_class = ospa2_components(gt, pred, taxonomy, config.subset, config.window)
    flat_gt = replace(gt, frames=tuple(flatten_multilabel(f, taxonomy) for f in gt.frames))
    flat_pred = replace(pred, frames=tuple(flatten_multilabel(f, taxonomy) for f in pred.frames))
    track_terms, sem = stq_stats(flat_gt, flat_pred, taxonomy)
    idf_part = idf1_frag_stats(flat_gt, flat_pred, taxonomy)
    return {
        "id": gt.sequence_id,
        "frames": len(gt.frames),
        "ospa2": {name: [c.loc, c.card] for name, c in per_class.items()},
        "stq": (track_terms, sem),
        "idf1": idf_part,
        "warnings": warnings,
    }


def _run_tasks(tasks: list[dict], workers: int, fn) -> list[dict]:
    if workers <= 1 or len(tasks) <= 1:
        results = [fn(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, tasks))
    return sorted(results, key=lambda r: r["id"])


def _components_dict(loc: float, card: float) -> dict:
    return {"total": loc + card, "loc": loc, "card": card}


def _fold_ospa(parts: list[dict], key: str = "ospa") -> dict:
    total_frames = sum(p["frames"] for p in parts)
    block = {}
    for f in _FILTERS:
        loc = math.fsum(p[key]["sums"][f][0] for p in parts if key in p)
        card = math.fsum(p[key]["sums"][f][1] for p in parts if key in p)
        n = total_frames if total_frames else 1
        block[f] = _components_dict(loc / n, card / n)
    per_class: dict[str, list] = {}
    for p in parts:
        if key not in p:
            continue
        for name, (loc, card, count) in p[key]["per_class"].items():
            acc = per_class.setdefault(name, [0.0, 0.0, 0])
            acc[0] += loc
            acc[1] += card
            acc[2] += count
    block["frames"] = total_frames
    block["per_class"] = {
        name: dict(_components_dict(loc / count, card / count), frames=count)
        for name, (loc, card, count) in sorted(per_class.items())
    }
    return block


def _fold_scale(parts: list[dict]) -> dict:
    out = {}
    for bucket in SCALE_BUCKETS:
        shaped = [
            {"frames": p["frames"], "ospa": p["scale"][bucket]} for p in parts if "scale" in p
        ]
        out[bucket] = _fold_ospa(shaped)
    return out


def _fold_ospa2(parts: list[dict], taxonomy: Taxonomy) -> dict:
    n_seqs = len(parts) if parts else 1
    block = {}
    for f in _FILTERS:
        seq_means = []
        for p in parts:
            comps = [
                OspaComponents.from_parts(loc, card)
                for name, (loc, card) in p["ospa2"].items()
                if taxonomy.in_subset(name, f)
            ]
            seq_means.append(mean_components(comps))
        loc = math.fsum(m.loc for m in seq_means) / n_seqs
        card = math.fsum(m.card for m in seq_means) / n_seqs
        block[f] = _components_dict(loc, card)
    per_class: dict[str, list] = {}
    for p in parts:
        for name, (loc, card) in p["ospa2"].items():
            acc = per_class.setdefault(name, [0.0, 0.0, 0])
            acc[0] += loc
            acc[1] += card
            acc[2] += 1
    block["sequences"] = len(parts)
    block["per_class"] = {
        name: dict(_components_dict(loc / count, card / count), sequences=count)
        for name, (loc, card, count) in sorted(per_class.items())
    }
    return block


def _make_tasks(
    gt_manifest: Manifest,
    pred_manifest: Manifest,
    taxonomy: Taxonomy,
    config: EvalConfig,
    mode: str,
) -> tuple[list[dict], list[str]]:
    pred_paths = {e.sequence_id: e.path for e in pred_manifest.entries}
    warnings = []
    tasks = []
    for entry in gt_manifest.entries:
        pred_path = pred_paths.pop(entry.sequence_id, None)
        tasks.append(
            {
                "gt_path": entry.path,
                "pred_path": pred_path,
                "taxonomy": taxonomy,
                "config": config,
                "mode": mode,
                "open_world": config.open_world,
            }
        )
    for sid in sorted(pred_paths):
        warnings.append(f"prediction sequence {sid!r} has no ground-truth sequence and was ignored")
    return tasks, warnings


def _report_skeleton(mode: str, gt: Manifest, pred: Manifest, config: EvalConfig, paths: dict) -> dict:
    return {
        "schema_version": 1,
        "tool": {"name": "paneval", "version": __version__},
        "mode": mode,
        "dataset": {"gt": gt.dataset, "pred": pred.dataset},
        "config": {**paths, **config.echo(mode)},
    }


def evaluate_ps(gt_manifest_path, pred_manifest_path, taxonomy_path, config: EvalConfig) -> dict:
    """Panoptic segmentation report over two manifests."""
    check_subset(config.subset)
    taxonomy = load_taxonomy(taxonomy_path)
    gt_manifest = load_manifest(gt_manifest_path)
    pred_manifest = load_manifest(pred_manifest_path)
    tasks, warnings = _make_tasks(gt_manifest, pred_manifest, taxonomy, config, "ps")
    parts = _run_tasks(tasks, config.workers, _eval_ps_sequence)

    report = _report_skeleton(
        "ps", gt_manifest, pred_manifest, config,
        {"gt": str(gt_manifest_path), "pred": str(pred_manifest_path), "taxonomy": str(taxonomy_path)},
    )
    ospa_block = _fold_ospa(parts)
    if config.scale_breakdown:
        ospa_block["scale"] = _fold_scale(parts)
    pq_result = combine_pq([p["pq"] for p in parts], taxonomy)
    report["metrics"] = {
        "ospa_ps": ospa_block,
        "pq": {
            "all": vars(pq_result.all).copy(),
            "thing": vars(pq_result.thing).copy(),
            "stuff": vars(pq_result.stuff).copy(),
            "per_class": {n: vars(c).copy() for n, c in pq_result.per_class.items()},
        },
    }
    report["sequences"] = [{"id": p["id"], "frames": p["frames"]} for p in parts]
    report["warnings"] = sorted(warnings + [w for p in parts for w in p["warnings"]])
    return report


def evaluate_pt(gt_manifest_path, pred_manifest_path, taxonomy_path, config: EvalConfig) -> dict:
    """Panoptic tracking report over two manifests."""
    check_subset(config.subset)
    taxonomy = load_taxonomy(taxonomy_path)
    gt_manifest = load_manifest(gt_manifest_path)
    pred_manifest = load_manifest(pred_manifest_path)
    tasks, warnings = _make_tasks(gt_manifest, pred_manifest, taxonomy, config, "pt")
    parts = _run_tasks(tasks, config.workers, _eval_pt_sequence)

    report = _report_skeleton(
        "pt", gt_manifest, pred_manifest, config,
        {"gt": str(gt_manifest_path), "pred": str(pred_manifest_path), "taxonomy": str(taxonomy_path)},
    )
    stq_result = combine_stq([p["stq"] for p in parts])
    idf_result = combine_idf1([p["idf1"] for p in parts])
    report["metrics"] = {
        "ospa2_pt": _fold_ospa2(parts, taxonomy),
        "stq": {"stq": stq_result.stq, "aq": stq_result.aq, "sq": stq_result.sq},
        "idf1": {
            "idf1": idf_result.idf1,
            "idtp": idf_result.idtp,
            "idfp": idf_result.idfp,
            "idfn": idf_result.idfn,
        },
        "frag": idf_result.frag,
    }
    report["sequences"] = [{"id": p["id"], "frames": p["frames"]} for p in parts]
    report["warnings"] = sorted(warnings + [w for p in parts for w in p["warnings"]])
    return report
