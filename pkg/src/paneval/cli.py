"""Command-line interface.

Subcommands: eval-ps, eval-pt, validate, synth. Exit codes: 0 success,
2 validation or configuration failure (with a machine-readable error list
on stderr), 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import ValidationError, ValidationErrorGroup
from .io import save_manifest, save_sequence, validate_manifest
from .report import FORMATS, render_report, write_report
from .runner import EvalConfig, default_workers, evaluate_ps, evaluate_pt
from .synth import PerturbParams, SynthParams, generate, perturb, synth_taxonomy
from .taxonomy import SUBSETS, load_taxonomy


def _int_pair(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    return (int(lo), int(hi or lo))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paneval", description=__doc__)
    parser.add_argument("--version", action="version", version=f"paneval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_eval_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--gt", required=True, help="ground-truth manifest JSON")
        p.add_argument("--pred", required=True, help="prediction manifest JSON")
        p.add_argument("--taxonomy", required=True, help="taxonomy JSON")
        p.add_argument("--subset", choices=SUBSETS, default="all")
        p.add_argument("--open-world", action="store_true",
                       help="drop and report unresolved predicted class names instead of failing")
        p.add_argument("--workers", type=int, default=None,
                       help=f"parallel sequence workers (default $PANEVAL_WORKERS or 1)")
        p.add_argument("--out", help="report file (default: stdout)")
        p.add_argument("--format", choices=FORMATS, default="json")

    ps = sub.add_parser("eval-ps", help="panoptic segmentation metrics (OSPA + PQ)")
    add_eval_args(ps)
    ps.add_argument("--scale-breakdown", action="store_true",
                    help="also evaluate per mask-scale bucket (small/medium/large)")
    ps.add_argument("--flatten", choices=("on", "off"), default="off",
                    help="flatten multi-label gt before the OSPA pass "
                         "(threshold metrics always run on flattened input)")

    pt = sub.add_parser("eval-pt", help="panoptic tracking metrics (OSPA2 + STQ/IDF1/Frag)")
    add_eval_args(pt)
    pt.add_argument("--window", choices=("union", "sequence"), default="union",
                    help="time-averaging domain for track distances")

    val = sub.add_parser("validate", help="check annotation files against the schema and invariants")
    val.add_argument("--input", required=True, help="manifest JSON")
    val.add_argument("--taxonomy", required=True)
    val.add_argument("--mode", choices=("segmentation", "tracking"), default="segmentation")
    val.add_argument("--open-world", action="store_true")

    syn = sub.add_parser("synth", help="write synthetic gt (and optionally perturbed pred) files")
    syn.add_argument("--out", required=True, help="output directory")
    syn.add_argument("--seed", type=int, required=True)
    syn.add_argument("--frames", type=int, default=10)
    syn.add_argument("--height", type=int, default=120)
    syn.add_argument("--width", type=int, default=160)
    syn.add_argument("--thing-classes", type=int, default=2)
    syn.add_argument("--stuff-classes", type=int, default=1)
    syn.add_argument("--objects", type=_int_pair, default=(2, 4), metavar="LO:HI")
    syn.add_argument("--size", type=_int_pair, default=(8, 16), metavar="LO:HI")
    syn.add_argument("--motion-step", type=int, default=1)
    syn.add_argument("--sequence-id", default="synth-000")
    syn.add_argument("--with-pred", action="store_true", help="also write an unperturbed prediction")
    syn.add_argument("--perturb-seed", type=int, default=None)
    syn.add_argument("--drop-prob", type=float, default=0.0)
    syn.add_argument("--shift-px", type=int, default=0)
    syn.add_argument("--iou-jitter", type=int, default=0)
    syn.add_argument("--id-switch-prob", type=float, default=0.0)
    syn.add_argument("--class-flip-prob", type=float, default=0.0)
    return parser


def _emit_errors(errors: list[dict]) -> None:
    print(json.dumps({"errors": errors}, indent=2), file=sys.stderr)


def _emit_report(report: dict, out: str | None, fmt: str) -> None:
    if out:
        write_report(report, out, fmt)
    else:
        sys.stdout.write(render_report(report, fmt))


def _cmd_eval(args, mode: str) -> int:
    workers = args.workers if args.workers is not None else default_workers()
    config = EvalConfig(
        subset=args.subset,
        flatten_ospa=(mode == "ps" and args.flatten == "on"),
        scale_breakdown=bool(getattr(args, "scale_breakdown", False)),
        open_world=args.open_world,
        window=getattr(args, "window", "union"),
        workers=workers,
    )
    evaluate = evaluate_ps if mode == "ps" else evaluate_pt
    report = evaluate(args.gt, args.pred, args.taxonomy, config)
    _emit_report(report, args.out, args.format)
    return 0


def _cmd_validate(args) -> int:
    taxonomy = load_taxonomy(args.taxonomy)
    per_file = validate_manifest(args.input, taxonomy, mode=args.mode, open_world=args.open_world)
    failures = []
    for sid in sorted(per_file):
        errors = per_file[sid]
        status = "OK" if not errors else f"FAIL ({len(errors)} violations)"
        print(f"{status:>22}  {sid}")
        failures.extend(dict(e, sequence=sid) for e in errors)
    if failures:
        _emit_errors(failures)
        return 2
    return 0


def _cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = SynthParams(
        seed=args.seed,
        frames=args.frames,
        height=args.height,
        width=args.width,
        thing_classes=args.thing_classes,
        stuff_classes=args.stuff_classes,
        objects_per_class=args.objects,
        object_size=args.size,
        motion_step=args.motion_step,
        sequence_id=args.sequence_id,
    )
    taxonomy = synth_taxonomy(params)
    gt = generate(params)

    tax_path = out_dir / "taxonomy.json"
    tax_path.write_text(
        json.dumps(
            {
                "classes": [
                    {"name": c.name, "id": c.id, "kind": c.kind, "split": c.split}
                    for c in taxonomy.classes
                ],
                "aliases": {},
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    save_sequence(gt, out_dir / "gt.json")
    save_manifest("synth-gt", [(gt.sequence_id, "gt.json")], out_dir / "gt_manifest.json")

    perturbing = any(
        (args.drop_prob, args.shift_px, args.iou_jitter, args.id_switch_prob, args.class_flip_prob)
    )
    if perturbing or args.with_pred:
        noise = PerturbParams(
            drop_prob=args.drop_prob,
            shift_px=args.shift_px,
            iou_jitter=args.iou_jitter,
            id_switch_prob=args.id_switch_prob,
            class_flip_prob=args.class_flip_prob,
        )
        perturb_seed = args.perturb_seed if args.perturb_seed is not None else args.seed + 1
        pred = perturb(gt, noise, perturb_seed, taxonomy)
        save_sequence(pred, out_dir / "pred.json")
        save_manifest("synth-pred", [(pred.sequence_id, "pred.json")], out_dir / "pred_manifest.json")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "eval-ps":
            return _cmd_eval(args, "ps")
        if args.command == "eval-pt":
            return _cmd_eval(args, "pt")
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "synth":
            return _cmd_synth(args)
        parser.error(f"unknown command {args.command!r}")
    except ValidationErrorGroup as group:
        _emit_errors(group.to_list())
        return 2
    except ValidationError as err:
        _emit_errors([err.to_dict()])
        return 2
    return 0


def entrypoint() -> None:  # console script
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
