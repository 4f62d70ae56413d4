import csv
import json
import subprocess
import sys

from paneval.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def synth_dataset(tmp_path, capsys, *extra):
    out = tmp_path / "data"
    code, _, err = run_cli(
        ["synth", "--out", str(out), "--seed", "21", "--frames", "4",
         "--thing-classes", "2", "--stuff-classes", "1", "--with-pred", *extra],
        capsys,
    )
    assert code == 0, err
    return out


class TestSynthCommand:
    def test_deterministic_files(self, tmp_path, capsys):
        a = synth_dataset(tmp_path / "a", capsys, "--drop-prob", "0.3")
        b = synth_dataset(tmp_path / "b", capsys, "--drop-prob", "0.3")
        for name in ("taxonomy.json", "gt.json", "pred.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_drop_prob_one_empties_frames(self, tmp_path, capsys):
        out = synth_dataset(tmp_path, capsys, "--drop-prob", "1.0")
        pred = json.loads((out / "pred.json").read_text())
        assert all(not f["segments"] for f in pred["frames"])

    def test_generated_files_validate(self, tmp_path, capsys):
        out = synth_dataset(tmp_path, capsys, "--drop-prob", "0.2")
        for manifest in ("gt_manifest.json", "pred_manifest.json"):
            code, stdout, _ = run_cli(
                ["validate", "--input", str(out / manifest),
                 "--taxonomy", str(out / "taxonomy.json"), "--mode", "tracking"],
                capsys,
            )
            assert code == 0
            assert "OK" in stdout

    def test_infeasible_params_exit_2(self, tmp_path, capsys):
        code, _, err = run_cli(
            ["synth", "--out", str(tmp_path / "x"), "--seed", "1",
             "--height", "20", "--width", "20", "--objects", "30:30", "--size", "9:9"],
            capsys,
        )
        assert code == 2
        assert "infeasible-params" in err


class TestValidateCommand:
    def test_corrupted_counts_reported_with_frame(self, tmp_path, capsys):
        out = synth_dataset(tmp_path, capsys)
        gt = json.loads((out / "gt.json").read_text())
        gt["frames"][2]["segments"][0]["rle"]["counts"] = [1, 2, 3]
        (out / "gt.json").write_text(json.dumps(gt))
        code, stdout, err = run_cli(
            ["validate", "--input", str(out / "gt_manifest.json"),
             "--taxonomy", str(out / "taxonomy.json")],
            capsys,
        )
        assert code == 2
        assert "FAIL" in stdout
        errors = json.loads(err)["errors"]
        assert errors[0]["code"] == "malformed-counts"
        assert errors[0]["where"]["frame_id"] == 2

    def test_overlapping_things_rejected(self, tmp_path, capsys):
        out = synth_dataset(tmp_path, capsys)
        gt = json.loads((out / "gt.json").read_text())
        seg = gt["frames"][0]["segments"][0]
        clone = dict(seg, track_id=999)
        gt["frames"][0]["segments"].append(clone)
        (out / "gt.json").write_text(json.dumps(gt))
        code, _, err = run_cli(
            ["validate", "--input", str(out / "gt_manifest.json"),
             "--taxonomy", str(out / "taxonomy.json")],
            capsys,
        )
        assert code == 2
        assert json.loads(err)["errors"][0]["code"] == "thing-overlap"


class TestEvalCommands:
    def test_perfect_prediction_scores(self, tmp_path, capsys):
        out = synth_dataset(tmp_path, capsys)
        code, stdout, err = run_cli(
            ["eval-ps", "--gt", str(out / "gt_manifest.json"),
             "--pred", str(out / "gt_manifest.json"),
             "--taxonomy", str(out / "taxonomy.json")],
            capsys,
        )
        assert code == 0, err
        report = json.loads(stdout)
        assert report["metrics"]["ospa_ps"]["all"]["total"] == 0.0
        assert report["metrics"]["pq"]["all"]["pq"] == 1.0

        code, stdout, _ = run_cli(
            ["eval-pt", "--gt", str(out / "gt_manifest.json"),
             "--pred", str(out / "gt_manifest.json"),
             "--taxonomy", str(out / "taxonomy.json")],
            capsys,
        )
        assert code == 0
        report = json.loads(stdout)
        assert report["metrics"]["ospa2_pt"]["all"]["total"] == 0.0
        assert report["metrics"]["stq"]["stq"] == 1.0
        assert report["metrics"]["idf1"]["idf1"] == 1.0
        assert report["metrics"]["frag"] == 0

    def test_unknown_pred_class_strict_exit_2(self, tmp_path, capsys):
        out = synth_dataset(tmp_path, capsys)
        pred = json.loads((out / "pred.json").read_text())
        pred["frames"][0]["segments"][0]["class"] = "mystery-object"
        (out / "pred.json").write_text(json.dumps(pred))
        code, _, err = run_cli(
            ["eval-ps", "--gt", str(out / "gt_manifest.json"),
             "--pred", str(out / "pred_manifest.json"),
             "--taxonomy", str(out / "taxonomy.json"), "--subset", "known"],
            capsys,
        )
        assert code == 2
        assert json.loads(err)["errors"][0]["code"] == "unknown-class"

    def test_open_world_drops_and_reports(self, tmp_path, capsys):
        out = synth_dataset(tmp_path, capsys)
        pred = json.loads((out / "pred.json").read_text())
        pred["frames"][0]["segments"][0]["class"] = "mystery-object"
        (out / "pred.json").write_text(json.dumps(pred))
        code, stdout, _ = run_cli(
            ["eval-ps", "--gt", str(out / "gt_manifest.json"),
             "--pred", str(out / "pred_manifest.json"),
             "--taxonomy", str(out / "taxonomy.json"), "--open-world"],
            capsys,
        )
        assert code == 0
        report = json.loads(stdout)
        assert any("mystery-object" in w for w in report["warnings"])

    def test_report_file_and_format_parity(self, tmp_path, capsys):
        out = synth_dataset(tmp_path, capsys, "--drop-prob", "0.3")
        args = ["eval-ps", "--gt", str(out / "gt_manifest.json"),
                "--pred", str(out / "pred_manifest.json"),
                "--taxonomy", str(out / "taxonomy.json"), "--scale-breakdown"]
        code, _, _ = run_cli(args + ["--out", str(tmp_path / "r.json")], capsys)
        assert code == 0
        code, _, _ = run_cli(args + ["--out", str(tmp_path / "r.csv"), "--format", "csv"], capsys)
        assert code == 0

        report = json.loads((tmp_path / "r.json").read_text())
        with open(tmp_path / "r.csv", newline="") as fh:
            rows = {row["key"]: row["value"] for row in csv.DictReader(fh)}

        def walk(prefix, node):
            if isinstance(node, dict):
                for key, value in node.items():
                    yield from walk(f"{prefix}.{key}" if prefix else key, value)
            elif isinstance(node, list):
                for i, value in enumerate(node):
                    yield from walk(f"{prefix}[{i}]", value)
            else:
                yield prefix, node

        for key, value in walk("", report):
            assert key in rows
            if isinstance(value, bool):
                assert rows[key] == ("true" if value else "false")
            elif isinstance(value, float):
                assert float(rows[key]) == value
            elif value is None:
                assert rows[key] == ""
            else:
                assert rows[key] == str(value)

    def test_workers_do_not_change_report(self, tmp_path, capsys):
        out = tmp_path / "multi"
        for i in range(3):
            code, _, _ = run_cli(
                ["synth", "--out", str(out / f"s{i}"), "--seed", str(30 + i),
                 "--frames", "3", "--with-pred", "--drop-prob", "0.4",
                 "--sequence-id", f"seq-{i}"],
                capsys,
            )
            assert code == 0
        gt_entries = [(f"seq-{i}", f"s{i}/gt.json") for i in range(3)]
        pred_entries = [(f"seq-{i}", f"s{i}/pred.json") for i in range(3)]
        from paneval import save_manifest
        save_manifest("gt", gt_entries, out / "gt.json")
        save_manifest("pred", pred_entries, out / "pred.json")
        reports = {}
        for workers in (1, 2):
            code, _, _ = run_cli(
                ["eval-ps", "--gt", str(out / "gt.json"), "--pred", str(out / "pred.json"),
                 "--taxonomy", str(out / "s0" / "taxonomy.json"),
                 "--workers", str(workers), "--out", str(tmp_path / f"w{workers}.json")],
                capsys,
            )
            assert code == 0
            reports[workers] = (tmp_path / f"w{workers}.json").read_bytes()
        assert reports[1] == reports[2]

    def test_missing_pred_sequence_warned(self, tmp_path, capsys):
        out = synth_dataset(tmp_path, capsys)
        from paneval import save_manifest
        save_manifest("pred", [], out / "empty_manifest.json")
        code, stdout, _ = run_cli(
            ["eval-ps", "--gt", str(out / "gt_manifest.json"),
             "--pred", str(out / "empty_manifest.json"),
             "--taxonomy", str(out / "taxonomy.json")],
            capsys,
        )
        assert code == 0
        report = json.loads(stdout)
        assert report["metrics"]["ospa_ps"]["all"]["total"] == 1.0
        assert any("no prediction file" in w for w in report["warnings"])

    def test_flatten_flag_changes_only_stuff_terms(self, tmp_path, capsys):
        # Glass-overlap fixture: thing behind stuff; flattening the gt clips
        # only the stuff mask, so OSPA moves in the stuff classes alone.
        from paneval import FrameAnnotation, Segment, SequenceAnnotation, rect_mask, save_sequence
        from paneval import flatten_multilabel, load_taxonomy
        tax_path = tmp_path / "tax.json"
        tax_path.write_text(json.dumps({"classes": [
            {"name": "chair", "id": 0, "kind": "thing", "split": "known"},
            {"name": "glass", "id": 1, "kind": "stuff", "split": "known"},
        ], "aliases": {}}))
        tax = load_taxonomy(tax_path)
        chair = Segment(rect_mask(16, 16, 4, 4, 6, 6), "chair", 1, layer=1)
        glass = Segment(rect_mask(16, 16, 0, 0, 16, 16), "glass", None, layer=0)
        gt_frame = FrameAnnotation(0, 16, 16, (glass, chair))
        pred_frame = flatten_multilabel(gt_frame, tax)
        gt = SequenceAnnotation("s", 16, 16, (gt_frame,))
        pred = SequenceAnnotation("s", 16, 16, (pred_frame,))
        save_sequence(gt, tmp_path / "gt.json")
        save_sequence(pred, tmp_path / "pred.json")
        from paneval import save_manifest
        save_manifest("gt", [("s", "gt.json")], tmp_path / "gm.json")
        save_manifest("pred", [("s", "pred.json")], tmp_path / "pm.json")
        results = {}
        for flatten in ("off", "on"):
            code, stdout, err = run_cli(
                ["eval-ps", "--gt", str(tmp_path / "gm.json"), "--pred", str(tmp_path / "pm.json"),
                 "--taxonomy", str(tax_path), "--flatten", flatten],
                capsys,
            )
            assert code == 0, err
            results[flatten] = json.loads(stdout)["metrics"]["ospa_ps"]
        assert results["on"]["per_class"]["glass"]["total"] == 0.0
        assert results["off"]["per_class"]["glass"]["total"] > 0.0
        assert results["on"]["per_class"]["chair"] == results["off"]["per_class"]["chair"]

    def test_workers_env_default(self, monkeypatch):
        from paneval.runner import default_workers
        monkeypatch.delenv("PANEVAL_WORKERS", raising=False)
        assert default_workers() == 1
        monkeypatch.setenv("PANEVAL_WORKERS", "6")
        assert default_workers() == 6
        monkeypatch.setenv("PANEVAL_WORKERS", "junk")
        assert default_workers() == 1

    def test_console_script_runs(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "paneval", "--version"], capture_output=True, text=True
        )
        assert proc.returncode == 0
        assert "paneval" in proc.stdout
