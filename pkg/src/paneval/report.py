"""Report serialization: JSON as the primary form, CSV as a flat view.

The CSV holds one row per numeric/string leaf of the JSON report, keyed by
its dotted path, and floats are written with repr so both formats carry
exactly the same values. Reports are written atomically; a failed run never
leaves a partial file behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

FORMATS = ("json", "csv")


def _flatten(prefix: str, node, rows: list[tuple[str, str]]) -> None:
    if isinstance(node, dict):
        for key, value in node.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), value, rows)
    elif isinstance(node, (list, tuple)):
        for i, value in enumerate(node):
            _flatten(f"{prefix}[{i}]", value, rows)
    elif isinstance(node, bool):
        rows.append((prefix, "true" if node else "false"))
    elif isinstance(node, float):
        rows.append((prefix, repr(node)))
    elif node is None:
        rows.append((prefix, ""))
    else:
        rows.append((prefix, str(node)))


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def report_to_csv(report: dict) -> str:
    rows: list[tuple[str, str]] = []
    _flatten("", report, rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    writer.writerows(rows)
    return buf.getvalue()


def render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return report_to_json(report)
    if fmt == "csv":
        return report_to_csv(report)
    raise ValueError(f"unknown report format {fmt!r}")


def write_report(report: dict, path: str | Path, fmt: str) -> None:
    path = Path(path)
    text = render_report(report, fmt)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
