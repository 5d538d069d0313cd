"""CSV and JSON benchmark reports."""

from __future__ import annotations

import csv
import io
import json
from importlib import resources
from pathlib import Path

import jsonschema

COLUMNS = [
    "config",
    "method",
    "level",
    "mode",
    "selection",
    "video",
    "status",
    "rank",
    "n_videos",
    "n_frames",
    "j_mean",
    "j_recall",
    "j_decay",
    "j_seq_recall",
    "f_mean",
    "f_recall",
    "f_decay",
    "f_seq_recall",
    "t_proxy",
    "svx_volume",
]
INT_COLUMNS = {"level", "rank", "n_videos", "n_frames"}
FLOAT_COLUMNS = {
    "j_mean", "j_recall", "j_decay", "j_seq_recall",
    "f_mean", "f_recall", "f_decay", "f_seq_recall",
    "t_proxy", "svx_volume",
}
NOTES = {
    "t_proxy": "PROXY for temporal instability: mean (1 - J) between consecutive predicted masks; not the DAVIS T measure",
    "j_recall": "fraction of frames with J > 0.5 (per video), averaged over videos in aggregate rows",
    "j_seq_recall": "fraction of videos whose J mean exceeds 0.5 (aggregate rows only)",
    "svx_volume": "mean supervoxel size in voxels at the supervoxel processing resolution",
    "rank": "rank of aggregate rows by J mean (1 = best)",
}
SCHEMA_VERSION = 1


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def table_rows(rows: list[dict], aggregate: list[dict]) -> list[dict]:
    return [{c: r.get(c) for c in COLUMNS} for r in [*rows, *aggregate]]


def to_csv(rows: list[dict], aggregate: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in table_rows(rows, aggregate):
        writer.writerow([_cell(r[c]) for c in COLUMNS])
    return buf.getvalue()


def _parse(column: str, text: str):
    # an empty cell is a missing number, but a legitimately empty string
    if column in INT_COLUMNS:
        return int(text) if text else None
    if column in FLOAT_COLUMNS:
        return float(text) if text else None
    return text


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [{c: _parse(c, r[c]) for c in COLUMNS} for r in reader]


def to_json(rows: list[dict], aggregate: list[dict], config: dict, dataset: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset": dataset,
        "config": config,
        "columns": COLUMNS,
        "notes": NOTES,
        "rows": [{c: r.get(c) for c in COLUMNS} for r in rows],
        "aggregate": [{c: r.get(c) for c in COLUMNS} for r in aggregate],
    }


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("report_schema.json").read_text(encoding="utf-8"))


def validate_report(doc: dict):
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match the report schema."""
    jsonschema.validate(doc, load_schema())


def write_reports(result, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "report.csv"
    json_path = out / "report.json"
    csv_path.write_text(to_csv(result.rows, result.aggregate), encoding="utf-8")
    doc = to_json(result.rows, result.aggregate, result.config.to_dict(), result.dataset)
    json_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return csv_path, json_path


def format_table(aggregate: list[dict]) -> str:
    """Plain-text summary in the layout of a results table: one column per config."""
    cols = sorted(aggregate, key=lambda a: (a["rank"] is None, a["rank"] or 0, a["config"]))
    fields = [
        ("Rank", "rank"),
        ("J mean", "j_mean"),
        ("J recall", "j_recall"),
        ("J decay", "j_decay"),
        ("F mean", "f_mean"),
        ("F recall", "f_recall"),
        ("F decay", "f_decay"),
        ("T proxy", "t_proxy"),
        ("Svx volume", "svx_volume"),
    ]

    def fmt(key, v):
        if v is None:
            return "n/a"
        if key == "rank":
            return str(v)
        if key == "svx_volume":
            return f"{v:.0f}"
        return f"{v:.3f}"

    header = ["Measure"] + [c["config"] for c in cols]
    lines = [header] + [[label] + [fmt(key, c[key]) for c in cols] for label, key in fields]
    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    return "\n".join("  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in lines)
