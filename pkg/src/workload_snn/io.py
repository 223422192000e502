"""Readers and writers for the on-disk formats.

* raw signal CSV: ``t_s,value``, one file per channel
* task-span manifest: JSON array of ``{task_id, start_s, end_s, label}``
* feature CSV: ``participant,task,window,label,<feature...>``
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParseError, SchemaError
from .features import FeatureMatrix, TaskSpan
from .signal import Signal

MISSING_TOKENS = {"", "na", "nan", "n/a", "null", "none"}
META_COLUMNS = ("participant", "task", "window", "label")


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "NA"
    return repr(float(x))


def write_signal_csv(path, sig: Signal, decimals: int = 6) -> None:
    t = sig.t0 + np.arange(len(sig)) / sig.fs
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t_s,value\n")
        fmt = f"%.{decimals}f,%.{decimals}f\n"
        fh.writelines(fmt % (ti, vi) for ti, vi in zip(t.tolist(), sig.samples.tolist()))


def read_signal_csv(path, channel: str | None = None) -> Signal:
    path = Path(path)
    channel = channel or path.stem
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["t_s", "value"]:
            raise SchemaError(f"{path}: expected header 't_s,value', got {header}")
        t, v = [], []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t.append(float(row[0]))
                v.append(float(row[1]))
            except (ValueError, IndexError):
                raise ParseError(f"{path}: non-numeric sample", row=row_no, column=None) from None
    if len(t) < 2:
        raise SchemaError(f"{path}: need at least two samples to infer the sampling rate")
    t = np.asarray(t)
    # whole-span estimate: written timestamps are rounded, single steps are not precise enough
    step = float(t[-1] - t[0]) / (t.size - 1)
    if not step > 0 or np.max(np.abs(np.diff(t) - step)) > 0.01 * step + 1e-6:
        raise ParseError(f"{path}: samples are not uniformly spaced")
    fs = round(1.0 / step, 3)
    return Signal(np.asarray(v), fs, channel, float(t[0]))


def write_manifest(path, spans: Sequence[TaskSpan]) -> None:
    doc = [
        {"task_id": s.task_id, "start_s": s.start_s, "end_s": s.end_s, "label": s.label}
        for s in spans
    ]
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_manifest(path) -> list[TaskSpan]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})", row=exc.lineno) from None
    if not isinstance(doc, list):
        raise SchemaError(f"{path}: manifest must be a JSON array")
    spans = []
    for i, entry in enumerate(doc):
        try:
            label = entry["label"]
            if label is not None and label not in (0, 1):
                raise SchemaError(f"{path}: entry {i} label must be 0, 1 or null")
            span = TaskSpan(str(entry["task_id"]), float(entry["start_s"]), float(entry["end_s"]), label)
        except (KeyError, TypeError, ValueError):
            raise SchemaError(f"{path}: entry {i} needs task_id, start_s, end_s, label") from None
        if span.end_s <= span.start_s:
            raise SchemaError(f"{path}: entry {i} ends before it starts")
        spans.append(span)
    return spans


def write_feature_csv(path, matrix: FeatureMatrix) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(META_COLUMNS) + matrix.feature_names)
        for i in range(len(matrix)):
            writer.writerow(
                [matrix.participants[i], matrix.tasks[i], int(matrix.windows[i]), int(matrix.labels[i])]
                + [_fmt(x) for x in matrix.values[i]]
            )


def ingest_feature_csv(path, required_features: Sequence[str] | None = None) -> FeatureMatrix:
    """Read a feature table; ``NA``-like cells become ``nan`` (missing).

    Only ``label`` is mandatory among the metadata columns; every column that
    is not metadata is kept as a feature, in file order.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise SchemaError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if "label" not in header:
            raise SchemaError(f"{path}: missing 'label' column")
        features = [h for h in header if h not in META_COLUMNS]
        missing = [f for f in (required_features or ()) if f not in features]
        if missing:
            raise SchemaError(f"{path}: missing feature columns {missing}")
        col = {h: i for i, h in enumerate(header)}
        labels, parts, tasks, wins, rows = [], [], [], [], []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: expected {len(header)} cells, got {len(row)}", row=row_no)
            cell = row[col["label"]].strip()
            if cell not in ("0", "1"):
                raise ParseError(f"{path}: label must be 0 or 1, got {cell!r}", row=row_no, column="label")
            labels.append(int(cell))
            parts.append(row[col["participant"]].strip() if "participant" in col else "")
            tasks.append(row[col["task"]].strip() if "task" in col else "")
            if "window" in col:
                try:
                    wins.append(int(row[col["window"]]))
                except ValueError:
                    raise ParseError(f"{path}: window index must be an integer", row=row_no, column="window") from None
            else:
                wins.append(len(wins))
            values = []
            for name in features:
                text = row[col[name]].strip()
                if text.lower() in MISSING_TOKENS:
                    values.append(math.nan)
                    continue
                try:
                    values.append(float(text))
                except ValueError:
                    raise ParseError(f"{path}: non-numeric cell {text!r}", row=row_no, column=name) from None
            rows.append(values)
    values = np.asarray(rows, dtype=float).reshape(len(rows), len(features))
    return FeatureMatrix(values, features, labels, parts, tasks, wins)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
