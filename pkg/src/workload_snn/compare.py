"""Model comparison: normality gate, omnibus test, post-hoc table and effect sizes."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ParseError, SchemaError, ShapeError
from .io import write_json
from .stats import (
    ModelAccuracySummary,
    bootstrap_accuracies,
    cliffs_delta,
    conover_posthoc,
    kruskal_wallis,
    one_way_anova,
    pairs,
    shapiro_wilk,
)

DIFFERENCE_CONVENTION = "bootstrap mean(model1) - bootstrap mean(model2)"
PAIRWISE_COLUMNS = ("model1", "model2", "difference", "abs_delta", "delta", "magnitude", "p_corrected")


@dataclass
class ComparisonReport:
    models: list
    samples: dict
    normality: dict
    branch: str
    reason: str
    omnibus: dict
    pairwise: list = field(default_factory=list)
    alpha: float = 0.05
    seed: int = 0

    def pair(self, model1: str, model2: str) -> dict:
        for row in self.pairwise:
            if (row["model1"], row["model2"]) == (model1, model2):
                return row
        raise KeyError((model1, model2))

    def to_dict(self, include_samples: bool = True) -> dict:
        doc = {
            "models": self.models,
            "alpha": self.alpha,
            "seed": self.seed,
            "normality": self.normality,
            "branch": self.branch,
            "reason": self.reason,
            "omnibus": self.omnibus,
            "difference_convention": DIFFERENCE_CONVENTION,
            "pairwise": self.pairwise,
        }
        if include_samples:
            doc["samples"] = {k: v.tolist() for k, v in self.samples.items()}
        return doc


def _as_samples(inputs, n, seed) -> dict:
    if isinstance(inputs, Mapping):
        items = list(inputs.items())
    else:
        items = [(s.model, s) for s in inputs]
    samples = {}
    for name, value in items:
        if name in samples:
            raise SchemaError(f"model {name!r} listed twice")
        if isinstance(value, ModelAccuracySummary):
            samples[name] = bootstrap_accuracies(value, n, seed)
        else:
            samples[name] = np.asarray(value, dtype=float).reshape(-1)
    return samples


def compare_models(inputs, alpha: float = 0.05, seed: int = 0, n: int = 1000) -> ComparisonReport:
    """Compare models given as summaries (bootstrapped) or raw accuracy vectors.

    ``inputs`` is a sequence of :class:`ModelAccuracySummary` or a mapping from
    model name to either a summary or an array of accuracies. ANOVA runs only
    when every model passes Shapiro-Wilk at ``alpha``; otherwise Kruskal-Wallis
    with Bonferroni-corrected Conover comparisons. Cliff's delta is reported
    for every pair either way.
    """
    samples = _as_samples(inputs, n, seed)
    names = list(samples)
    if len(names) < 2:
        raise ShapeError("comparison needs at least two models")
    normality = {}
    for name in names:
        w, p = shapiro_wilk(samples[name])
        normality[name] = {"W": w, "p": p, "normal": bool(p > alpha)}
    failing = [name for name in names if not normality[name]["normal"]]
    groups = [samples[name] for name in names]

    if not failing:
        branch = "parametric"
        reason = f"all {len(names)} samples pass Shapiro-Wilk (p > {alpha})"
        f, p = one_way_anova(groups)
        omnibus = {"test": "one-way ANOVA", "statistic": f, "p": p}
        post = None
    else:
        branch = "nonparametric"
        reason = f"normality rejected (p <= {alpha}) for: {', '.join(failing)}"
        h, p = kruskal_wallis(groups)
        omnibus = {"test": "Kruskal-Wallis", "statistic": h, "p": p}
        post = conover_posthoc(groups, "bonferroni")

    rows = []
    for i, j in pairs(names):
        delta, magnitude = cliffs_delta(groups[i], groups[j])
        rows.append({
            "model1": names[i],
            "model2": names[j],
            "difference": float(groups[i].mean() - groups[j].mean()),
            "p_corrected": None if post is None else float(post[i, j]),
            "delta": delta,
            "abs_delta": abs(delta),
            "magnitude": magnitude,
        })
    return ComparisonReport(names, samples, normality, branch, reason, omnibus, rows, alpha, seed)


# --------------------------------------------------------------------------- files


def read_model_table(path) -> dict:
    """Parse ``model,mean_accuracy,std`` summaries or ``model,fold,accuracy`` raw vectors."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        reader.fieldnames = header
        if {"model", "mean_accuracy", "std"} <= set(header):
            kind = "summary"
        elif {"model", "fold", "accuracy"} <= set(header):
            kind = "raw"
        else:
            raise SchemaError(f"{path}: expected model,mean_accuracy,std or model,fold,accuracy columns")
        out: dict = {}
        for row_no, row in enumerate(reader, start=2):
            name = (row.get("model") or "").strip()
            if not name:
                raise ParseError(f"{path}: empty model name", row_no, "model")
            if kind == "summary":
                values = {}
                for col in ("mean_accuracy", "std"):
                    try:
                        values[col] = float(row[col])
                    except (TypeError, ValueError):
                        raise ParseError(f"{path}: not a number: {row[col]!r}", row_no, col) from None
                if name in out:
                    raise ParseError(f"{path}: duplicate model {name!r}", row_no, "model")
                out[name] = ModelAccuracySummary(name, values["mean_accuracy"], values["std"])
            else:
                try:
                    acc = float(row["accuracy"])
                except (TypeError, ValueError):
                    raise ParseError(f"{path}: not a number: {row['accuracy']!r}", row_no, "accuracy") from None
                out.setdefault(name, []).append(acc)
    if kind == "raw":
        out = {k: np.asarray(v) for k, v in out.items()}
    return out


def write_model_table(path, summaries: Sequence[ModelAccuracySummary]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "mean_accuracy", "std"])
        for s in summaries:
            w.writerow([s.model, repr(float(s.mean)), repr(float(s.std))])


def write_pairwise_csv(path, report: ComparisonReport) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PAIRWISE_COLUMNS)
        for row in report.pairwise:
            w.writerow([
                "NA" if row[c] is None else (repr(row[c]) if isinstance(row[c], float) else row[c])
                for c in PAIRWISE_COLUMNS
            ])


def write_report(out_dir, report: ComparisonReport, stem: str = "comparison") -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"{stem}.json"
    csv_path = out_dir / f"{stem}_pairwise.csv"
    write_json(json_path, report.to_dict())
    write_pairwise_csv(csv_path, report)
    return json_path, csv_path
