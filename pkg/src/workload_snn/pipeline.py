"""End-to-end orchestration: raw recordings -> features -> per-participant models -> summaries."""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .baseline import grid_search_lr, stratified_group_split, stratified_split, train_lr
from .errors import DataError, InsufficientBeatsError, InvalidSpecError, SchemaError, SignalLengthError
from .features import (
    EEG_CHANNELS,
    FEATURE_SETS,
    FeatureMatrix,
    LabeledWindow,
    WindowSpec,
    columns_for_feature_set,
    detect_ppg_peaks,
    eda_features,
    eeg_band_powers,
    eeg_features,
    fit_scaler,
    impute_missing,
    segment_windows,
    slice_signal,
    temp_features,
    hrv_features,
    variance_threshold,
)
from .io import ingest_feature_csv, read_json, read_manifest, read_signal_csv, write_feature_csv, write_json
from .metrics import compute_metrics
from .signal import EegPreprocessor
from .snn import TrainConfig, grid_search_snn, predict
from .snn.training import DEFAULT_GRID, fit_snn

MODELS = ("lr", "hybrid_snn", "bio_snn")
SPLITS = ("window", "task")
# selective sparse first layer: a hidden unit needs several strong input spikes to fire
DEFAULT_SNN = TrainConfig(gain=30.0, p_conn=0.1, fc1_mean=0.5)
HRV_NAMES = ("HRV_MeanNN", "HRV_SDNN", "HRV_RMSSD", "HRV_LFn", "HRV_HFn", "HRV_LFHF")


# --------------------------------------------------------------------------- extraction


@dataclass
class ParticipantFeatures:
    rows: list
    window_counts: dict
    missing_windows: dict = field(default_factory=dict)


def participant_dirs(root) -> list[Path]:
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"input directory {root} does not exist")
    dirs = sorted(p for p in root.iterdir() if p.is_dir() and (p / "manifest.json").is_file())
    if not dirs:
        raise DataError(f"no participant folders with a manifest.json under {root}")
    return dirs


def _read_channels(pdir: Path, names) -> dict:
    out = {}
    for name in names:
        path = pdir / f"{name}.csv"
        if not path.is_file():
            raise DataError(f"{path} is missing")
        out[name] = read_signal_csv(path, name)
    return out


def extract_participant(pdir, feature_set: str = "multimodal", window: WindowSpec = WindowSpec(),
                        preprocessor: EegPreprocessor | None = None) -> ParticipantFeatures:
    """Filter, reference, window and featurise one participant's recordings.

    A labeled ``null`` span in the manifest is treated as the resting
    baseline: EEG band powers become log ratios against its band powers.
    Windows whose PPG yields too few beats get missing HRV values.
    """
    pdir = Path(pdir)
    pid = pdir.name
    spans = read_manifest(pdir / "manifest.json")
    preprocessor = preprocessor or EegPreprocessor()
    eeg_raw = _read_channels(pdir, EEG_CHANNELS)
    eeg = dict(zip(EEG_CHANNELS, preprocessor([eeg_raw[ch] for ch in EEG_CHANNELS])))
    signals = dict(eeg)
    multimodal = feature_set == "multimodal"
    if multimodal:
        signals.update(_read_channels(pdir, ("PPG", "EDA", "TEMP")))

    baseline = None
    rest = [s for s in spans if s.is_baseline]
    if rest:
        b = rest[0]
        cut = {ch: slice_signal(eeg[ch], b.start_s, b.duration) for ch in EEG_CHANNELS}
        baseline = eeg_band_powers(cut)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        windows = segment_windows(signals, spans, window)
    for w in caught:
        warnings.warn(f"{pid}: {w.message}", stacklevel=2)

    rows, counts, missing = [], {}, {}
    for win in windows:
        feats = eeg_features({ch: win.signals[ch] for ch in EEG_CHANNELS}, feature_set, baseline=baseline)
        if multimodal:
            try:
                feats.update(hrv_features(detect_ppg_peaks(win.signals["PPG"])))
            except (InsufficientBeatsError, SignalLengthError):
                feats.update({name: math.nan for name in HRV_NAMES})
                missing[win.task_id] = missing.get(win.task_id, 0) + 1
            feats.update(eda_features(win.signals["EDA"]))
            feats.update(temp_features(win.signals["TEMP"]))
        rows.append(LabeledWindow(feats, win.label, pid, win.task_id, win.window_index))
        counts[win.task_id] = counts.get(win.task_id, 0) + 1
    return ParticipantFeatures(rows, counts, missing)


def _extract_job(args):
    return extract_participant(*args)


def extract_features(input_dir, feature_set: str = "multimodal", window: WindowSpec = WindowSpec(),
                     min_variance: float = 1e-8, jobs: int = 1):
    """Feature matrix plus a provenance document for every participant under ``input_dir``."""
    if feature_set not in FEATURE_SETS:
        raise InvalidSpecError(f"unknown feature set {feature_set!r}")
    dirs = participant_dirs(input_dir)
    args = [(d, feature_set, window) for d in dirs]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            parts = list(pool.map(_extract_job, args))
    else:
        parts = [_extract_job(a) for a in args]
    rows = [r for p in parts for r in p.rows]
    if not rows:
        raise DataError("no windows were produced; are the task spans shorter than the window?")
    matrix = FeatureMatrix.from_rows(rows)
    n_missing = int(np.isnan(matrix.values).sum())
    matrix = impute_missing(matrix)
    matrix, removed = variance_threshold(matrix, min_variance)
    provenance = {
        "version": __version__,
        "feature_set": feature_set,
        "window": {"window_s": window.window_s, "overlap_frac": window.overlap_frac, "step_s": window.step_s},
        "participants": {d.name: {"windows_per_task": p.window_counts, "windows_without_beats": p.missing_windows}
                         for d, p in zip(dirs, parts)},
        "n_rows": len(matrix),
        "imputed_cells": n_missing,
        "removed_columns": removed,
        "min_variance": min_variance,
        "feature_names": matrix.feature_names,
    }
    return matrix, provenance


def write_extraction(out_dir, matrix: FeatureMatrix, provenance: dict) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path, prov_path = out_dir / "features.csv", out_dir / "provenance.json"
    write_feature_csv(csv_path, matrix)
    write_json(prov_path, provenance)
    return csv_path, prov_path


# --------------------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainSettings:
    model: str = "bio_snn"
    feature_set: str = "multimodal"
    test_frac: float = 0.2
    split: str = "window"
    k: int = 5
    lambdas: tuple = (0.01, 0.1, 1.0, 10.0)
    snn_grid: dict = field(default_factory=lambda: dict(DEFAULT_GRID))
    snn: TrainConfig = DEFAULT_SNN
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidSpecError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.feature_set not in FEATURE_SETS:
            raise InvalidSpecError(f"unknown feature set {self.feature_set!r}; choose from {FEATURE_SETS}")
        if self.split not in SPLITS:
            raise InvalidSpecError(f"unknown split {self.split!r}; choose from {SPLITS}")


def _participant_seed(seed: int, pid: str) -> int:
    digest = [ord(c) for c in pid]
    return int(np.random.SeedSequence([int(seed)] + digest).generate_state(1)[0])


def train_participant(matrix: FeatureMatrix, pid: str, settings: TrainSettings):
    """Split, select hyper-parameters by CV on the training part, refit, score the held-out part.

    ``settings.split`` chooses between a stratified split over windows and
    one that holds out whole tasks; with overlapping windows only the latter
    keeps held-out windows free of shared samples with the training windows.

    Returns ``(checkpoint_doc, report_doc)``.
    """
    part = matrix.for_participant(pid)
    y = part.labels
    if np.unique(y).size < 2:
        raise DataError(f"participant {pid}: only one class present")
    seed = _participant_seed(settings.seed, pid)
    if settings.split == "task":
        train_idx, test_idx = stratified_group_split(y, part.tasks, settings.test_frac, seed)
    else:
        train_idx, test_idx = stratified_split(y, settings.test_frac, seed)
    Xtr, ytr = part.values[train_idx], y[train_idx]
    Xte, yte = part.values[test_idx], y[test_idx]
    scaler = fit_scaler(Xtr, on_degenerate="unit")
    Ztr, Zte = scaler.transform(Xtr), scaler.transform(Xte)

    try:
        if settings.model == "lr":
            lam, grid = grid_search_lr(Xtr, ytr, settings.lambdas, settings.k, seed)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = train_lr(Ztr, ytr, lam)
            pred_tr, pred_te = model.predict(Ztr), model.predict(Zte)
            params = {"lambda": lam}
            checkpoint = model.to_dict()
            history = None
        else:
            mode = "bio" if settings.model == "bio_snn" else "hybrid"
            base = replace(settings.snn, seed=seed)
            best, grid = grid_search_snn(Xtr, ytr, settings.snn_grid, settings.k, seed, mode, base)
            model, report = fit_snn(mode, Ztr, ytr, best)
            pred_tr, pred_te = predict(model, Ztr), predict(model, Zte)
            params = best.to_dict()
            checkpoint = model.to_dict()
            history = report.to_dict()
    except DataError as exc:
        raise type(exc)(f"participant {pid}: {exc}") from None

    checkpoint = {"model": settings.model, "participant": pid, "params": checkpoint,
                  "scaler": scaler.to_dict() | {"feature_names": list(part.feature_names)}}
    report = {
        "model": settings.model,
        "participant": pid,
        "feature_set": settings.feature_set,
        "seed": settings.seed,
        "n_train": int(train_idx.size),
        "n_test": int(test_idx.size),
        "selected": params,
        "grid": grid.to_dict(),
        "train_metrics": compute_metrics(ytr, pred_tr).to_dict(),
        "test_metrics": compute_metrics(yte, pred_te).to_dict(),
        "test_predictions": {"y_true": yte.tolist(), "y_pred": np.asarray(pred_te).tolist()},
        "history": history,
    }
    return checkpoint, report


def _train_job(args):
    return train_participant(*args)


def train_all(matrix: FeatureMatrix, settings: TrainSettings, jobs: int = 1) -> list:
    cols = columns_for_feature_set(matrix.feature_names, settings.feature_set)
    if not cols:
        raise DataError(f"feature set {settings.feature_set!r} selects no columns from the input")
    matrix = matrix.select_columns(cols)
    pids = matrix.participant_ids()
    args = [(matrix, pid, settings) for pid in pids]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_train_job, args))
    return [_train_job(a) for a in args]


def write_training(out_dir, results, settings: TrainSettings) -> list[Path]:
    out_dir = Path(out_dir) / settings.model
    written = []
    for checkpoint, report in results:
        pdir = out_dir / report["participant"]
        pdir.mkdir(parents=True, exist_ok=True)
        write_json(pdir / "checkpoint.json", checkpoint)
        write_json(pdir / "report.json", report)
        written += [pdir / "checkpoint.json", pdir / "report.json"]
    return written


def load_features(path, feature_set: str) -> FeatureMatrix:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"feature table {path} does not exist")
    matrix = ingest_feature_csv(path)
    if np.isnan(matrix.values).any():
        matrix = impute_missing(matrix)
    return matrix


# --------------------------------------------------------------------------- evaluation


def collect_reports(root) -> list[dict]:
    root = Path(root)
    paths = sorted(root.rglob("report.json"))
    if not paths:
        raise DataError(f"no report.json files under {root}")
    reports = [read_json(p) for p in paths]
    for p, r in zip(paths, reports):
        if "test_metrics" not in r or "model" not in r:
            raise SchemaError(f"{p} is not a training report")
    return reports


def summarize_reports(reports: Sequence[dict]) -> dict:
    """Per-participant rows, macro averages over participants, and pooled (micro) accuracy."""
    per = [
        {"model": r["model"], "participant": r["participant"], "feature_set": r.get("feature_set", ""),
         **r["test_metrics"]}
        for r in reports
    ]
    macro, pooled = [], {}
    for model in dict.fromkeys(r["model"] for r in reports):
        accs = np.array([row["accuracy"] for row in per if row["model"] == model])
        macro.append({"model": model, "mean_accuracy": float(accs.mean()), "std": float(accs.std()),
                      "participants": int(accs.size)})
        truth = np.concatenate([r["test_predictions"]["y_true"] for r in reports if r["model"] == model])
        guess = np.concatenate([r["test_predictions"]["y_pred"] for r in reports if r["model"] == model])
        pooled[model] = compute_metrics(truth.astype(int), guess.astype(int)).to_dict()
    return {"per_participant": per, "macro": macro, "pooled": pooled}


def write_evaluation(out_dir, summary: dict) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    per_path = out_dir / "per_participant.csv"
    with per_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = ["model", "participant", "feature_set", "accuracy", "f1", "precision", "recall"]
        w.writerow(cols)
        for row in summary["per_participant"]:
            w.writerow([row[c] if isinstance(row[c], str) else repr(row[c]) for c in cols])
    sum_path = out_dir / "summary.csv"
    with sum_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "mean_accuracy", "std"])
        for row in summary["macro"]:
            w.writerow([row["model"], repr(row["mean_accuracy"]), repr(row["std"])])
    json_path = out_dir / "summary.json"
    write_json(json_path, summary)
    return [per_path, sum_path, json_path]
