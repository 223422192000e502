"""Windowing, per-modality feature extraction and feature-matrix hygiene.

Feature vectors are plain ``dict[str, float]`` keyed by feature name; a
missing value is ``nan``. Feature matrices are columnar (:class:`FeatureMatrix`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy import ndimage
from scipy import signal as sps

from .errors import (
    DataError,
    EmptyFeatureSetError,
    InsufficientBeatsError,
    InvalidSpecError,
    LogDomainError,
    ScalerDegenerateError,
    ShapeError,
    SignalLengthError,
    UndefinedNormalizationError,
    UnimputableColumnError,
)
from .signal import BANDS, Band, Signal, band_power, baseline_normalize, welch_psd

EEG_CHANNELS = ("AF7", "AF8", "TP9", "TP10")
ASYMMETRY_PAIRS = (("AF7", "AF8"), ("TP9", "TP10"))
EEG_FEATURE_SETS = ("basic", "asy", "asy_ratios")
FEATURE_SETS = EEG_FEATURE_SETS + ("multimodal",)

# HRV
LF_BAND = (0.04, 0.15)
HF_BAND = (0.15, 0.40)
TACHOGRAM_HZ = 4.0
MIN_FREQ_SPAN_S = 60.0
RR_PLAUSIBLE_MS = (250.0, 2500.0)

# PPG peak picking
PPG_THRESHOLD_K = 0.5
PPG_ROLLING_S = 1.5
PPG_REFRACTORY_S = 0.33
PPG_MIN_DURATION_S = 10.0

# SCR detection
SCR_PROMINENCE_US = 0.01
SCR_REFRACTORY_S = 1.0
EDA_TONIC_WINDOW_S = 8.0

MIN_VARIANCE = 1e-8


@dataclass(frozen=True)
class WindowSpec:
    window_s: float = 60.0
    overlap_frac: float = 0.8

    def __post_init__(self):
        if not self.window_s > 0:
            raise InvalidSpecError(f"window length must be positive, got {self.window_s}")
        if not 0 <= self.overlap_frac < 1:
            raise InvalidSpecError(f"overlap must lie in [0, 1), got {self.overlap_frac}")

    @property
    def step_s(self) -> float:
        return self.window_s * (1.0 - self.overlap_frac)

    def count(self, span_s: float) -> int:
        """Number of windows that fit in a span without crossing its end."""
        if span_s + 1e-9 < self.window_s:
            return 0
        return int(math.floor((span_s - self.window_s) / self.step_s + 1e-9)) + 1


@dataclass(frozen=True)
class TaskSpan:
    task_id: str
    start_s: float
    end_s: float
    label: int | None

    @property
    def duration(self) -> float:
        return self.end_s - self.start_s

    @property
    def is_baseline(self) -> bool:
        return self.label is None


@dataclass
class Window:
    signals: dict[str, Signal]
    label: int
    task_id: str
    window_index: int
    start_s: float


def slice_signal(sig: Signal, start_s: float, duration_s: float) -> Signal:
    i0 = int(round((start_s - sig.t0) * sig.fs))
    n = int(round(duration_s * sig.fs))
    if i0 < 0 or i0 + n > len(sig):
        raise SignalLengthError(
            f"channel {sig.channel!r} does not cover [{start_s}, {start_s + duration_s}] s"
        )
    return Signal(sig.samples[i0 : i0 + n], sig.fs, sig.channel, sig.t0 + i0 / sig.fs)


def segment_windows(
    signals: Mapping[str, Signal], task_spans: Sequence[TaskSpan], window_spec=WindowSpec()
) -> list[Window]:
    """Cut sliding windows inside each labeled task span.

    Baseline spans (``label is None``) are skipped. Spans shorter than one
    window produce no windows and a warning.
    """
    windows = []
    for span in task_spans:
        if span.is_baseline:
            continue
        n = window_spec.count(span.duration)
        if n == 0:
            warnings.warn(
                f"task {span.task_id!r} lasts {span.duration:g} s, shorter than the "
                f"{window_spec.window_s:g} s window; no windows emitted",
                stacklevel=2,
            )
            continue
        for i in range(n):
            start = span.start_s + i * window_spec.step_s
            cut = {name: slice_signal(sig, start, window_spec.window_s) for name, sig in signals.items()}
            windows.append(Window(cut, int(span.label), span.task_id, i, start))
    return windows


# --------------------------------------------------------------------------- EEG


def eeg_band_powers(channels: Mapping[str, Signal], names=EEG_CHANNELS) -> dict[str, float]:
    out = {}
    for ch in names:
        spectrum = welch_psd(channels[ch])
        for band in BANDS:
            out[f"EEG_PSD_{ch}_{band.name}"] = band_power(spectrum, band)
    return out


def _log(power, ch, band):
    if not power > 0:
        raise LogDomainError(f"non-positive {band} power ({power}) on channel {ch}")
    return math.log(power)


def eeg_features(
    channels: Mapping[str, Signal],
    feature_set: str = "asy_ratios",
    pairs: Sequence[tuple[str, str]] = ASYMMETRY_PAIRS,
    baseline: Mapping[str, float] | None = None,
) -> dict[str, float]:
    """Band powers, hemispheric asymmetries and theta/alpha ratios.

    ``feature_set`` is one of ``basic`` (band powers), ``asy`` (adds
    ``log P_left - log P_right`` per band and pair) or ``asy_ratios`` (adds
    theta/alpha and alpha/theta per channel). Asymmetries and ratios always
    use the raw powers; ``baseline`` only rescales the band-power columns.
    """
    if feature_set == "multimodal":
        feature_set = "asy_ratios"
    if feature_set not in EEG_FEATURE_SETS:
        raise InvalidSpecError(f"unknown EEG feature set {feature_set!r}")
    names = sorted({ch for pair in pairs for ch in pair} | set(EEG_CHANNELS), key=_channel_order)
    missing = [ch for ch in names if ch not in channels]
    if missing:
        raise ShapeError(f"EEG channels missing: {missing}")

    powers = eeg_band_powers(channels, names)
    out = dict(baseline_normalize(powers, baseline)) if baseline is not None else dict(powers)

    if feature_set in ("asy", "asy_ratios"):
        for left, right in pairs:
            for band in BANDS:
                pl = powers[f"EEG_PSD_{left}_{band.name}"]
                pr = powers[f"EEG_PSD_{right}_{band.name}"]
                out[f"EEG_Asy_{left}_{right}_{band.name}"] = _log(pl, left, band.name) - _log(
                    pr, right, band.name
                )
    if feature_set == "asy_ratios":
        for ch in names:
            theta = powers[f"EEG_PSD_{ch}_theta"]
            alpha = powers[f"EEG_PSD_{ch}_alpha"]
            _log(theta, ch, "theta")
            _log(alpha, ch, "alpha")
            out[f"EEG_Ratio_{ch}_theta_alpha"] = theta / alpha
            out[f"EEG_Ratio_{ch}_alpha_theta"] = alpha / theta
    return out


def _channel_order(ch):
    return EEG_CHANNELS.index(ch) if ch in EEG_CHANNELS else len(EEG_CHANNELS)


# --------------------------------------------------------------------------- HRV


@dataclass(frozen=True)
class RrSeries:
    """Successive inter-beat intervals in milliseconds.

    ``duration_s`` is the length of the recording the beats came from, when
    known; it decides whether the frequency-domain measures are computed.
    """

    rr_ms: np.ndarray
    duration_s: float | None = None

    def __post_init__(self):
        rr = np.asarray(self.rr_ms, dtype=float)
        if rr.ndim != 1 or np.any(~(rr > 0)):
            raise DataError("RR intervals must be a 1-D array of positive values")
        object.__setattr__(self, "rr_ms", rr)

    @property
    def flagged(self) -> np.ndarray:
        lo, hi = RR_PLAUSIBLE_MS
        return (self.rr_ms < lo) | (self.rr_ms > hi)

    @property
    def span_s(self) -> float:
        return self.duration_s if self.duration_s is not None else float(self.rr_ms.sum()) / 1000.0


def detect_ppg_peaks(
    ppg: Signal,
    k: float = PPG_THRESHOLD_K,
    rolling_s: float = PPG_ROLLING_S,
    refractory_s: float = PPG_REFRACTORY_S,
) -> RrSeries:
    """Systolic peaks above a rolling ``mean + k * std`` threshold."""
    if ppg.duration < PPG_MIN_DURATION_S:
        raise SignalLengthError(f"PPG needs at least {PPG_MIN_DURATION_S:g} s, got {ppg.duration:g} s")
    x = ppg.samples
    size = max(3, int(round(rolling_s * ppg.fs)))
    mean = ndimage.uniform_filter1d(x, size, mode="nearest")
    sq = ndimage.uniform_filter1d(x * x, size, mode="nearest")
    std = np.sqrt(np.maximum(sq - mean * mean, 0.0))
    threshold = mean + k * std
    distance = max(1, int(math.ceil(refractory_s * ppg.fs)))
    peaks, _ = sps.find_peaks(x, height=threshold, distance=distance)
    # flat stretches pass the height test with equality only
    peaks = peaks[x[peaks] > threshold[peaks]]
    if peaks.size < 2:
        raise InsufficientBeatsError(f"found {peaks.size} pulse peaks in {ppg.duration:g} s of PPG")
    rr = np.diff(peaks) / ppg.fs * 1000.0
    return RrSeries(rr, duration_s=ppg.duration)


def hrv_features(rr: RrSeries, min_span_s: float = MIN_FREQ_SPAN_S) -> dict[str, float]:
    x = rr.rr_ms
    if x.size < 2:
        raise InsufficientBeatsError("time-domain HRV needs at least two RR intervals")
    out = {
        "HRV_MeanNN": float(x.mean()),
        "HRV_SDNN": float(x.std()),
        "HRV_RMSSD": float(np.sqrt(np.mean(np.diff(x) ** 2))),
        "HRV_LFn": math.nan,
        "HRV_HFn": math.nan,
        "HRV_LFHF": math.nan,
    }
    if rr.span_s + 1e-9 < min_span_s or x.size < 3:
        return out
    lf, hf = lf_hf_power(x)
    total = lf + hf
    if not total > 0:
        raise UndefinedNormalizationError("LF + HF power is zero; normalized HRV undefined")
    out["HRV_LFn"] = lf / total
    out["HRV_HFn"] = hf / total
    out["HRV_LFHF"] = lf / hf if hf > 0 else math.nan
    return out


def lf_hf_power(rr_ms: np.ndarray) -> tuple[float, float]:
    """LF and HF power (ms^2) of the 4 Hz linearly resampled tachogram."""
    beat_t = np.cumsum(rr_ms) / 1000.0
    grid = np.arange(beat_t[0], beat_t[-1], 1.0 / TACHOGRAM_HZ)
    if grid.size < 8:
        return 0.0, 0.0
    tach = np.interp(grid, beat_t, rr_ms)
    tach = tach - tach.mean()
    spectrum = welch_psd(Signal(tach, TACHOGRAM_HZ, "tachogram"), segment_len=min(tach.size, 256))
    lf = band_power(spectrum, Band("LF", *LF_BAND))
    hf = band_power(spectrum, Band("HF", *HF_BAND))
    return lf, hf


# --------------------------------------------------------------------------- EDA / TEMP


def eda_features(
    eda: Signal,
    tonic_window_s: float = EDA_TONIC_WINDOW_S,
    prominence: float = SCR_PROMINENCE_US,
    refractory_s: float = SCR_REFRACTORY_S,
) -> dict[str, float]:
    x = eda.samples
    size = max(1, int(round(tonic_window_s * eda.fs))) | 1
    tonic = ndimage.median_filter(x, size=size, mode="nearest")
    phasic = x - tonic
    distance = max(1, int(round(refractory_s * eda.fs)))
    peaks, _ = sps.find_peaks(phasic, prominence=prominence, distance=distance)
    amplitude = float(phasic[peaks].mean()) if peaks.size else 0.0
    return {"EDA_SCR_Peaks_N": float(peaks.size), "EDA_SCR_Amplitude_Mean": amplitude}


def temp_features(temp: Signal) -> dict[str, float]:
    return {"TEMP_Mean": float(temp.samples.mean()), "TEMP_SD": float(temp.samples.std())}


# --------------------------------------------------------------------------- matrices


@dataclass
class LabeledWindow:
    features: dict[str, float]
    label: int
    participant_id: str = ""
    task_id: str = ""
    window_index: int = 0


@dataclass
class FeatureMatrix:
    """Rows of labeled windows stored column-wise; ``nan`` marks a missing cell."""

    values: np.ndarray
    feature_names: list[str]
    labels: np.ndarray
    participants: np.ndarray = None
    tasks: np.ndarray = None
    windows: np.ndarray = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(len(self.labels), -1)
        self.feature_names = list(self.feature_names)
        self.labels = np.asarray(self.labels, dtype=int)
        n = len(self.labels)
        if self.values.shape[1] != len(self.feature_names):
            raise ShapeError(
                f"{self.values.shape[1]} columns but {len(self.feature_names)} feature names"
            )
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ShapeError("feature names must be unique")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise DataError("labels must be 0 (Easy) or 1 (Hard)")
        self.participants = _column(self.participants, n, "")
        self.tasks = _column(self.tasks, n, "")
        self.windows = (
            np.arange(n) if self.windows is None else np.asarray(self.windows, dtype=int)
        )

    def __len__(self):
        return len(self.labels)

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def from_rows(cls, rows: Sequence[LabeledWindow], feature_names=None) -> "FeatureMatrix":
        if feature_names is None:
            feature_names = list(rows[0].features) if rows else []
        values = np.full((len(rows), len(feature_names)), np.nan)
        for i, row in enumerate(rows):
            if set(row.features) != set(feature_names):
                raise ShapeError(f"row {i} has inconsistent feature names")
            values[i] = [row.features[name] for name in feature_names]
        return cls(
            values,
            feature_names,
            [r.label for r in rows],
            [r.participant_id for r in rows],
            [r.task_id for r in rows],
            [r.window_index for r in rows],
        )

    def rows(self) -> Iterator[LabeledWindow]:
        for i in range(len(self)):
            yield LabeledWindow(
                dict(zip(self.feature_names, self.values[i].tolist())),
                int(self.labels[i]),
                str(self.participants[i]),
                str(self.tasks[i]),
                int(self.windows[i]),
            )

    def take(self, index) -> "FeatureMatrix":
        index = np.asarray(index)
        return FeatureMatrix(
            self.values[index],
            self.feature_names,
            self.labels[index],
            self.participants[index],
            self.tasks[index],
            self.windows[index],
        )

    def select_columns(self, names: Sequence[str]) -> "FeatureMatrix":
        idx = [self.feature_names.index(n) for n in names]
        return replace(self, values=self.values[:, idx], feature_names=list(names))

    def with_values(self, values) -> "FeatureMatrix":
        return replace(self, values=np.asarray(values, dtype=float))

    def participant_ids(self) -> list[str]:
        return list(dict.fromkeys(self.participants.tolist()))

    def for_participant(self, pid: str) -> "FeatureMatrix":
        return self.take(np.flatnonzero(self.participants == pid))


def _column(values, n, default):
    if values is None:
        return np.array([default] * n, dtype=object)
    arr = np.asarray(list(values), dtype=object)
    if arr.shape != (n,):
        raise ShapeError(f"metadata column has {arr.size} entries for {n} rows")
    return arr


def columns_for_feature_set(feature_names: Sequence[str], feature_set: str) -> list[str]:
    """Subset of ``feature_names`` that belongs to a feature-set selector."""
    prefixes = {
        "basic": ("EEG_PSD_",),
        "asy": ("EEG_PSD_", "EEG_Asy_"),
        "asy_ratios": ("EEG_PSD_", "EEG_Asy_", "EEG_Ratio_"),
    }
    if feature_set == "multimodal":
        return list(feature_names)
    if feature_set not in prefixes:
        raise InvalidSpecError(f"unknown feature set {feature_set!r}; choose from {FEATURE_SETS}")
    return [n for n in feature_names if n.startswith(prefixes[feature_set])]


def _impute_column(col: np.ndarray) -> np.ndarray:
    missing = np.isnan(col)
    if not missing.any():
        return col
    present = np.flatnonzero(~missing)
    out = col.copy()
    for i in np.flatnonzero(missing):
        j = np.searchsorted(present, i)
        before = present[j - 1] if j > 0 else None
        after = present[j] if j < present.size else None
        if before is None:
            out[i] = col[after]
        elif after is None:
            out[i] = col[before]
        else:
            out[i] = (col[before] + col[after]) / 2.0
    return out


def impute_missing(matrix: FeatureMatrix) -> FeatureMatrix:
    """Fill missing cells from their neighbours in window order, per participant.

    Interior gaps take the mean of the nearest present value on either side;
    leading and trailing gaps copy the nearest present value.
    """
    values = matrix.values.copy()
    for j, name in enumerate(matrix.feature_names):
        if np.isnan(values[:, j]).all():
            raise UnimputableColumnError(f"column {name!r} has no values to impute from")
    for pid in matrix.participant_ids():
        rows = np.flatnonzero(matrix.participants == pid)
        for j, name in enumerate(matrix.feature_names):
            col = values[rows, j]
            if np.isnan(col).all():
                raise UnimputableColumnError(f"column {name!r} is empty for participant {pid!r}")
            values[rows, j] = _impute_column(col)
    return matrix.with_values(values)


def variance_threshold(matrix: FeatureMatrix, min_variance: float = MIN_VARIANCE):
    """Drop columns whose population variance is below ``min_variance``.

    Returns the reduced matrix and the removed column names.
    """
    if np.isnan(matrix.values).any():
        raise DataError("variance thresholding needs an imputed matrix")
    variances = matrix.values.var(axis=0)
    keep = [n for n, v in zip(matrix.feature_names, variances) if not v < min_variance]
    removed = [n for n in matrix.feature_names if n not in keep]
    if not keep:
        raise EmptyFeatureSetError("variance thresholding removed every feature")
    return matrix.select_columns(keep), removed


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray
    feature_names: tuple = ()
    n_fit: int = 0

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.mean.size:
            raise ShapeError(f"scaler fitted on {self.mean.size} features, got {X.shape[-1]}")
        return (X - self.mean) / self.std

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "feature_names": list(self.feature_names),
            "n_fit": self.n_fit,
        }


def fit_scaler(train, on_degenerate: str = "raise") -> ScalerParams:
    """Per-feature mean and population standard deviation of the training rows only.

    A zero-variance column raises unless ``on_degenerate="unit"``, which
    gives it unit scale (it maps to all zeros); cross-validation uses that for
    columns that happen to be constant inside one training fold.
    """
    names = tuple(train.feature_names) if isinstance(train, FeatureMatrix) else ()
    X = train.values if isinstance(train, FeatureMatrix) else np.asarray(train, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ShapeError("scaler needs a non-empty 2-D matrix")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    bad = std <= 1e-12 * (1.0 + np.abs(mean))
    if bad.any() and on_degenerate == "unit":
        std = np.where(bad, 1.0, std)
    elif bad.any():
        which = [names[i] if names else i for i in np.flatnonzero(bad)]
        raise ScalerDegenerateError(f"zero-variance columns at scaler fit: {which}")
    return ScalerParams(mean, std, names, X.shape[0])


def apply_scaler(matrix, params: ScalerParams):
    if isinstance(matrix, FeatureMatrix):
        return matrix.with_values(params.transform(matrix.values))
    return params.transform(matrix)
