"""Seeded synthetic recordings with controllable workload effects.

Every generator is stationary with short memory, so with all effect sizes at
zero the Easy and Hard spans are statistically indistinguishable. Effects
raise theta amplitude on the EEG channels, shrink beat-to-beat variability
in the PPG, and raise the skin-conductance response rate.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .errors import InvalidSpecError
from .features import EEG_CHANNELS, TaskSpan
from .io import write_json, write_manifest, write_signal_csv
from .signal import Signal

EEG_FS = 256.0
PPG_FS = 64.0
EDA_FS = 4.0
TEMP_FS = 4.0
CHANNEL_FILES = EEG_CHANNELS + ("PPG", "EDA", "TEMP")

BASE_RR_MS = 800.0
RR_RESP_MS = 40.0  # respiratory sinus arrhythmia amplitude
RR_NOISE_MS = 25.0
RESP_HZ = 0.25
SCR_RATE_PER_MIN = 4.0


@dataclass(frozen=True)
class Effects:
    theta: float = 0.0  # fractional theta amplitude increase under load
    hrv: float = 0.0  # fractional RR variability reduction under load
    scr: float = 0.0  # fractional SCR rate increase under load

    def __post_init__(self):
        if self.theta < 0 or self.scr < 0 or not 0 <= self.hrv < 1:
            raise InvalidSpecError("effects: theta and scr must be >= 0, hrv in [0, 1)")


@dataclass(frozen=True)
class SynthSpec:
    participants: int = 1
    tasks: int = 2
    task_s: float = 600.0
    hard_fraction: float = 0.5
    baseline_s: float = 0.0
    effects: Effects = field(default_factory=Effects)
    noise: float = 1.0
    constant_eda: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.participants < 1 or self.tasks < 1:
            raise InvalidSpecError("need at least one participant and one task")
        if not 0 <= self.hard_fraction <= 1:
            raise InvalidSpecError("hard_fraction must lie in [0, 1]")
        if self.task_s < 10 or self.baseline_s < 0:
            raise InvalidSpecError("task_s must be >= 10 s and baseline_s >= 0")
        if self.noise < 0:
            raise InvalidSpecError("noise level must be non-negative")
        if isinstance(self.effects, dict):
            object.__setattr__(self, "effects", Effects(**self.effects))

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthSpec":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidSpecError(f"unknown synth fields {sorted(unknown)}")
        doc = dict(doc)
        if "effects" in doc:
            eff = doc["effects"]
            bad = set(eff) - set(Effects.__dataclass_fields__)
            if bad:
                raise InvalidSpecError(f"unknown effect names {sorted(bad)}")
            doc["effects"] = Effects(**eff)
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def duration_s(self) -> float:
        return self.baseline_s + self.tasks * self.task_s


def participant_id(i: int) -> str:
    return f"P{i + 1:02d}"


def task_spans(spec: SynthSpec, rng: np.random.Generator) -> list[TaskSpan]:
    n_hard = int(np.floor(spec.tasks * spec.hard_fraction + 0.5))
    labels = rng.permutation([1] * n_hard + [0] * (spec.tasks - n_hard))
    spans = []
    t = 0.0
    if spec.baseline_s > 0:
        spans.append(TaskSpan("baseline", 0.0, spec.baseline_s, None))
        t = spec.baseline_s
    for i, label in enumerate(labels):
        spans.append(TaskSpan(f"T{i + 1}", t, t + spec.task_s, int(label)))
        t += spec.task_s
    return spans


def _load_profile(spans, fs, n) -> np.ndarray:
    """Per-sample 0/1 indicator of Hard spans."""
    out = np.zeros(n)
    for s in spans:
        if s.label == 1:
            out[int(round(s.start_s * fs)) : int(round(s.end_s * fs))] = 1.0
    return out


def _narrowband(rng, n, low, high, fs):
    sos = sps.butter(4, [low, high], btype="bandpass", fs=fs, output="sos")
    x = sps.sosfilt(sos, rng.standard_normal(n + int(4 * fs)))[int(4 * fs) :]
    return x / x.std()


def synth_eeg(rng, spans, spec: SynthSpec) -> dict[str, Signal]:
    n = int(round(spec.duration_s * EEG_FS))
    load = _load_profile(spans, EEG_FS, n)
    t = np.arange(n) / EEG_FS
    line = 2.0 * np.sin(2 * np.pi * 50.0 * t)
    out = {}
    for ch in EEG_CHANNELS:
        # AR(1) background keeps memory to a few samples
        background = sps.lfilter([1.0], [1.0, -0.9], rng.standard_normal(n)) * 2.0
        alpha = 8.0 * _narrowband(rng, n, 8.5, 11.5, EEG_FS)
        theta = 5.0 * _narrowband(rng, n, 4.5, 6.5, EEG_FS) * (1.0 + spec.effects.theta * load)
        beta = 3.0 * _narrowband(rng, n, 14.0, 25.0, EEG_FS)
        x = spec.noise * background + alpha + theta + beta + line
        out[ch] = Signal(x, EEG_FS, ch)
    return out


def _beat_times(rng, spans, spec: SynthSpec) -> np.ndarray:
    beats = []
    t = 0.0
    ar = 0.0
    hard = [(s.start_s, s.end_s) for s in spans if s.label == 1]
    while t < spec.duration_s + 2.0:
        scale = 1.0 - spec.effects.hrv if any(a <= t < b for a, b in hard) else 1.0
        ar = 0.5 * ar + rng.standard_normal()
        rr = BASE_RR_MS + scale * (RR_RESP_MS * np.sin(2 * np.pi * RESP_HZ * t) + RR_NOISE_MS * ar)
        t += max(rr, 350.0) / 1000.0
        beats.append(t)
    return np.asarray(beats)


def synth_ppg(rng, spans, spec: SynthSpec) -> Signal:
    n = int(round(spec.duration_s * PPG_FS))
    t = np.arange(n) / PPG_FS
    x = np.zeros(n)
    for b in _beat_times(rng, spans, spec):
        lo, hi = np.searchsorted(t, [b - 0.3, b + 0.6])
        seg = t[lo:hi] - b
        x[lo:hi] += np.exp(-0.5 * (seg / 0.06) ** 2) + 0.3 * np.exp(-0.5 * ((seg - 0.3) / 0.08) ** 2)
    x += 0.02 * spec.noise * rng.standard_normal(n)
    return Signal(x, PPG_FS, "PPG")


def synth_eda(rng, spans, spec: SynthSpec) -> Signal:
    n = int(round(spec.duration_s * EDA_FS))
    if spec.constant_eda:
        return Signal(np.full(n, 2.0), EDA_FS, "EDA")
    load = _load_profile(spans, EDA_FS, n)
    rate = SCR_RATE_PER_MIN / 60.0 / EDA_FS * (1.0 + spec.effects.scr * load)
    onsets = rng.random(n) < rate
    amps = rng.uniform(0.05, 0.3, size=n) * onsets
    k = np.arange(int(20 * EDA_FS)) / EDA_FS
    kernel = (1.0 - np.exp(-k / 0.75)) * np.exp(-k / 3.0)
    kernel /= kernel.max()
    phasic = np.convolve(amps, kernel)[:n]
    x = 2.0 + phasic + 0.002 * spec.noise * rng.standard_normal(n)
    return Signal(x, EDA_FS, "EDA")


def synth_temp(rng, spans, spec: SynthSpec) -> Signal:
    n = int(round(spec.duration_s * TEMP_FS))
    return Signal(33.0 + 0.05 * spec.noise * rng.standard_normal(n), TEMP_FS, "TEMP")


def synth_participant(spec: SynthSpec, index: int):
    """Signals and task spans for one participant; independent stream per participant."""
    root = np.random.SeedSequence([int(spec.seed), index])
    span_rng, eeg_rng, ppg_rng, eda_rng, temp_rng = (np.random.default_rng(s) for s in root.spawn(5))
    spans = task_spans(spec, span_rng)
    signals = dict(synth_eeg(eeg_rng, spans, spec))
    signals["PPG"] = synth_ppg(ppg_rng, spans, spec)
    signals["EDA"] = synth_eda(eda_rng, spans, spec)
    signals["TEMP"] = synth_temp(temp_rng, spans, spec)
    return signals, spans


def write_synth(spec: SynthSpec, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    for i in range(spec.participants):
        pdir = out_dir / participant_id(i)
        pdir.mkdir(parents=True, exist_ok=True)
        signals, spans = synth_participant(spec, i)
        for name in CHANNEL_FILES:
            path = pdir / f"{name}.csv"
            write_signal_csv(path, signals[name])
            written.append(path)
        write_manifest(pdir / "manifest.json", spans)
        written.append(pdir / "manifest.json")
    write_json(out_dir / "synth.json", spec.to_dict())
    return written
