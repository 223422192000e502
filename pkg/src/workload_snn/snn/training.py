"""Online training of the bio-inspired and hybrid spiking classifiers, plus grid search."""

from __future__ import annotations

import itertools
import json
import zlib
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from ..baseline import GridReport, cross_validate, stratified_kfold
from ..errors import DegenerateLabelsError, InvalidSpecError
from .core import SURROGATE_SLOPE, _forward, backward, encode_matrix
from .model import BETA_BOUNDS, LifEncoderParams, SnnModel, init_bio, init_hybrid

DEFAULT_GRID = {"eta": [0.001, 0.01, 0.1], "epochs": [10, 20]}
BETA_GRAD_CLIP = 1.0


@dataclass(frozen=True)
class TrainConfig:
    eta: float = 0.001
    epochs: int = 20
    batch_size: int = 1
    patience: int = 5
    tau: float = 29.0
    p_conn: float = 0.1
    fc1_mean: float = 0.1
    gain: float = 10.0
    beta: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.batch_size != 1:
            raise InvalidSpecError("training is online; batch_size must be 1")
        if self.epochs < 1 or self.patience < 1:
            raise InvalidSpecError("epochs and patience must be positive")
        if self.eta < 0:
            raise InvalidSpecError("learning rate must be non-negative")

    @property
    def encoder(self) -> LifEncoderParams:
        return LifEncoderParams(tau=self.tau, gain=self.gain)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainReport:
    config: dict
    history: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0
    early_stopped: bool = False

    @property
    def final_train_accuracy(self) -> float:
        return self.history[self.best_epoch - 1]["train_accuracy"] if self.history else float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


class Adam:
    def __init__(self, shape, lr, betas=(0.9, 0.999), eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, betas[0], betas[1], eps
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, param: np.ndarray, grad: np.ndarray) -> None:
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad * grad
        m_hat = self.m / (1 - self.b1**self.t)
        v_hat = self.v / (1 - self.b2**self.t)
        param -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _check_labels(y):
    if np.unique(y).size < 2:
        raise DegenerateLabelsError("training set contains a single class")


def _accuracy(model, encoded, y) -> float:
    w1t = model.effective_fc1_t()
    pred = np.array([_forward(w1t, model, s)[2] >= 1 for s in encoded], dtype=int)
    return float(np.mean(pred == y))


def _update_betas(model, db1, db2, eta):
    lo, hi = BETA_BOUNDS
    # raw decay gradients sum over every neuron and step; clipping keeps one sample from saturating beta
    db1 = float(np.clip(db1, -BETA_GRAD_CLIP, BETA_GRAD_CLIP))
    db2 = float(np.clip(db2, -BETA_GRAD_CLIP, BETA_GRAD_CLIP))
    model.leaky1.beta = float(np.clip(model.leaky1.beta - eta * db1, lo, hi))
    model.leaky2.beta = float(np.clip(model.leaky2.beta - eta * db2, lo, hi))


def _fit(model: SnnModel, X, y, config: TrainConfig, val, step_factory):
    y = np.asarray(y, dtype=int)
    _check_labels(y)
    model = model.copy()
    encoded = encode_matrix(X, model.encoder)
    val_encoded = encode_matrix(val[0], model.encoder) if val is not None else None
    val_y = np.asarray(val[1], dtype=int) if val is not None else None
    rng = np.random.default_rng(config.seed)
    step = step_factory(model)

    report = TrainReport(config.to_dict())
    best_score, best_model, wait = -1.0, model.copy(), 0
    for epoch in range(1, config.epochs + 1):
        for i in rng.permutation(len(encoded)):
            step(encoded[i], y[i])
        train_acc = _accuracy(model, encoded, y)
        val_acc = _accuracy(model, val_encoded, val_y) if val is not None else None
        report.history.append({"epoch": epoch, "train_accuracy": train_acc, "val_accuracy": val_acc})
        report.stopped_epoch = epoch
        score = val_acc if val is not None else train_acc
        if score > best_score:
            best_score, best_model, wait = score, model.copy(), 0
            report.best_epoch = epoch
        else:
            wait += 1
            if wait >= config.patience:
                report.early_stopped = True
                break
    return best_model, report


def train_bio(model: SnnModel, X, y, config: TrainConfig = TrainConfig(), val=None):
    """Delta-rule training of fc2 on standardised features; fc1 and its mask stay fixed.

    When the leaky layers have ``beta_learnable`` set, both decay factors take
    a surrogate-gradient step of size ``eta`` (gradient clipped to ``BETA_GRAD_CLIP``) on the squared spike-count error
    after each sample. ``val`` is an optional ``(X_val, y_val)`` pair that
    drives early stopping; without it the training accuracy does.
    """
    if model.mode != "bio":
        raise InvalidSpecError("train_bio needs a bio-mode model")

    def factory(m: SnnModel):
        w1t = m.effective_fc1_t()
        learn = m.leaky1.beta_learnable or m.leaky2.beta_learnable

        def step(spikes, target):
            s1, _, total, trace = _forward(w1t, m, spikes, trace=True)
            err = float(target) - total
            if err == 0.0:
                return
            if learn:
                _, db1, db2 = backward(m, spikes, trace, -2.0 * err, want_w1=False)
            m.w_fc2 += config.eta * s1.sum(axis=1) * err
            if learn:
                _update_betas(m, db1, db2, config.eta)

        return step

    return _fit(model, X, y, config, val, factory)


def train_hybrid(model: SnnModel, X, y, config: TrainConfig = TrainConfig(), val=None,
                 slope: float = SURROGATE_SLOPE):
    """fc1 by Adam on surrogate gradients of ``(y - sum(s_out))**2``; fc2 by the delta rule."""
    if model.mode != "hybrid":
        raise InvalidSpecError("train_hybrid needs a hybrid-mode model")

    def factory(m: SnnModel):
        adam = Adam(m.w_fc1.shape, config.eta)

        def step(spikes, target):
            s1, _, total, trace = _forward(m.effective_fc1_t(), m, spikes, trace=True)
            err = float(target) - total
            grad, _, _ = backward(m, spikes, trace, -2.0 * err, want_w1=True, slope=slope)
            adam.step(m.w_fc1, grad)
            m.w_fc2 += config.eta * s1.sum(axis=1) * err

        return step

    return _fit(model, X, y, config, val, factory)


def build_model(mode: str, inputs: int, config: TrainConfig, seed: int) -> SnnModel:
    if mode == "bio":
        return init_bio(inputs, config.p_conn, config.fc1_mean, seed, beta=config.beta,
                        encoder=config.encoder)
    if mode == "hybrid":
        return init_hybrid(inputs, seed, beta=config.beta, encoder=config.encoder)
    raise InvalidSpecError(f"unknown SNN mode {mode!r}")


def fit_snn(mode: str, X, y, config: TrainConfig, val=None):
    model = build_model(mode, np.asarray(X).shape[1], config, config.seed)
    trainer = train_bio if mode == "bio" else train_hybrid
    return trainer(model, X, y, config, val)


def derive_seed(seed: int, config: TrainConfig, fold: int) -> int:
    """Stream seed for one (grid cell, fold); identical configs get identical streams."""
    doc = {k: v for k, v in config.to_dict().items() if k != "seed"}
    tag = zlib.crc32(json.dumps(doc, sort_keys=True).encode())
    return int(np.random.SeedSequence([seed, tag, fold]).generate_state(1)[0])


def expand_grid(grid: Mapping[str, Sequence], base: TrainConfig = TrainConfig()) -> list[TrainConfig]:
    keys = list(grid)
    unknown = [k for k in keys if k not in TrainConfig.__dataclass_fields__]
    if unknown:
        raise InvalidSpecError(f"unknown grid parameters {unknown}")
    return [replace(base, **dict(zip(keys, combo))) for combo in itertools.product(*(grid[k] for k in keys))]


def grid_search_snn(X, y, grid: Mapping[str, Sequence] = DEFAULT_GRID, k: int = 5, seed: int = 0,
                    mode: str = "bio", base: TrainConfig = TrainConfig()):
    """Stratified k-fold search over the Cartesian grid.

    Each fold standardises with its own training statistics and early-stops
    on its validation fold. The best mean validation accuracy wins; ties go
    to the smaller learning rate, then fewer epochs, then larger p_conn.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    plan = stratified_kfold(y, k, seed)
    entries = []
    configs = expand_grid(grid, base)
    for config in configs:
        def fit_predict(Xt, yt, Xv, yv, fold, config=config):
            cfg = replace(config, seed=derive_seed(seed, config, fold))
            model, _ = fit_snn(mode, Xt, yt, cfg, val=(Xv, yv))
            w1t = model.effective_fc1_t()
            encoded = encode_matrix(Xv, model.encoder)
            return np.array([_forward(w1t, model, s)[2] >= 1 for s in encoded], dtype=int)

        accs = cross_validate(X, y, plan, fit_predict)
        entries.append({"params": config.to_dict(), "fold_accuracies": accs,
                        "mean_val_accuracy": float(np.mean(accs))})
    best_i = min(
        range(len(entries)),
        key=lambda i: (-entries[i]["mean_val_accuracy"], configs[i].eta, configs[i].epochs, -configs[i].p_conn),
    )
    return configs[best_i], GridReport(entries, entries[best_i])


def p_conn_sweep(X, y, p_conns: Sequence[float], base: TrainConfig = TrainConfig(), k: int = 5, seed: int = 0):
    """Accuracy-versus-connectivity table for the bio-inspired network."""
    _, report = grid_search_snn(X, y, {"p_conn": list(p_conns)}, k, seed, "bio", base)
    return [
        {
            "p_conn": e["params"]["p_conn"],
            "mean_val_accuracy": e["mean_val_accuracy"],
            "std_val_accuracy": float(np.std(e["fold_accuracies"])),
        }
        for e in report.entries
    ]
