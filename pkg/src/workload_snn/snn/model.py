"""Parameter containers, initialisers and JSON checkpoints for the spiking classifiers."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InvalidSpecError, ShapeError

HIDDEN_FACTOR = 20
BETA_BOUNDS = (0.01, 1.0)
FC2_INIT_STD = 0.01
FC1_STD_RATIO = 0.2


@dataclass(frozen=True)
class LifEncoderParams:
    """Input encoder constants (mV, ms).

    With ``v_rest`` above ``v_th`` the encoder fires tonically; ``gain``
    multiplies the feature value before it enters the membrane equation and
    is 1.0 for the literal formulation.
    """

    v_rest: float = 0.0
    v_reset: float = -65.0
    v_th: float = -50.0
    tau: float = 29.0
    dt: float = 1.0
    num_steps: int = 40
    gain: float = 1.0

    def __post_init__(self):
        if not self.tau > 0 or not self.dt > 0:
            raise InvalidSpecError("tau and dt must be positive")
        if int(self.num_steps) != self.num_steps or self.num_steps < 1:
            raise InvalidSpecError("num_steps must be a positive integer")


@dataclass
class LeakyParams:
    beta: float = 0.8
    threshold: float = 1.0
    beta_learnable: bool = False

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise InvalidSpecError(f"beta must lie in (0, 1], got {self.beta}")
        if not self.threshold > 0:
            raise InvalidSpecError(f"threshold must be positive, got {self.threshold}")


@dataclass
class SnnModel:
    """Two-layer spiking classifier.

    ``w_fc1`` and ``mask_fc1`` have shape (hidden, inputs); ``w_fc2`` has
    shape (hidden,) and feeds a single output neuron.
    """

    w_fc1: np.ndarray
    mask_fc1: np.ndarray
    w_fc2: np.ndarray
    leaky1: LeakyParams = field(default_factory=LeakyParams)
    leaky2: LeakyParams = field(default_factory=LeakyParams)
    mode: str = "bio"
    encoder: LifEncoderParams = field(default_factory=LifEncoderParams)
    seed: int | None = None

    def __post_init__(self):
        if self.mode not in ("bio", "hybrid"):
            raise InvalidSpecError(f"mode must be 'bio' or 'hybrid', got {self.mode!r}")
        self.w_fc1 = np.asarray(self.w_fc1, dtype=float)
        self.mask_fc1 = np.asarray(self.mask_fc1, dtype=np.uint8)
        self.w_fc2 = np.array(self.w_fc2, dtype=float).reshape(-1)
        if self.w_fc1.ndim != 2 or self.mask_fc1.shape != self.w_fc1.shape:
            raise ShapeError("w_fc1 and mask_fc1 must be matrices of equal shape")
        if self.w_fc2.size != self.w_fc1.shape[0]:
            raise ShapeError("w_fc2 length must equal the hidden size")
        if not np.all(self.mask_fc1 <= 1):
            raise ShapeError("mask entries must be 0 or 1")
        if self.mode == "bio":
            self.w_fc1.setflags(write=False)
            self.mask_fc1.setflags(write=False)

    @property
    def n_inputs(self) -> int:
        return self.w_fc1.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.w_fc1.shape[0]

    def effective_fc1_t(self) -> np.ndarray:
        """Masked fc1 weights transposed to (inputs, hidden), C-contiguous."""
        return np.ascontiguousarray((self.w_fc1 * self.mask_fc1).T)

    def copy(self) -> "SnnModel":
        return SnnModel(
            self.w_fc1.copy(),
            self.mask_fc1.copy(),
            self.w_fc2.copy(),
            LeakyParams(**asdict(self.leaky1)),
            LeakyParams(**asdict(self.leaky2)),
            self.mode,
            self.encoder,
            self.seed,
        )

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "w_fc1": self.w_fc1.tolist(),
            "mask_fc1": self.mask_fc1.tolist(),
            "w_fc2": self.w_fc2.tolist(),
            "leaky1": asdict(self.leaky1),
            "leaky2": asdict(self.leaky2),
            "encoder": asdict(self.encoder),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SnnModel":
        return cls(
            np.asarray(doc["w_fc1"], dtype=float),
            np.asarray(doc["mask_fc1"], dtype=np.uint8),
            np.asarray(doc["w_fc2"], dtype=float),
            LeakyParams(**doc["leaky1"]),
            LeakyParams(**doc["leaky2"]),
            doc["mode"],
            LifEncoderParams(**doc["encoder"]),
            doc.get("seed"),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SnnModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def init_bio(
    inputs: int,
    p_conn: float = 0.1,
    fc1_mean: float = 0.1,
    seed: int = 0,
    hidden_factor: int = HIDDEN_FACTOR,
    beta: float = 0.8,
    learn_beta: bool = True,
    encoder: LifEncoderParams = LifEncoderParams(),
) -> SnnModel:
    """Fixed sparse fc1 drawn from Normal(fc1_mean, 0.2 * fc1_mean) under a Bernoulli(p_conn) mask."""
    if not 0 < p_conn <= 1:
        raise InvalidSpecError(f"p_conn must lie in (0, 1], got {p_conn}")
    if inputs < 1:
        raise InvalidSpecError("need at least one input feature")
    rng = np.random.default_rng(seed)
    hidden = hidden_factor * inputs
    w_fc1 = rng.normal(fc1_mean, FC1_STD_RATIO * abs(fc1_mean), size=(hidden, inputs))
    mask = (rng.random((hidden, inputs)) < p_conn).astype(np.uint8)
    w_fc2 = rng.normal(0.0, FC2_INIT_STD, size=hidden)
    return SnnModel(
        w_fc1,
        mask,
        w_fc2,
        LeakyParams(beta, 1.0, learn_beta),
        LeakyParams(beta, 1.0, learn_beta),
        "bio",
        encoder,
        seed,
    )


def init_hybrid(
    inputs: int,
    seed: int = 0,
    hidden_factor: int = HIDDEN_FACTOR,
    beta: float = 0.8,
    encoder: LifEncoderParams = LifEncoderParams(),
) -> SnnModel:
    """Dense trainable fc1 with the usual U(-1/sqrt(inputs), 1/sqrt(inputs)) start."""
    if inputs < 1:
        raise InvalidSpecError("need at least one input feature")
    rng = np.random.default_rng(seed)
    hidden = hidden_factor * inputs
    bound = 1.0 / np.sqrt(inputs)
    w_fc1 = rng.uniform(-bound, bound, size=(hidden, inputs))
    w_fc2 = rng.normal(0.0, FC2_INIT_STD, size=hidden)
    return SnnModel(
        w_fc1,
        np.ones((hidden, inputs), dtype=np.uint8),
        w_fc2,
        LeakyParams(beta, 1.0, False),
        LeakyParams(beta, 1.0, False),
        "hybrid",
        encoder,
        seed,
    )
