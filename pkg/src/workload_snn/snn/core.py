"""Spike encoding, the leaky neuron update, the network forward pass and the delta rule."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .. import kernels
from ..errors import EncodingError, ShapeError
from .model import LeakyParams, LifEncoderParams, SnnModel

SURROGATE_SLOPE = 25.0


def encode_lif(features, params: LifEncoderParams = LifEncoderParams(), names: Sequence[str] | None = None):
    """Encode one feature vector as a (features, num_steps) binary spike matrix.

    Each feature drives its own neuron: the membrane starts at ``v_rest``; at
    every step a neuron at or above ``v_th`` emits a spike and jumps to
    ``v_reset``, then integrates ``dt/tau * (-(V - v_rest) + gain * x)``.
    """
    if isinstance(features, Mapping):
        names = list(features)
        features = [features[n] for n in names]
    x = np.ascontiguousarray(features, dtype=float).reshape(-1)
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        label = names[bad[0]] if names is not None else f"index {bad[0]}"
        raise EncodingError(f"feature {label} is not finite ({x[bad[0]]})")
    p = params
    return kernels.lif_encode(x, p.v_rest, p.v_reset, p.v_th, p.tau, p.dt, int(p.num_steps), p.gain)


def encode_matrix(X, params: LifEncoderParams = LifEncoderParams()) -> list[np.ndarray]:
    return [encode_lif(row, params) for row in np.asarray(X, dtype=float)]


def leaky_step(v: float, i: float, leaky: LeakyParams) -> tuple[int, float]:
    """One update of a leaky neuron with reset by subtraction."""
    v_new = leaky.beta * v + i
    if v_new >= leaky.threshold:
        return 1, v_new - leaky.threshold
    return 0, v_new


def forward(model: SnnModel, spikes_in: np.ndarray, trace: bool = False):
    """Propagate one encoded sample; membranes start from zero.

    Returns ``(s_fc1, s_out, out_spike_sum)`` with ``s_fc1`` shaped
    (hidden, steps). With ``trace=True`` the raw kernel outputs are appended
    for the backward pass.
    """
    spikes_in = np.ascontiguousarray(spikes_in, dtype=np.uint8)
    if spikes_in.ndim != 2 or spikes_in.shape[0] != model.n_inputs:
        raise ShapeError(
            f"input spike train has shape {spikes_in.shape}; model expects {model.n_inputs} neurons"
        )
    return _forward(model.effective_fc1_t(), model, spikes_in, trace)


def _forward(w1t, model, spikes_in, trace=False):
    s1, v1, s2, v2, total = kernels.snn_forward(
        w1t,
        model.w_fc2,
        model.leaky1.beta,
        model.leaky2.beta,
        model.leaky1.threshold,
        model.leaky2.threshold,
        spikes_in,
    )
    if trace:
        return s1.T, s2, int(total), (s1, v1, s2, v2)
    return s1.T, s2, int(total)


def classify(out_spike_sum) -> int:
    """Class 1 when the output neuron fired at least once."""
    return int(out_spike_sum >= 1)


def delta_update(w_fc2, s_fc1, y, s_out, eta) -> np.ndarray:
    """``w + eta * counts * (y - sum(s_out))`` with counts the per-neuron spike totals.

    ``s_fc1`` may be a (hidden, steps) spike matrix or already-reduced counts.
    """
    s_fc1 = np.asarray(s_fc1)
    counts = s_fc1.sum(axis=1) if s_fc1.ndim == 2 else s_fc1
    error = float(y) - float(np.sum(s_out))
    return np.asarray(w_fc2, dtype=float) + eta * counts.astype(float) * error


def predict_spikes(model: SnnModel, encoded: Sequence[np.ndarray]) -> np.ndarray:
    w1t = model.effective_fc1_t()
    return np.array([_forward(w1t, model, s)[2] for s in encoded], dtype=int)


def predict(model: SnnModel, X) -> np.ndarray:
    encoded = encode_matrix(X, model.encoder)
    return (predict_spikes(model, encoded) >= 1).astype(int)


def backward(model: SnnModel, spikes_in, trace, g_out, want_w1=True, slope=SURROGATE_SLOPE):
    """Surrogate gradients of a loss whose derivative w.r.t. every output spike is ``g_out``.

    Returns ``(grad_w_fc1, dL/dbeta1, dL/dbeta2)``; the fc1 gradient is
    already masked and shaped like ``w_fc1``.
    """
    s1, v1, s2, v2 = trace
    g, db1, db2 = kernels.snn_backward(
        model.w_fc2,
        model.leaky1.beta,
        model.leaky2.beta,
        model.leaky1.threshold,
        model.leaky2.threshold,
        slope,
        np.ascontiguousarray(spikes_in, dtype=np.uint8),
        v1,
        s1,
        v2,
        s2,
        float(g_out),
        bool(want_w1),
    )
    grad = None if g is None else np.asarray(g).T * model.mask_fc1
    return grad, db1, db2


def relaxed_loss(model: SnnModel, spikes_in, y, frozen_trace, slope=SURROGATE_SLOPE) -> float:
    """Squared count error of the smooth surrogate network with resets frozen to ``frozen_trace``."""
    s1, _, s2, _ = frozen_trace
    _, _, out = kernels.relaxed_forward(
        model.effective_fc1_t(),
        model.w_fc2,
        model.leaky1.beta,
        model.leaky2.beta,
        model.leaky1.threshold,
        model.leaky2.threshold,
        np.asarray(spikes_in, dtype=np.uint8),
        s1,
        s2,
        slope,
    )
    return (float(y) - out) ** 2


def relaxed_gradient(model: SnnModel, spikes_in, y, frozen_trace, slope=SURROGATE_SLOPE):
    """Analytic gradient of :func:`relaxed_loss` with respect to ``w_fc1``."""
    s1, _, s2, _ = frozen_trace
    v1, v2, out = kernels.relaxed_forward(
        model.effective_fc1_t(),
        model.w_fc2,
        model.leaky1.beta,
        model.leaky2.beta,
        model.leaky1.threshold,
        model.leaky2.threshold,
        np.asarray(spikes_in, dtype=np.uint8),
        s1,
        s2,
        slope,
    )
    g_out = -2.0 * (float(y) - out)
    return backward(model, spikes_in, (s1, v1, s2, v2), g_out, True, slope)
