"""Pure-NumPy kernels; the reference semantics for ``_kernels.pyx``.

Network state per layer (``l`` in 1, 2), at step ``t``::

    v_l[t] = beta_l * u_l[t-1] + input_l[t]       (u_l[-1] = 0)
    s_l[t] = v_l[t] >= thr_l
    u_l[t] = v_l[t] - thr_l * s_l[t]               (reset by subtraction)

with ``input_1[t] = W1m @ x[:, t]`` and ``input_2[t] = w2 @ s_1[t]``. The
backward pass treats the reset term as a constant and replaces the spike
derivative by ``slope/2 / (1 + (pi/2 * slope * (v - thr))**2)``.
"""

import math

import numpy as np


def lif_encode(x, v_rest, v_reset, v_th, tau, dt, num_steps, gain=1.0):
    x = np.asarray(x, dtype=float)
    out = np.zeros((x.size, num_steps), dtype=np.uint8)
    v = np.full(x.size, float(v_rest))
    drive = gain * x
    k = dt / tau
    for t in range(num_steps):
        fire = v >= v_th
        out[fire, t] = 1
        v[fire] = v_reset
        v = v + k * (-(v - v_rest) + drive)
    return out


def snn_forward(w1t, w2, beta1, beta2, thr1, thr2, spikes_in):
    n_hid = w1t.shape[1]
    T = spikes_in.shape[1]
    v1 = np.empty((T, n_hid))
    s1 = np.zeros((T, n_hid), dtype=np.uint8)
    v2 = np.empty(T)
    s2 = np.zeros(T, dtype=np.uint8)
    drive = spikes_in.T.astype(float) @ w1t
    u1 = np.zeros(n_hid)
    u2 = 0.0
    for t in range(T):
        v = beta1 * u1 + drive[t]
        v1[t] = v
        fire = v >= thr1
        s1[t] = fire
        u1 = v - thr1 * fire
        o = float(w2[fire].sum())
        v = beta2 * u2 + o
        v2[t] = v
        if v >= thr2:
            s2[t] = 1
            u2 = v - thr2
        else:
            u2 = v
    return s1, v1, s2, v2, int(s2.sum())


def surrogate(x, slope):
    """Arctan relaxation of the Heaviside step and its derivative."""
    c = 0.5 * math.pi * slope
    return np.arctan(c * x) / math.pi + 0.5, 0.5 * slope / (1.0 + (c * x) ** 2)


def snn_backward(w2, beta1, beta2, thr1, thr2, slope, spikes_in, v1, r1, v2, r2, g_out, want_w1):
    T, n_hid = v1.shape
    _, sg1 = surrogate(v1 - thr1, slope)
    _, sg2 = surrogate(v2 - thr2, slope)
    u1_prev = np.vstack([np.zeros(n_hid), v1[:-1] - thr1 * r1[:-1]])
    u2_prev = np.concatenate([[0.0], v2[:-1] - thr2 * r2[:-1]])
    d1 = np.zeros(n_hid)
    d2 = 0.0
    delta1 = np.empty((T, n_hid))
    db2 = 0.0
    for t in range(T - 1, -1, -1):
        d2 = g_out * sg2[t] + beta2 * d2
        db2 += d2 * u2_prev[t]
        d1 = d2 * w2 * sg1[t] + beta1 * d1
        delta1[t] = d1
    db1 = float((delta1 * u1_prev).sum())
    grad = spikes_in.astype(float) @ delta1 if want_w1 else None
    return grad, db1, float(db2)


def relaxed_forward(w1t, w2, beta1, beta2, thr1, thr2, spikes_in, r1, r2, slope):
    """Forward pass with spikes replaced by the smooth surrogate.

    Resets follow the frozen spike pattern ``r1``/``r2`` so that the result
    is a differentiable function of the weights. Returns ``(v1, v2, out)``
    where ``out`` is the relaxed output spike count.
    """
    n_hid = w1t.shape[1]
    T = spikes_in.shape[1]
    drive = spikes_in.T.astype(float) @ w1t
    v1 = np.empty((T, n_hid))
    v2 = np.empty(T)
    u1 = np.zeros(n_hid)
    u2 = 0.0
    out = 0.0
    for t in range(T):
        v = beta1 * u1 + drive[t]
        v1[t] = v
        s, _ = surrogate(v - thr1, slope)
        u1 = v - thr1 * r1[t]
        v = beta2 * u2 + float(w2 @ s)
        v2[t] = v
        out += float(surrogate(v - thr2, slope)[0])
        u2 = v - thr2 * r2[t]
    return v1, v2, out
