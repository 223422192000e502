# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for LIF encoding and the two-layer spiking network.

Semantics are identical to ``_kernels_py``; see that module for the
reference formulation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI

cnp.import_array()


def lif_encode(const double[::1] x, double v_rest, double v_reset, double v_th,
               double tau, double dt, int num_steps, double gain=1.0):
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out = np.zeros((n, num_steps), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] o = out
    cdef double k = dt / tau
    cdef double v, drive
    cdef Py_ssize_t i
    cdef int t
    with nogil:
        for i in range(n):
            v = v_rest
            drive = gain * x[i]
            for t in range(num_steps):
                if v >= v_th:
                    o[i, t] = 1
                    v = v_reset
                v = v + k * (-(v - v_rest) + drive)
    return out


def snn_forward(const double[:, ::1] w1t, const double[::1] w2,
                double beta1, double beta2, double thr1, double thr2,
                const cnp.uint8_t[:, ::1] spikes_in):
    """Run one sample; ``w1t`` is the masked fc1 matrix transposed to (inputs, hidden)."""
    cdef Py_ssize_t n_in = w1t.shape[0]
    cdef Py_ssize_t n_hid = w1t.shape[1]
    cdef Py_ssize_t T = spikes_in.shape[1]
    cdef cnp.ndarray[double, ndim=2] v1_arr = np.empty((T, n_hid))
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] s1_arr = np.zeros((T, n_hid), dtype=np.uint8)
    cdef cnp.ndarray[double, ndim=1] v2_arr = np.empty(T)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] s2_arr = np.zeros(T, dtype=np.uint8)
    cdef double[:, ::1] v1 = v1_arr
    cdef cnp.uint8_t[:, ::1] s1 = s1_arr
    cdef double[::1] v2 = v2_arr
    cdef cnp.uint8_t[::1] s2 = s2_arr
    cdef cnp.ndarray[double, ndim=1] u1_arr = np.zeros(n_hid)
    cdef double[::1] u1 = u1_arr
    cdef double u2 = 0.0, o, v
    cdef Py_ssize_t t, f, h
    cdef long total = 0
    with nogil:
        for t in range(T):
            for h in range(n_hid):
                v1[t, h] = 0.0
            for f in range(n_in):
                if spikes_in[f, t]:
                    for h in range(n_hid):
                        v1[t, h] += w1t[f, h]
            for h in range(n_hid):
                v1[t, h] = beta1 * u1[h] + v1[t, h]
            o = 0.0
            for h in range(n_hid):
                v = v1[t, h]
                if v >= thr1:
                    s1[t, h] = 1
                    u1[h] = v - thr1
                    o += w2[h]
                else:
                    u1[h] = v
            v = beta2 * u2 + o
            v2[t] = v
            if v >= thr2:
                s2[t] = 1
                u2 = v - thr2
                total += 1
            else:
                u2 = v
    return s1_arr, v1_arr, s2_arr, v2_arr, total


def snn_backward(const double[::1] w2, double beta1, double beta2,
                 double thr1, double thr2, double slope,
                 const cnp.uint8_t[:, ::1] spikes_in,
                 const double[:, ::1] v1, const cnp.uint8_t[:, ::1] r1,
                 const double[::1] v2, const cnp.uint8_t[::1] r2,
                 double g_out, bint want_w1):
    """Backpropagation through time with an arctan surrogate and detached resets.

    Returns ``(grad_w1t or None, dL/dbeta1, dL/dbeta2)``.
    """
    cdef Py_ssize_t n_in = spikes_in.shape[0]
    cdef Py_ssize_t T = v1.shape[0]
    cdef Py_ssize_t n_hid = v1.shape[1]
    cdef cnp.ndarray[double, ndim=1] d1_arr = np.zeros(n_hid)
    cdef double[::1] d1 = d1_arr
    cdef cnp.ndarray[double, ndim=2] g_arr
    cdef double[:, ::1] g
    if want_w1:
        g_arr = np.zeros((n_in, n_hid))
    else:
        g_arr = np.zeros((0, 0))
    g = g_arr
    cdef double a_half = 0.5 * slope
    cdef double c = 0.5 * M_PI * slope
    cdef double d2 = 0.0, x, sg, up
    cdef double db1 = 0.0, db2 = 0.0
    cdef Py_ssize_t t, f, h
    with nogil:
        for t in range(T - 1, -1, -1):
            x = c * (v2[t] - thr2)
            sg = a_half / (1.0 + x * x)
            d2 = g_out * sg + beta2 * d2
            if t > 0:
                up = v2[t - 1] - thr2 * r2[t - 1]
                db2 += d2 * up
            for h in range(n_hid):
                x = c * (v1[t, h] - thr1)
                sg = a_half / (1.0 + x * x)
                d1[h] = d2 * w2[h] * sg + beta1 * d1[h]
                if t > 0:
                    db1 += d1[h] * (v1[t - 1, h] - thr1 * r1[t - 1, h])
            if want_w1:
                for f in range(n_in):
                    if spikes_in[f, t]:
                        for h in range(n_hid):
                            g[f, h] += d1[h]
    if want_w1:
        return g_arr, db1, db2
    return None, db1, db2
