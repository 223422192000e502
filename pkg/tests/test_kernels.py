"""The compiled kernels and the NumPy fallback must agree."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from workload_snn import kernels

BACKENDS = kernels.available_backends()
needs_ext = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")


def brute_force_encoder(x, v_rest, v_reset, v_th, tau, dt, steps, gain=1.0):
    v, out = v_rest, []
    for _ in range(steps):
        if v >= v_th:
            out.append(1)
            v = v_reset
        else:
            out.append(0)
        v = v + dt / tau * (-(v - v_rest) + gain * x)
    return out


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_encoder_matches_brute_force(name):
    impl = BACKENDS[name]
    for tau in (5.0, 29.0, 100.0):
        for gain in (1.0, 30.0):
            xs = np.linspace(-3, 3, 13)
            got = impl.lif_encode(xs, 0.0, -65.0, -50.0, tau, 1.0, 40, gain)
            want = [brute_force_encoder(x, 0.0, -65.0, -50.0, tau, 1.0, 40, gain) for x in xs]
            assert np.array_equal(np.asarray(got), np.array(want, dtype=np.uint8))


def random_net(rng, n_in=5, n_hid=12, steps=30):
    w1t = np.ascontiguousarray(rng.normal(0.4, 0.4, size=(n_in, n_hid)))
    w2 = rng.normal(0.2, 0.5, size=n_hid)
    spikes = (rng.random((n_in, steps)) < 0.4).astype(np.uint8)
    return w1t, w2, spikes


@needs_ext
@given(st.integers(0, 100_000), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_forward_equivalence(seed, beta1, beta2):
    rng = np.random.default_rng(seed)
    w1t, w2, spikes = random_net(rng)
    py = BACKENDS["python"].snn_forward(w1t, w2, beta1, beta2, 1.0, 1.0, spikes)
    cy = BACKENDS["cython"].snn_forward(w1t, w2, beta1, beta2, 1.0, 1.0, spikes)
    for a, b in zip(py[:4], cy[:4]):
        assert np.allclose(np.asarray(a), np.asarray(b), rtol=0, atol=1e-12)
    assert py[4] == cy[4]


@needs_ext
@given(st.integers(0, 100_000), st.floats(-3, 3))
def test_backward_equivalence(seed, g_out):
    rng = np.random.default_rng(seed)
    w1t, w2, spikes = random_net(rng)
    s1, v1, s2, v2, _ = BACKENDS["python"].snn_forward(w1t, w2, 0.8, 0.7, 1.0, 1.0, spikes)
    args = (w2, 0.8, 0.7, 1.0, 1.0, 25.0, spikes, v1, s1, v2, s2, g_out, True)
    gp, b1p, b2p = BACKENDS["python"].snn_backward(*args)
    gc, b1c, b2c = BACKENDS["cython"].snn_backward(*args)
    assert np.allclose(gp, np.asarray(gc), rtol=1e-10, atol=1e-12)
    assert b1p == pytest.approx(b1c, rel=1e-10, abs=1e-12)
    assert b2p == pytest.approx(b2c, rel=1e-10, abs=1e-12)


@needs_ext
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=20), st.floats(1, 200), st.integers(1, 60))
def test_encoder_equivalence(xs, tau, steps):
    x = np.asarray(xs)
    a = BACKENDS["python"].lif_encode(x, 0.0, -65.0, -50.0, tau, 1.0, steps, 3.0)
    b = BACKENDS["cython"].lif_encode(x, 0.0, -65.0, -50.0, tau, 1.0, steps, 3.0)
    assert np.array_equal(np.asarray(a), np.asarray(b))


def test_backend_flag_is_known():
    assert kernels.BACKEND in BACKENDS
