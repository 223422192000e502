"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each row times the encoder, the forward pass and the forward+backward pass
on a network sized like the multimodal pipeline (48 inputs, 960 hidden).
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from workload_snn import kernels


def workloads(impl, rng, n_in=48, steps=40):
    n_hid = 20 * n_in
    x = rng.normal(size=n_in)
    w1t = np.ascontiguousarray(rng.normal(0.5, 0.1, size=(n_in, n_hid)) * (rng.random((n_in, n_hid)) < 0.1))
    w2 = rng.normal(0, 0.01, size=n_hid)
    spikes = impl.lif_encode(x, 0.0, -65.0, -50.0, 29.0, 1.0, steps, 30.0)
    spikes = np.ascontiguousarray(spikes, dtype=np.uint8)

    def encode():
        impl.lif_encode(x, 0.0, -65.0, -50.0, 29.0, 1.0, steps, 30.0)

    def fwd():
        impl.snn_forward(w1t, w2, 0.8, 0.8, 1.0, 1.0, spikes)

    def fwd_bwd():
        s1, v1, s2, v2, _ = impl.snn_forward(w1t, w2, 0.8, 0.8, 1.0, 1.0, spikes)
        impl.snn_backward(w2, 0.8, 0.8, 1.0, 1.0, 25.0, spikes, v1, s1, v2, s2, 1.0, True)

    return {"encode": encode, "forward": fwd, "forward+backward": fwd_bwd}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args(argv)
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not available; only the NumPy fallback will be timed")
    results = {}
    for name, impl in backends.items():
        for op, fn in workloads(impl, np.random.default_rng(0)).items():
            fn()
            best = min(timeit.repeat(fn, number=args.repeat, repeat=3)) / args.repeat
            results[(op, name)] = best
    ops = list(dict.fromkeys(op for op, _ in results))
    print(f"{'kernel':<18}" + "".join(f"{b:>14}" for b in backends) + "     speed-up")
    for op in ops:
        row = f"{op:<18}" + "".join(f"{results[(op, b)] * 1e6:>11.1f} us" for b in backends)
        if "cython" in backends:
            row += f"  {results[(op, 'python')] / results[(op, 'cython')]:>10.1f}x"
        print(row)


if __name__ == "__main__":
    main()
