"""Kernel backend selection.

The compiled extension is used when it imports; setting
``WORKLOAD_SNN_PURE_PYTHON=1`` forces the NumPy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("WORKLOAD_SNN_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

lif_encode = _impl.lif_encode
snn_forward = _impl.snn_forward
snn_backward = _impl.snn_backward
relaxed_forward = _kernels_py.relaxed_forward
surrogate = _kernels_py.surrogate


def available_backends():
    """Mapping of backend name to kernel module, for tests and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
