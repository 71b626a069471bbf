"""Kernel backend selection.

The compiled extension is used when it was built and ``MOLBENCH_PURE`` is
not set; otherwise the numpy implementations are used. Both produce
identical results, so the choice only affects speed.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("MOLBENCH_PURE"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

scatter_add_rows = _impl.scatter_add_rows
segment_max = _impl.segment_max
best_split = _impl.best_split


def available_backends():
    """Map of backend name -> kernel module, for benchmarks and parity tests."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        return out
    out["cython"] = _kernels
    return out
