"""Kernel backend selection.

The compiled extension (hdp._ckernels) is preferred when it imported cleanly;
the pure-numpy twin (hdp._pykernels) is the fallback. HDP_KERNEL overrides:
"python" forces the fallback, "c" requires the extension and raises if it is
missing. Both backends produce bit-identical results; they differ only in
speed (see benchmarks/bench_kernels.py).
"""

from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_requested = os.environ.get("HDP_KERNEL", "auto").strip().lower()
if _requested in ("", "auto"):
    _impl = _ckernels if _ckernels is not None else _pykernels
elif _requested in ("c", "compiled"):
    if _ckernels is None:
        raise ImportError(
            "HDP_KERNEL=c requested but the compiled kernels are not built; "
            "run `pip install -e . --no-build-isolation` or `python setup.py "
            "build_ext --inplace`"
        )
    _impl = _ckernels
elif _requested in ("python", "py", "pure"):
    _impl = _pykernels
else:
    raise ValueError(f"unrecognized HDP_KERNEL value: {_requested!r}")

BACKEND = "c" if _impl is _ckernels else "python"

ks_statistic = _impl.ks_statistic
auc_mann_whitney = _impl.auc_mann_whitney
grow_tree = _impl.grow_tree
predict_forest = _impl.predict_forest


def backends() -> dict:
    """Available backend modules keyed by name (for tests and benchmarks)."""
    out = {"python": _pykernels}
    if _ckernels is not None:
        out["c"] = _ckernels
    return out
