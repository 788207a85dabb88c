"""Gibbs sweep kernel selection.

The compiled extension is used when it is importable; otherwise the pure-Python
twin.  Set ``RAINMRF_PURE_PYTHON=1`` to force the fallback.
"""
import os

from ._sweep_py import gibbs_sweep as python_sweep

try:
    from ._sweep import gibbs_sweep as compiled_sweep
except ImportError:  # extension not built
    compiled_sweep = None

if compiled_sweep is not None and os.environ.get("RAINMRF_PURE_PYTHON", "") in ("", "0"):
    gibbs_sweep = compiled_sweep
    BACKEND = "compiled"
else:
    gibbs_sweep = python_sweep
    BACKEND = "python"


def get_sweep(backend=None):
    """Return the sweep function for ``backend`` ('compiled', 'python' or None for the default)."""
    if backend is None:
        return gibbs_sweep
    if backend == "python":
        return python_sweep
    if backend == "compiled":
        if compiled_sweep is None:
            raise ImportError("compiled kernel not built; run `pip install -e . --no-build-isolation`")
        return compiled_sweep
    raise ValueError(f"unknown backend {backend!r}")
