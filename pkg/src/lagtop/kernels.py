"""Backend selection for the time-stepping kernels.

The compiled extension ``lagtop._kernels`` is used when importable; the
pure-Python module is the fallback.  Setting LAGTOP_PURE_PYTHON=1 forces the
fallback (used by the benchmark and by the backend-equivalence tests).
"""
import os

from . import _kernels_py

MIDPOINT, STRANG, YOSHIDA4 = 0, 1, 2

if os.environ.get("LAGTOP_PURE_PYTHON", "") not in ("", "0"):
    backend = _kernels_py
else:
    try:
        from . import _kernels as backend
    except ImportError:  # extension not built
        backend = _kernels_py

BACKEND = backend.BACKEND
run = backend.run
python_run = _kernels_py.run


def compiled_run():
    """The compiled ``run`` or None when the extension is missing."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels.run
