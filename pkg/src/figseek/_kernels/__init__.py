"""Numeric kernel backend selection.

The compiled Cython module is preferred when importable; the pure-Python
twin is the fallback.  Set FIGSEEK_PURE_PYTHON=1 to force the fallback
(useful for the parity tests and the benchmark).
"""

import os

from . import _py_impl

if os.environ.get("FIGSEEK_PURE_PYTHON"):
    _impl = _py_impl
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _py_impl
        BACKEND = "python"

pegasos_epoch = _impl.pegasos_epoch
hinge_objective = _impl.hinge_objective
entropy_losses = _impl.entropy_losses


def backend_name() -> str:
    return BACKEND
