"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the pure-Python
twin. Setting ``OGM_LAB_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("OGM_LAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

theta_sweep = _impl.theta_sweep
couple = _impl.couple
momentum = _impl.momentum

__all__ = ["BACKEND", "theta_sweep", "couple", "momentum"]
