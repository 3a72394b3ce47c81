"""Optional numba acceleration.

The hot kernels in :mod:`fraclap.kernels` are written in nopython-compatible
numpy so the same code runs either JIT-compiled or interpreted.  Selection
happens once at import time through the ``FRACLAP_NUMBA`` environment
variable:

* unset / ``auto`` -- use numba when importable, otherwise fall back silently;
* ``0`` / ``false`` / ``off`` -- force the interpreted numpy path;
* ``1`` / ``true`` / ``on`` -- require numba, raise if it cannot be imported.
"""

import os

_FLAG = os.environ.get("FRACLAP_NUMBA", "auto").strip().lower()

if _FLAG in ("0", "false", "off", "no"):
    NUMBA_ENABLED = False
else:
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:
        if _FLAG in ("1", "true", "on", "yes"):
            raise
        NUMBA_ENABLED = False


def maybe_njit(func):
    """Decorate ``func`` with ``numba.njit`` when acceleration is enabled."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(func)
    return func
