"""Kernel selection.

The compiled extension is used when it imports; set
``TWOLEVEL_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _pykernel

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and os.environ.get("TWOLEVEL_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
    _impl = _compiled
    BACKEND = "cython"
else:
    _impl = _pykernel
    BACKEND = "python"

step_product = _impl.step_product
interval_products = _impl.interval_products


def available_backends():
    """Map of backend name to kernel module, for tests and benchmarks."""
    out = {"python": _pykernel}
    if _compiled is not None:
        out["cython"] = _compiled
    return out
