"""Kernel selection.

The compiled core is used when it imports cleanly.  Setting the environment
variable ``REVSHOR_PURE_PYTHON=1`` forces the numpy fallback, which is how
the test suite exercises both paths.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
simulate_packed = _kernels_py.simulate_packed
asap_depth = _kernels_py.asap_depth

if os.environ.get("REVSHOR_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on build
        _compiled = None
    if _compiled is not None:
        BACKEND = "cython"
        simulate_packed = _compiled.simulate_packed
        asap_depth = _compiled.asap_depth

__all__ = ["BACKEND", "simulate_packed", "asap_depth"]
