"""Kernel backend selection.

The compiled extension (`_core`, Cython) is preferred when importable; the
pure-numpy fallback (`_pure`) is used otherwise. Both implement the same
operations with identical arithmetic, so results do not depend on the
backend. Set STANCESCOPE_PURE=1 to force the fallback (benchmarks and
parity tests use this).
"""

import os

from . import _pure

try:
    from . import _core
except ImportError:  # extension not built on this platform
    _core = None

if os.environ.get("STANCESCOPE_PURE"):
    _impl = _pure
else:
    _impl = _core if _core is not None else _pure

BACKEND = _impl.BACKEND
HAVE_COMPILED = _core is not None

hist_accumulate = _impl.hist_accumulate
split_scan = _impl.split_scan
route_rows = _impl.route_rows
predict_margins = _impl.predict_margins
iforest_paths = _impl.iforest_paths


def get_backend(name: str):
    """Return a kernel module by name ('pure' or 'compiled')."""
    if name == "pure":
        return _pure
    if name == "compiled":
        if _core is None:
            raise RuntimeError("compiled kernels are not available")
        return _core
    raise ValueError(f"unknown backend {name!r}")
