"""Simulation kernel backends.

The engine step loops exist twice: a compiled Cython module (built by
setup.py) and a pure-Python mirror.  Both consume the same SplitMix64 stream
and perform float operations in the same order, so a run is bit-identical
regardless of backend.  The compiled module is preferred when importable;
set STIGMERGRAPH_PURE=1 to force the fallback.
"""

import os

from . import pure

_FORCED_PURE = bool(os.environ.get("STIGMERGRAPH_PURE"))

if not _FORCED_PURE:
    try:
        from . import _fast as _active
        _NAME = "compiled"
    except ImportError:
        _active = pure
        _NAME = "pure"
else:
    _active = pure
    _NAME = "pure"


def backend_name():
    """Name of the kernel backend selected at import: 'compiled' or 'pure'."""
    return _NAME


def get_backend(name=None):
    """Return a kernel module by name (None selects the active backend)."""
    if name is None:
        return _active
    if name == "pure":
        return pure
    if name == "compiled":
        from . import _fast
        return _fast
    raise ValueError(f"unknown backend {name!r}")
