"""Backend selection for the simulation kernel.

The kernel is written once and either compiled with numba or run as plain
Python over numpy scalars; both paths execute the same statements on the
same integer semantics (wrapping uint64), so their outputs are
bit-identical.  Set MDSQ_NUMBA=0 to force the interpreted backend.
"""
from __future__ import annotations

import os

_want_numba = os.environ.get("MDSQ_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

if _want_numba:
    try:
        import numba as _numba
    except ImportError:
        _numba = None
else:
    _numba = None

USE_NUMBA = _numba is not None
BACKEND = "numba" if USE_NUMBA else "python"


def jit(func):
    """Compile func when the numba backend is active, else return it as is."""
    if USE_NUMBA:
        return _numba.njit(cache=True)(func)
    return func
