"""JIT switch for the numeric kernels.

Set ``GEOMSCHED_DISABLE_JIT=1`` to run every kernel through its pure
Python/numpy path instead of numba.
"""

import functools
import os

_FALSY = {"", "0", "false", "no", "off"}

JIT_ENABLED = os.environ.get("GEOMSCHED_DISABLE_JIT", "0").strip().lower() in _FALSY

if JIT_ENABLED:
    try:
        import numba as nb
    except ImportError:  # pragma: no cover - numba is a hard dependency
        JIT_ENABLED = False


def njit(fn=None, **opts):
    """``numba.njit`` with project defaults, or the identity when JIT is off."""
    if fn is None:
        return functools.partial(njit, **opts)
    if not JIT_ENABLED:
        return fn
    opts.setdefault("cache", True)
    opts.setdefault("nogil", True)
    return nb.njit(**opts)(fn)


def py_func(fn):
    """Undecorated Python body of a kernel (itself when JIT is off)."""
    return getattr(fn, "py_func", fn)
