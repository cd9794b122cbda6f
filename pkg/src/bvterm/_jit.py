"""Switch between numba-compiled kernels and a pure-numpy path.

Set ``BVT_DISABLE_JIT=1`` to skip numba. A kernel decorated with
``@njit(fallback=g)`` then runs ``g``, a vectorised numpy equivalent; kernels
without a fallback run their own body as ordinary Python. The loop body is
always reachable as ``kernel.py_func`` and the numpy form as
``kernel.numpy_func`` for cross-checking.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

JIT_DISABLED = os.environ.get("BVT_DISABLE_JIT", "").strip() not in ("", "0")
JIT_ACTIVE = numba is not None and not JIT_DISABLED


def njit(fn=None, *, fallback=None, **options):
    """``numba.njit`` with on-disk caching, or the numpy/Python path when disabled."""

    def wrap(f):
        if not JIT_ACTIVE:
            g = fallback or f
            g.py_func = f
            g.numpy_func = fallback or f
            return g
        k = numba.njit(cache=True, **options)(f)
        k.numpy_func = fallback or f
        return k

    if fn is not None:
        return wrap(fn)
    return wrap
