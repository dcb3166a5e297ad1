"""Optional numba acceleration.

Hot kernels in :mod:`dbar_dirac._kernels` exist twice: an explicit loop compiled
with ``numba.njit`` and a vectorised numpy twin.  The loop version is used when
numba imports and ``DBAR_DIRAC_DISABLE_NUMBA`` is unset or ``0``.
"""

import os

_flag = os.environ.get("DBAR_DIRAC_DISABLE_NUMBA", "0").strip().lower()
DISABLED_BY_ENV = _flag not in ("", "0", "false", "no")

try:
    if DISABLED_BY_ENV:
        raise ImportError("numba disabled by DBAR_DIRAC_DISABLE_NUMBA")
    import numba
except ImportError:
    numba = None

HAVE_NUMBA = numba is not None


def njit(fn=None, **kwargs):
    """``numba.njit`` when acceleration is active, otherwise ``None``.

    Returning ``None`` lets callers fall through to the numpy twin without
    paying for an interpreted loop.
    """
    kwargs.setdefault("cache", True)

    def wrap(f):
        if HAVE_NUMBA:
            return numba.njit(**kwargs)(f)
        return None

    return wrap(fn) if fn is not None else wrap


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
