"""Optional numba acceleration.

Hot pixel loops are written twice: an ``@njit`` kernel and a vectorised
numpy twin.  ``USE_NUMBA`` picks which one the public API dispatches to.
Set ``STEREOCONV_DISABLE_NUMBA=1`` to force the numpy path (useful on
platforms without numba, or to cross-check the two).
"""

import os

_DISABLED = os.environ.get("STEREOCONV_DISABLE_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
    "on",
)

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise a no-op decorator.

    The decorated kernel is always compiled when numba exists, even if
    ``USE_NUMBA`` is off, so the benchmark can time both paths in one
    process.
    """
    if HAVE_NUMBA:
        return numba.njit(*args, cache=True, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(func):
        return func

    return wrapper


def pick(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
