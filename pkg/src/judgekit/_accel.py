"""Optional numba acceleration.

Hot kernels are compiled with ``numba.njit`` when numba is importable and
``JUDGEKIT_DISABLE_NUMBA`` is unset (or set to ``0``/``false``). Otherwise the
pure-numpy implementations in :mod:`judgekit.kernels` are used. The flag is
read once at import time.
"""

from __future__ import annotations

import os

_FLAG = "JUDGEKIT_DISABLE_NUMBA"


def _disabled_by_env() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in ("", "0", "false", "no")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled_by_env()


def njit(fn):
    """Compile ``fn`` in nopython mode if numba is available, else return it unchanged."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
