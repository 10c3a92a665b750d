"""Kernel lane selection.

Hot loops have two interchangeable implementations: a numba @njit lane and a
pure-numpy lane.  Setting the environment variable PERCLAB_NO_NUMBA=1 (before
import) forces the numpy lane; otherwise numba is used when importable.
"""

import os

FORCE_NUMPY = os.environ.get("PERCLAB_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

if FORCE_NUMPY:
    HAVE_NUMBA = False
else:
    try:
        import numba  # noqa: F401
        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not FORCE_NUMPY
LANE = "numba" if USE_NUMBA else "numpy"
