"""Pick the compiled kernels when available.

Set ``BOSONWALK_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _fallback

fallback = _fallback

if os.environ.get("BOSONWALK_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        kernels = _fallback
        BACKEND = "python"


def available_backends():
    out = {"python": _fallback}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    return out
