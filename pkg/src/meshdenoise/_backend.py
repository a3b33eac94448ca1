"""Selects the compiled kernels when importable, else the pure-Python ones.

Set ``MESHDENOISE_BACKEND=python`` to force the fallback.
"""

import os

from . import _fallback

kernels = _fallback
BACKEND = "python"

if os.environ.get("MESHDENOISE_BACKEND", "").lower() != "python":
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        kernels = _kernels
        BACKEND = "compiled"
