"""Hot-kernel dispatch: compiled extension when available, NumPy otherwise.

Set LDIPHOTO_PURE_PYTHON=1 to force the NumPy path (used by the benchmark and
the equivalence tests). ``BACKEND`` reports which one is active.
"""

import os

from . import pyref

if os.environ.get("LDIPHOTO_PURE_PYTHON"):
    _impl = pyref
    BACKEND = "python"
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]

        BACKEND = "native"
    except ImportError:
        _impl = pyref
        BACKEND = "python"

bilateral_median = _impl.bilateral_median
diffusion_solve = _impl.diffusion_solve
rasterize = _impl.rasterize

__all__ = ["BACKEND", "bilateral_median", "diffusion_solve", "rasterize", "pyref"]
