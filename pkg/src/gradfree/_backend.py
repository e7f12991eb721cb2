"""Select the compiled kernels when available, else the numpy fallback."""
import os

if os.environ.get("GRADFREE_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as kernels
    COMPILED = False
else:
    try:
        from . import _kernels as kernels
        COMPILED = True
    except ImportError:
        from . import _kernels_py as kernels
        COMPILED = False

BACKEND = "cython" if COMPILED else "python"
