"""Kernel backend selected at import: the Cython extension when it is built,
otherwise the pure-Python mirror. Set ``FLEXJOINT_PURE_PYTHON=1`` to force the
fallback.
"""
import os

if os.environ.get("FLEXJOINT_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as backend
else:
    try:
        from . import _kernels as backend
    except ImportError:  # extension not built
        from . import _kernels_py as backend

from . import _kernels_py as python_backend

COMPILED = backend.COMPILED
plant_rhs = backend.plant_rhs
integrate = backend.integrate
inverse_step = backend.inverse_step
inverse_path = backend.inverse_path
advance_path = backend.advance_path
march_rate = backend.march_rate

NSTATE = python_backend.NSTATE
NPARAM = python_backend.NPARAM
BACKEND_NAME = "compiled" if COMPILED else "python"
