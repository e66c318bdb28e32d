"""Select the compiled kernels when available, else the numpy fallback."""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
assemble_kernels = _kernels_py.assemble_kernels
jacobi_eigh = _kernels_py.jacobi_eigh

if os.environ.get("CRACKINV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core
    except ImportError:
        pass
    else:
        assemble_kernels = _core.assemble_kernels
        jacobi_eigh = _core.jacobi_eigh
        BACKEND = "compiled"
