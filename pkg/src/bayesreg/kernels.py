"""Backend selection for the hot energy/gradient kernels.

The compiled extension is preferred when importable; otherwise the NumPy
implementation is used.  Set the environment variable
``BAYESREG_PURE_PYTHON=1`` before import to force the fallback (used by the
benchmark and to debug backend discrepancies).
"""

import os

from . import _kernels_py

if os.environ.get("BAYESREG_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

mixture_energy = _impl.mixture_energy
mixture_energy_grad = _impl.mixture_energy_grad
