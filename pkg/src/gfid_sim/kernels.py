"""Select the compiled kernels when available, else the numpy fallback.

Set ``GFID_SIM_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
conv_row_pass = _kernels_py.conv_row_pass
fc_pass = _kernels_py.fc_pass

if os.environ.get("GFID_SIM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        conv_row_pass = _compiled.conv_row_pass
        fc_pass = _compiled.fc_pass
