"""Select the Dormand-Prince kernel at import time.

The compiled extension is preferred; setting ``RYDSSH_BACKEND=python``
forces the numpy implementation.
"""
import os

from . import _dopri_py

NAME = "python"
dopri5 = _dopri_py.dopri5

if os.environ.get("RYDSSH_BACKEND", "").lower() != "python":
    try:
        from . import _dopri as _ext
    except ImportError:
        pass
    else:
        NAME = "cython"
        dopri5 = _ext.dopri5


def available():
    """Names of kernels that can be imported."""
    names = ["python"]
    try:
        from . import _dopri  # noqa: F401
    except ImportError:
        return names
    return ["cython"] + names
