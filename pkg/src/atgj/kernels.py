"""Kernel backend selection.

The compiled core (``atgj._kernels``) is used when it was built; otherwise the
numpy implementation in ``atgj._kernels_py`` takes over.  Set
``ATGJ_BACKEND=numpy`` to force the fallback.
"""

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def available():
    names = ["numpy"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def get_backend(name=None):
    """Return the kernel module for ``name`` ('cython', 'numpy' or None = best)."""
    name = name or os.environ.get("ATGJ_BACKEND") or ("cython" if _compiled else "numpy")
    if name == "numpy":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; reinstall the package")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}; choose from {available()}")
