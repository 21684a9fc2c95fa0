"""Kernel selection.

The compiled extension is used when it was built; otherwise the pure-Python
module takes over.  Set ``ROTOR_ANNULUS_PURE=1`` to force the fallback.
"""
import importlib
import os

from . import _pykernels


def load(name=None):
    """Return the kernel module called ``name`` ("cython" or "python")."""
    if name == "python":
        return _pykernels
    try:
        return importlib.import_module("rotor_annulus._ckernels")
    except ImportError:
        if name == "cython":
            raise
        return _pykernels


kernels = load("python" if os.environ.get("ROTOR_ANNULUS_PURE") else None)
BACKEND = kernels.NAME
