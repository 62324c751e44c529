"""Pick the compiled slot loop when it is importable.

Set ``COGRELAY_PURE=1`` to force the pure-Python fallback.
"""
import os

from . import _slots_py

if os.environ.get("COGRELAY_PURE"):
    run_chunk = _slots_py.run_chunk
    BACKEND = "python"
else:
    try:
        from ._slots import run_chunk
        BACKEND = "cython"
    except ImportError:
        run_chunk = _slots_py.run_chunk
        BACKEND = "python"


def get_kernel(name=None):
    """Return ``(name, run_chunk)`` for ``"cython"``, ``"python"`` or the default."""
    if name is None:
        return BACKEND, run_chunk
    if name == "python":
        return "python", _slots_py.run_chunk
    if name == "cython":
        from ._slots import run_chunk as compiled
        return "cython", compiled
    raise ValueError(f"unknown backend {name!r}")
