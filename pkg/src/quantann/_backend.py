"""Kernel backend selection.

The compiled extension (quantann._core) is preferred; the numpy fallback
(quantann._kernels_py) loads when the extension is absent or when the
environment variable QUANTANN_PURE_PYTHON is set to a non-empty value
other than "0". Both expose the same surface: BACKEND, dot, l2sq, norms,
scan_topk, HnswCore.
"""

from __future__ import annotations

import os

_FORCE_PURE = os.environ.get("QUANTANN_PURE_PYTHON", "").strip()

if _FORCE_PURE and _FORCE_PURE != "0":
    from . import _kernels_py as impl
else:
    try:
        from . import _core as impl  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as impl

BACKEND = impl.BACKEND
dot = impl.dot
l2sq = impl.l2sq
norms = impl.norms
scan_topk = impl.scan_topk
HnswCore = impl.HnswCore


def get_backend(name=None):
    """Return a kernel module by name: None for the active one, else
    "compiled" or "pure". Raises ImportError if the compiled extension is
    requested but not built."""
    if name is None:
        return impl
    if name == "pure":
        from . import _kernels_py

        return _kernels_py
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")
