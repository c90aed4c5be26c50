"""Kernel backend selection: compiled extension if available, numpy fallback otherwise.

Set RELAYCAP_BACKEND=python or =cython to force a choice (forcing cython when
the extension is missing raises at import). Both backends are bit-identical;
see benchmark.py for the speed comparison.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py


def _load(name: str | None) -> ModuleType:
    if name == "python":
        return _kernels_py
    try:
        from . import _kernels_cy
        return _kernels_cy
    except ImportError:
        if name == "cython":
            raise ImportError(
                "RELAYCAP_BACKEND=cython but the compiled extension is not built; "
                "reinstall the package or drop the override"
            )
        return _kernels_py


_requested = os.environ.get("RELAYCAP_BACKEND")
if _requested not in (None, "python", "cython"):
    raise ValueError(f"RELAYCAP_BACKEND must be 'python' or 'cython', got {_requested!r}")

kernels = _load(_requested)
BACKEND = kernels.BACKEND_NAME


def get_kernels(backend: str | None = None) -> ModuleType:
    """Kernel module for an explicit backend name (None = the selected one)."""
    if backend is None:
        return kernels
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        from . import _kernels_cy
        return _kernels_cy
    raise ValueError(f"unknown backend {backend!r}")
