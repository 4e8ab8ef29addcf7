"""Kernel backend selection: compiled extension with numpy fallback.

The compiled backend is used when the extension imported cleanly and
VULNTRIAGE_PURE_PYTHON is not set to 1. Both backends implement the same
three functions (forward_csr, grad_csr, adamw_apply) with matching
semantics; `load_backend` fetches either one explicitly for parity tests
and benchmarks.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels


def load_backend(name: str) -> ModuleType:
    """Fetch a backend by name: "compiled" or "python".

    Raises ImportError for "compiled" when the extension is unavailable.
    """
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def _select() -> ModuleType:
    if os.environ.get("VULNTRIAGE_PURE_PYTHON") == "1":
        return _pykernels
    try:
        from . import _ckernels

        return _ckernels
    except ImportError:
        return _pykernels


_active = _select()

BACKEND: str = _active.NAME
forward_csr = _active.forward_csr
grad_csr = _active.grad_csr
adamw_apply = _active.adamw_apply
