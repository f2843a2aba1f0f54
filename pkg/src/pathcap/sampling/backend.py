"""Kernel selection: compiled step kernel when importable, numpy otherwise.

``PATHCAP_KERNEL=python|compiled`` forces a choice (the benchmark uses it);
:func:`set_backend` does the same programmatically.
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _stepkernel  # compiled extension, optional

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on build environment
    _stepkernel = None
    HAVE_COMPILED = False

_forced = os.environ.get("PATHCAP_KERNEL")
_active = None


def set_backend(name: str | None) -> None:
    """Force 'python' or 'compiled'; None restores the default preference."""
    global _active
    if name is None:
        _active = None
        return
    if name not in ("python", "compiled"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernel is not available")
    _active = name


def active_backend() -> str:
    if _active is not None:
        return _active
    if _forced in ("python", "compiled"):
        if _forced == "compiled" and not HAVE_COMPILED:
            raise RuntimeError("PATHCAP_KERNEL=compiled but the extension is missing")
        return _forced
    return "compiled" if HAVE_COMPILED else "python"


def draw_step(kind, length, support, cum, prob, alias, slots, u):
    if active_backend() == "compiled":
        return _stepkernel.draw_step(kind, length, support, cum, prob, alias, slots, u)
    return _kernel_py.draw_step(kind, length, support, cum, prob, alias, slots, u)
