"""Kernel backend selection.

Two interchangeable implementations of the SGD inner loops exist: the
compiled Cython module `_kernels` and the numpy reference `_py_kernels`.
The environment variable GREEDYNET_KERNELS picks one at import time:

    auto    use the compiled kernels when importable, else numpy (default)
    cython  require the compiled kernels, fail loudly if missing
    python  force the numpy reference

`use_backend` switches temporarily, which the tests use to compare the two.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

from . import _py_kernels

_FORCED_ERROR = (
    "GREEDYNET_KERNELS=cython but the compiled extension is not importable; "
    "reinstall the package or set GREEDYNET_KERNELS=python"
)


def _load(name: str):
    if name == "python":
        return _py_kernels
    if name == "cython":
        from . import _kernels  # noqa: PLC0415  (deliberate lazy import)

        return _kernels
    if name == "auto":
        try:
            from . import _kernels  # noqa: PLC0415

            return _kernels
        except ImportError:
            return _py_kernels
    raise ValueError(f"unknown kernel backend {name!r} (use auto, cython, or python)")


def _initial():
    name = os.environ.get("GREEDYNET_KERNELS", "auto")
    try:
        return _load(name)
    except ImportError:
        raise ImportError(_FORCED_ERROR) from None


_active = _initial()


def active_backend() -> str:
    """Name of the backend currently in use: "cython" or "python"."""
    return _active.BACKEND_NAME


def get_kernels():
    """The active kernel module; train loops fetch this per call."""
    return _active


def set_backend(name: str) -> str:
    """Switch backends for the rest of the process; returns the active name."""
    global _active
    _active = _load(name)
    return _active.BACKEND_NAME


def cython_available() -> bool:
    try:
        from . import _kernels  # noqa: F401, PLC0415

        return True
    except ImportError:
        return False


@contextmanager
def use_backend(name: str):
    """Temporarily switch kernel backends within a with-block."""
    global _active
    previous = _active
    _active = _load(name)
    try:
        yield _active
    finally:
        _active = previous
