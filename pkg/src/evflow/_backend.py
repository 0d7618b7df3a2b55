"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable; otherwise the numpy
kernels are.  ``EVFLOW_BACKEND=python`` forces the fallback at import time and
:func:`use` switches at runtime (benchmarks and parity tests rely on it).
"""
import os

from . import _pykernels

try:
    from . import _kernels as _native
except ImportError:  # extension not built
    _native = None

_BACKENDS = {"python": _pykernels}
if _native is not None:
    _BACKENDS["native"] = _native

_choice = os.environ.get("EVFLOW_BACKEND", "native" if _native is not None else "python")
if _choice not in _BACKENDS:
    _choice = "python"
_active = _BACKENDS[_choice]


def available():
    return sorted(_BACKENDS)


def name():
    return _choice


def kernels():
    return _active


def use(backend):
    """Select ``"native"`` or ``"python"`` kernels; returns the previous name."""
    global _active, _choice
    if backend not in _BACKENDS:
        raise ValueError(f"backend {backend!r} not available (have {available()})")
    previous = _choice
    _choice, _active = backend, _BACKENDS[backend]
    return previous


def default_threads():
    value = os.environ.get("EVFLOW_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return 1
