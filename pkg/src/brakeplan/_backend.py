"""Kernel backend selection.

The compiled extension is used when importable.  Setting the environment
variable ``BRAKEPLAN_BACKEND=python`` forces the numpy fallback.
"""
import os

from . import _kernels_py
from .errors import ConfigurationError

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available():
    return sorted(_BACKENDS)


def get(name=None):
    """Return the kernel module for ``name`` (default: best available)."""
    if name is None:
        name = os.environ.get("BRAKEPLAN_BACKEND") or ("compiled" if _compiled else "python")
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ConfigurationError(f"unknown or unavailable backend {name!r}; have {available()}") from None


def default_name():
    return get().NAME
