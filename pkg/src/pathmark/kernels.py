"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy
fallback.  Setting ``PATHMARK_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels


def get_backend(name=None):
    if name is None:
        return backend
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}") from None


def _select():
    if os.environ.get("PATHMARK_PURE_PYTHON", "").strip() not in ("", "0"):
        return _pykernels
    return _ckernels or _pykernels


backend = _select()
BACKEND = backend.NAME

uniforms = backend.uniforms
categorical = backend.categorical
projected_intensity = backend.projected_intensity
stream_key = backend.stream_key
