"""Kernel backend selection.

The compiled Cython module is used when it imports; set
``STICKCONV_PURE_PYTHON=1`` to force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

if _ckernels is not None and os.environ.get("STICKCONV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    BACKEND = "cython"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]
stick_accumulate = _impl.stick_accumulate
h_sums = _impl.h_sums
rl_convolve = _impl.rl_convolve


def get_backend(name: str):
    """Module implementing the kernels for ``name`` (``"cython"``/``"python"``)."""
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}") from None
