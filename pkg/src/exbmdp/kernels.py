"""Backend selection for the hot kernels.

The compiled extension is preferred when importable; set EXBMDP_PURE=1 to
force the numpy fallback. ``get_backend`` exposes both for benchmarking.
"""

from __future__ import annotations

import os

from . import _kernels_py

_backends = {"pure-python": _kernels_py}
try:
    from . import _kernels as _kernels_c

    _backends["compiled"] = _kernels_c
except ImportError:
    _kernels_c = None

if os.environ.get("EXBMDP_PURE") or _kernels_c is None:
    _active = _kernels_py
else:
    _active = _kernels_c

BACKEND = _active.BACKEND
rgs_first = _active.rgs_first
rgs_successor = _active.rgs_successor
exact_sweep = _active.exact_sweep
span_sweep = _active.span_sweep


def available_backends() -> list[str]:
    return sorted(_backends)


def get_backend(name: str):
    return _backends[name]
