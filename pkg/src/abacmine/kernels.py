"""Kernel backend selection: compiled extension if available, NumPy otherwise.

Set ABACMINE_PURE_PYTHON=1 to force the NumPy path (useful for debugging and
for the backend-parity benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCE_PURE = os.environ.get("ABACMINE_PURE_PYTHON", "") not in ("", "0")

if not _FORCE_PURE:
    try:
        from . import _kernels_cy as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "numpy"
else:
    _impl = _kernels_py
    BACKEND = "numpy"


def backend_name() -> str:
    return BACKEND


def get_backend(name: str | None = None):
    """Return a kernel module by name ('compiled' / 'numpy' / None for active)."""
    if name is None:
        return _impl
    if name == "numpy":
        return _kernels_py
    if name == "compiled":
        from . import _kernels_cy
        return _kernels_cy
    raise ValueError(f"unknown kernel backend {name!r}")


dissim_matrix = _impl.dissim_matrix
assign = _impl.assign
update_modes = _impl.update_modes
member_cost = _impl.member_cost
density = _impl.density
cluster_dist_sums = _impl.cluster_dist_sums
