"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it was built; otherwise
(or when ``ABSPIN_PURE_PYTHON=1`` is set) the numpy versions in
``_kernels_py`` are used. Both expose the same five functions.
"""

import os

from . import _kernels_py

if os.environ.get("ABSPIN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

magnus_product = _impl.magnus_product
angle_sum = _impl.angle_sum
min_distance = _impl.min_distance
gauge_line_integral = _impl.gauge_line_integral
solenoid_line_integral = _impl.solenoid_line_integral

__all__ = [
    "BACKEND",
    "magnus_product",
    "angle_sum",
    "min_distance",
    "gauge_line_integral",
    "solenoid_line_integral",
]
