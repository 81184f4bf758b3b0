"""Hot geometry kernels with a compiled core and a pure fallback.

The compiled extension (`geoshare.kernels._native`, built from Cython) is
preferred when importable; otherwise the pure NumPy/Python twin is used.
Set GEOSHARE_PURE_KERNELS=1 to force the fallback. `benchmarks/bench_kernels.py`
compares the two.
"""
import os

from . import pure

if os.environ.get("GEOSHARE_PURE_KERNELS"):
    _backend = pure
else:
    try:
        from . import _native as _backend
    except ImportError:
        _backend = pure

BACKEND = _backend.NAME
point_mesh_closest = _backend.point_mesh_closest
point_mesh_min_dist = _backend.point_mesh_min_dist
qem_simplify = _backend.qem_simplify
