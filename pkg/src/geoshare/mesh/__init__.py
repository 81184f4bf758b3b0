"""Triangle-mesh cleanup, decimation, and de-shading for LOD tile content."""

from .deshade import IlluminationUnderdetermined, MissingAttributes, deshade
from .distance import hausdorff_distance, point_mesh_distances, sample_surface
from .io import ParseError, read_obj, read_ply, write_obj, write_ply
from .model import Aabb, EmptyMesh, MeshError, NoTriangles, TriangleMesh, mesh_bounds, meshes_equal
from .ops import compute_normals, dedup_vertices
from .simplify import InvalidRatio, simplify

__all__ = [
    "Aabb",
    "EmptyMesh",
    "IlluminationUnderdetermined",
    "InvalidRatio",
    "MeshError",
    "MissingAttributes",
    "NoTriangles",
    "ParseError",
    "TriangleMesh",
    "compute_normals",
    "dedup_vertices",
    "deshade",
    "hausdorff_distance",
    "mesh_bounds",
    "meshes_equal",
    "point_mesh_distances",
    "read_obj",
    "read_ply",
    "sample_surface",
    "simplify",
    "write_obj",
    "write_ply",
]
