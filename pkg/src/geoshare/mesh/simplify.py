"""Quadric-error-metric decimation with a measured deviation bound."""
from __future__ import annotations

import math

import numpy as np

from .. import kernels
from .model import MeshError, TriangleMesh
from .ops import compute_normals
from .refine import refine_mesh


class InvalidRatio(MeshError):
    pass


def simplify(mesh: TriangleMesh, target_ratio: float) -> tuple[TriangleMesh, float]:
    """Collapse edges by lowest quadric cost until at most
    ceil(target_ratio * n_triangles) triangles remain.

    Non-manifold edges are frozen (their endpoints never move or vanish) and
    collapses that flip an incident triangle normal by more than 90 degrees
    are rejected. Returns the simplified mesh and max_deviation: the largest
    distance from any removed vertex to the result surface.
    """
    if not (0.0 < target_ratio <= 1.0):
        raise InvalidRatio(f"target_ratio must be in (0, 1], got {target_ratio}")
    if target_ratio == 1.0 or mesh.n_triangles == 0:
        return mesh.copy(), 0.0

    target = math.ceil(target_ratio * mesh.n_triangles)
    new_pos, new_tris, kept_src, removed_src = kernels.qem_simplify(
        mesh.positions, mesh.triangles, target
    )
    colors = None if mesh.colors is None else mesh.colors[kept_src]
    if len(removed_src) and len(new_tris):
        new_pos, new_tris, parents = refine_mesh(
            new_pos, new_tris, mesh.positions, mesh.triangles
        )
        if colors is not None:
            blend = colors[parents[:, 0]].astype(np.uint16) + colors[parents[:, 1]]
            colors = (blend // 2).astype(np.uint8)

    out = TriangleMesh(
        positions=new_pos,
        triangles=new_tris,
        normals=None,
        colors=colors,
    )
    if mesh.normals is not None and out.n_triangles:
        out = compute_normals(out)

    if len(removed_src) == 0:
        return out, 0.0
    if out.n_triangles == 0:
        return out, float("inf")
    dists = kernels.point_mesh_min_dist(
        mesh.positions[removed_src],
        new_pos[new_tris[:, 0]],
        new_pos[new_tris[:, 1]],
        new_pos[new_tris[:, 2]],
    )
    return out, float(np.max(dists))
