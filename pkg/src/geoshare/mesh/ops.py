"""Vertex dedup and normal computation."""
from __future__ import annotations

import numpy as np

from .model import NoTriangles, TriangleMesh

# Triangles with area below this fraction of (bbox diagonal)^2 are dropped
# after dedup remapping.
_DEGENERATE_AREA_REL = 1e-12


def _triangle_areas(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = positions[triangles[:, 0]]
    b = positions[triangles[:, 1]]
    c = positions[triangles[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def dedup_vertices(mesh: TriangleMesh, epsilon: float) -> TriangleMesh:
    """Merge vertices within epsilon of an earlier kept vertex.

    Spatial hashing on an epsilon-sized grid; each vertex merges into the
    lowest-index survivor within epsilon, so survivors end up pairwise more
    than epsilon apart and the operation is idempotent. Triangles that end up
    repeating an index or with near-zero area are dropped.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    pos = mesh.positions
    n = len(pos)
    target = np.arange(n, dtype=np.int64)

    if n and epsilon == 0.0:
        seen: dict[bytes, int] = {}
        for i in range(n):
            key = pos[i].tobytes()
            target[i] = seen.setdefault(key, i)
    elif n:
        inv = 1.0 / epsilon
        grid: dict[tuple[int, int, int], list[int]] = {}
        eps2 = epsilon * epsilon
        for i in range(n):
            cx, cy, cz = (int(np.floor(pos[i, 0] * inv)),
                          int(np.floor(pos[i, 1] * inv)),
                          int(np.floor(pos[i, 2] * inv)))
            best = -1
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for dz in (-1, 0, 1):
                        for j in grid.get((cx + dx, cy + dy, cz + dz), ()):
                            d = pos[i] - pos[j]
                            if float(d @ d) <= eps2 and (best == -1 or j < best):
                                best = j
            if best >= 0:
                target[i] = best
            else:
                grid.setdefault((cx, cy, cz), []).append(i)

    survivors = np.flatnonzero(target == np.arange(n))
    remap = np.full(n, -1, dtype=np.int64)
    remap[survivors] = np.arange(len(survivors))
    new_index = remap[target]

    tris = new_index[mesh.triangles] if mesh.n_triangles else mesh.triangles.copy()
    if len(tris):
        keep = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
        tris = tris[keep]
    new_pos = pos[survivors]
    if len(tris):
        diag = float(np.linalg.norm(pos.max(axis=0) - pos.min(axis=0))) if n else 0.0
        if diag > 0.0:
            areas = _triangle_areas(new_pos, tris)
            tris = tris[areas >= _DEGENERATE_AREA_REL * diag * diag]

    return TriangleMesh(
        positions=new_pos,
        triangles=tris,
        normals=None if mesh.normals is None else mesh.normals[survivors],
        colors=None if mesh.colors is None else mesh.colors[survivors],
    )


def compute_normals(mesh: TriangleMesh) -> TriangleMesh:
    """Per-vertex normals as the normalized sum of area-weighted face normals.

    Vertices with no incident (non-degenerate) triangle get +z.
    """
    if mesh.n_triangles == 0:
        raise NoTriangles("mesh has no triangles")
    pos = mesh.positions
    tris = mesh.triangles
    face = np.cross(pos[tris[:, 1]] - pos[tris[:, 0]], pos[tris[:, 2]] - pos[tris[:, 0]])
    acc = np.zeros_like(pos)
    for k in range(3):
        np.add.at(acc, tris[:, k], face)
    lengths = np.linalg.norm(acc, axis=1)
    ok = lengths > 0.0
    normals = np.zeros_like(pos)
    normals[ok] = acc[ok] / lengths[ok, None]
    normals[~ok] = (0.0, 0.0, 1.0)
    out = mesh.copy()
    out.normals = normals
    return out
