"""Sampled surface-to-surface distances (simplification quality oracle)."""
from __future__ import annotations

import numpy as np

from .. import kernels
from .model import EmptyMesh, TriangleMesh


def sample_surface(mesh: TriangleMesh, n_samples: int, seed: int = 0) -> np.ndarray:
    """Uniform area-weighted surface samples, deterministic for a seed."""
    if mesh.n_triangles == 0:
        raise EmptyMesh("cannot sample a mesh with no triangles")
    rng = np.random.default_rng(seed)
    a = mesh.positions[mesh.triangles[:, 0]]
    b = mesh.positions[mesh.triangles[:, 1]]
    c = mesh.positions[mesh.triangles[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    total = areas.sum()
    if total == 0.0:
        probs = np.full(len(areas), 1.0 / len(areas))
    else:
        probs = areas / total
    idx = rng.choice(len(areas), size=n_samples, p=probs)
    r1 = rng.random(n_samples)
    r2 = rng.random(n_samples)
    su = np.sqrt(r1)
    u = 1.0 - su
    v = su * (1.0 - r2)
    w = su * r2
    return u[:, None] * a[idx] + v[:, None] * b[idx] + w[:, None] * c[idx]


def point_mesh_distances(points: np.ndarray, mesh: TriangleMesh) -> np.ndarray:
    """Exact distance from each point to the closest triangle of the mesh."""
    if mesh.n_triangles == 0:
        raise EmptyMesh("mesh has no triangles")
    return kernels.point_mesh_min_dist(
        np.asarray(points, dtype=np.float64).reshape(-1, 3),
        mesh.positions[mesh.triangles[:, 0]],
        mesh.positions[mesh.triangles[:, 1]],
        mesh.positions[mesh.triangles[:, 2]],
    )


def hausdorff_distance(a: TriangleMesh, b: TriangleMesh, n_samples: int = 1000,
                       seed: int = 0) -> float:
    """Symmetric sampled Hausdorff distance between two surfaces."""
    if a.n_triangles == 0 or b.n_triangles == 0:
        raise EmptyMesh("both meshes need triangles")
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    samples_a = sample_surface(a, n_samples, seed)
    samples_b = sample_surface(b, n_samples, seed + 1)
    d_ab = point_mesh_distances(samples_a, b).max()
    d_ba = point_mesh_distances(samples_b, a).max()
    return float(max(d_ab, d_ba))
