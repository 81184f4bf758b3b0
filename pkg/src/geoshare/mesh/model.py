"""Triangle mesh and axis-aligned box types shared across the pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import GeoshareError


class MeshError(GeoshareError):
    pass


class EmptyMesh(MeshError):
    pass


class NoTriangles(MeshError):
    pass


@dataclass(eq=False)
class TriangleMesh:
    """Indexed triangle mesh: positions (N,3) float64, triangles (M,3) int,
    optional unit normals (N,3) and RGBA colors (N,4) uint8."""

    positions: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray | None = None
    colors: np.ndarray | None = None

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.normals is not None:
            self.normals = np.ascontiguousarray(self.normals, dtype=np.float64).reshape(-1, 3)
        if self.colors is not None:
            self.colors = np.ascontiguousarray(self.colors, dtype=np.uint8).reshape(-1, 4)

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def validate(self) -> None:
        n = self.n_vertices
        if self.triangles.size:
            if self.triangles.min() < 0 or self.triangles.max() >= n:
                raise MeshError("triangle index out of range")
            t = self.triangles
            if ((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])).any():
                raise MeshError("triangle repeats a vertex index")
        if self.normals is not None:
            if len(self.normals) != n:
                raise MeshError("normals length mismatch")
            lengths = np.linalg.norm(self.normals, axis=1)
            if self.normals.size and np.abs(lengths - 1.0).max() > 1e-6:
                raise MeshError("normals are not unit length")
        if self.colors is not None and len(self.colors) != n:
            raise MeshError("colors length mismatch")

    def copy(self) -> "TriangleMesh":
        return TriangleMesh(
            positions=self.positions.copy(),
            triangles=self.triangles.copy(),
            normals=None if self.normals is None else self.normals.copy(),
            colors=None if self.colors is None else self.colors.copy(),
        )


def meshes_equal(a: TriangleMesh, b: TriangleMesh) -> bool:
    """Bit-exact equality, including presence/absence of attributes."""
    if (a.normals is None) != (b.normals is None) or (a.colors is None) != (b.colors is None):
        return False
    if a.positions.shape != b.positions.shape or a.triangles.shape != b.triangles.shape:
        return False
    if not (np.array_equal(a.positions, b.positions) and np.array_equal(a.triangles, b.triangles)):
        return False
    if a.normals is not None and not np.array_equal(a.normals, b.normals):
        return False
    if a.colors is not None and not np.array_equal(a.colors, b.colors):
        return False
    return True


@dataclass
class Aabb:
    """Closed axis-aligned box, min <= max componentwise."""

    min: np.ndarray = field(default_factory=lambda: np.zeros(3))
    max: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.min = np.asarray(self.min, dtype=np.float64).reshape(3)
        self.max = np.asarray(self.max, dtype=np.float64).reshape(3)
        if (self.min > self.max).any():
            raise MeshError(f"invalid box: min {self.min} > max {self.max}")

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    @property
    def half_size(self) -> np.ndarray:
        return 0.5 * (self.max - self.min)

    def contains_point(self, p, rel_slack: float = 0.0) -> bool:
        p = np.asarray(p, dtype=np.float64)
        slack = rel_slack * max(float(np.abs(self.min).max(initial=0.0)),
                                float(np.abs(self.max).max(initial=0.0)), 1.0)
        return bool((p >= self.min - slack).all() and (p <= self.max + slack).all())

    def contains_box(self, other: "Aabb", rel_slack: float = 0.0) -> bool:
        slack = rel_slack * max(float(np.abs(self.min).max(initial=0.0)),
                                float(np.abs(self.max).max(initial=0.0)), 1.0)
        return bool((other.min >= self.min - slack).all() and (other.max <= self.max + slack).all())

    def union(self, other: "Aabb") -> "Aabb":
        return Aabb(np.minimum(self.min, other.min), np.maximum(self.max, other.max))

    def distance_to_point(self, p) -> float:
        """Distance from p to the closest point of the box (0 inside)."""
        p = np.asarray(p, dtype=np.float64)
        d = np.maximum(np.maximum(self.min - p, p - self.max), 0.0)
        return float(np.linalg.norm(d))


def mesh_bounds(mesh: TriangleMesh) -> Aabb:
    """Tight componentwise bounds over all vertices."""
    if mesh.n_vertices == 0:
        raise EmptyMesh("mesh has no vertices")
    return Aabb(mesh.positions.min(axis=0), mesh.positions.max(axis=0))
