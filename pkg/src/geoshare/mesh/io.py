"""Wavefront OBJ (extended vertex-color form) and ASCII PLY point clouds.

OBJ subset: `v x y z [r g b]`, `vn x y z`, `f` with 1-based `v`, `v//vn`,
`v/vt` or `v/vt/vn` references (`vt` ignored). Faces with more than three
corners are fan-triangulated. The writer emits `v` (with colors when
present), `vn`, and `f v//vn`.
"""
from __future__ import annotations

import os

import numpy as np

from .model import MeshError, TriangleMesh


class ParseError(MeshError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def read_obj(path: str | os.PathLike) -> TriangleMesh:
    positions: list[list[float]] = []
    colors: list[list[float]] = []
    vn: list[list[float]] = []
    faces: list[tuple[int, int]] = []  # (vertex index, normal index or -1)
    tris: list[list[int]] = []
    vertex_normal_ref: dict[int, int] = {}

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            try:
                if tag == "v":
                    if len(parts) not in (4, 7):
                        raise ValueError("expected 3 or 6 components")
                    positions.append([float(x) for x in parts[1:4]])
                    colors.append([float(x) for x in parts[4:7]] if len(parts) == 7 else [])
                elif tag == "vn":
                    vn.append([float(x) for x in parts[1:4]])
                elif tag == "f":
                    corners = []
                    for ref in parts[1:]:
                        fields = ref.split("/")
                        vi = int(fields[0])
                        ni = int(fields[2]) if len(fields) == 3 and fields[2] else 0
                        vi = vi - 1 if vi > 0 else len(positions) + vi
                        ni = ni - 1 if ni > 0 else (len(vn) + ni if ni else -1)
                        if not (0 <= vi < len(positions)):
                            raise ValueError(f"vertex index {fields[0]} out of range")
                        if ni >= len(vn):
                            raise ValueError(f"normal index out of range")
                        corners.append((vi, ni))
                    if len(corners) < 3:
                        raise ValueError("face needs >= 3 corners")
                    for k in range(1, len(corners) - 1):
                        tris.append([corners[0][0], corners[k][0], corners[k + 1][0]])
                    for vi, ni in corners:
                        if ni >= 0:
                            vertex_normal_ref[vi] = ni
                # other tags (vt, o, g, s, usemtl, mtllib ...) are ignored
            except (ValueError, IndexError) as e:
                raise ParseError(f"{path}:{lineno}: bad OBJ line {line!r}: {e}") from None

    pos = np.array(positions, dtype=np.float64).reshape(-1, 3)
    tri = np.array(tris, dtype=np.int64).reshape(-1, 3)

    color_arr = None
    if any(colors):
        color_arr = np.full((len(pos), 4), 255, dtype=np.uint8)
        for i, c in enumerate(colors):
            if c:
                color_arr[i, :3] = np.clip(np.round(np.array(c) * 255.0), 0, 255).astype(np.uint8)

    normal_arr = None
    if vn and vertex_normal_ref:
        vn_arr = np.array(vn, dtype=np.float64)
        normal_arr = np.zeros((len(pos), 3))
        normal_arr[:, 2] = 1.0
        for vi, ni in vertex_normal_ref.items():
            normal_arr[vi] = vn_arr[ni]
        lengths = np.linalg.norm(normal_arr, axis=1)
        lengths[lengths == 0.0] = 1.0
        normal_arr = normal_arr / lengths[:, None]

    return TriangleMesh(positions=pos, triangles=tri, normals=normal_arr, colors=color_arr)


def write_obj(mesh: TriangleMesh, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(mesh.n_vertices):
            x, y, z = mesh.positions[i]
            if mesh.colors is not None:
                r, g, b = (mesh.colors[i, :3].astype(np.float64) / 255.0)
                fh.write(f"v {_fmt(x)} {_fmt(y)} {_fmt(z)} {_fmt(r)} {_fmt(g)} {_fmt(b)}\n")
            else:
                fh.write(f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}\n")
        if mesh.normals is not None:
            for nx, ny, nz in mesh.normals:
                fh.write(f"vn {_fmt(nx)} {_fmt(ny)} {_fmt(nz)}\n")
            for a, b, c in mesh.triangles + 1:
                fh.write(f"f {a}//{a} {b}//{b} {c}//{c}\n")
        else:
            for a, b, c in mesh.triangles + 1:
                fh.write(f"f {a} {b} {c}\n")


def write_ply(points: np.ndarray, path: str | os.PathLike,
              colors: np.ndarray | None = None) -> None:
    """ASCII PLY point cloud: x y z float properties plus optional RGB."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(pts)}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        if colors is not None:
            fh.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
        fh.write("end_header\n")
        for i, (x, y, z) in enumerate(pts):
            line = f"{_fmt(x)} {_fmt(y)} {_fmt(z)}"
            if colors is not None:
                r, g, b = colors[i][:3]
                line += f" {int(r)} {int(g)} {int(b)}"
            fh.write(line + "\n")


def read_ply(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray | None]:
    """Read an ASCII PLY point cloud; returns (points, colors or None)."""
    with open(path, "r", encoding="utf-8") as fh:
        if fh.readline().strip() != "ply":
            raise ParseError("not a PLY file")
        if fh.readline().strip().split() != ["format", "ascii", "1.0"]:
            raise ParseError("only ascii 1.0 PLY is supported")
        n_vertex = None
        props: list[str] = []
        for line in fh:
            parts = line.strip().split()
            if not parts or parts[0] == "comment":
                continue
            if parts[0] == "element":
                if parts[1] == "vertex":
                    n_vertex = int(parts[2])
                elif int(parts[2]) != 0:
                    raise ParseError(f"unsupported element {parts[1]}")
            elif parts[0] == "property":
                props.append(parts[-1])
            elif parts[0] == "end_header":
                break
        if n_vertex is None:
            raise ParseError("missing vertex element")
        for name in ("x", "y", "z"):
            if name not in props:
                raise ParseError(f"missing property {name}")
        has_color = all(p in props for p in ("red", "green", "blue"))
        pts = np.empty((n_vertex, 3))
        colors = np.empty((n_vertex, 3), dtype=np.uint8) if has_color else None
        col = {p: i for i, p in enumerate(props)}
        for i in range(n_vertex):
            parts = fh.readline().split()
            if len(parts) != len(props):
                raise ParseError(f"vertex row {i} has {len(parts)} fields, expected {len(props)}")
            pts[i] = (float(parts[col["x"]]), float(parts[col["y"]]), float(parts[col["z"]]))
            if has_color:
                colors[i] = (int(parts[col["red"]]), int(parts[col["green"]]),
                             int(parts[col["blue"]]))
        return pts, colors
