"""Baked-illumination removal for vertex-colored meshes.

Fits luminance(v) = albedo(v) * (ambient + max(0, n(v) . light)) with a
single directional light of unit intensity, by alternating least squares:
fix albedo and solve (ambient, light), then fix the light and solve the
per-vertex albedo. Chroma is preserved because each vertex color is divided
by a scalar shading factor.
"""
from __future__ import annotations

import numpy as np

from .model import MeshError, TriangleMesh

ALBEDO_FLOOR = 0.05
_ALS_ITERS = 10
_LIT_REFITS = 5
# Below this directional-to-ambient ratio the light is treated as absent:
# renormalizing to a unit light would blow the ambient term up and crush
# the recovered albedo toward black.
_MIN_DIRECTIONAL_FRACTION = 0.02


class MissingAttributes(MeshError):
    pass


class IlluminationUnderdetermined(MeshError):
    pass


def _luminance(rgb: np.ndarray) -> np.ndarray:
    return rgb[:, 0] * 0.2126 + rgb[:, 1] * 0.7152 + rgb[:, 2] * 0.0722


def _solve_light(normals: np.ndarray, shading: np.ndarray) -> tuple[float, np.ndarray]:
    """Least-squares (ambient, light vector) for shading ~ a + max(0, n.l).

    The max() kink is handled by refitting with the lit set implied by the
    previous solution; unlit rows contribute only to the ambient term.
    """
    n_pts = len(normals)
    lit = np.ones(n_pts, dtype=bool)
    amb, light = 0.0, np.zeros(3)
    for _ in range(_LIT_REFITS):
        design = np.empty((n_pts, 4))
        design[:, 0] = 1.0
        design[:, 1:] = np.where(lit[:, None], normals, 0.0)
        coef, *_ = np.linalg.lstsq(design, shading, rcond=None)
        amb, light = float(coef[0]), coef[1:]
        new_lit = normals @ light > 0.0
        if (new_lit == lit).all():
            break
        lit = new_lit
    return amb, light


def deshade(mesh: TriangleMesh) -> tuple[TriangleMesh, np.ndarray, float]:
    """Recover unlit diffuse vertex colors.

    Returns (mesh with albedo colors, unit light direction, ambient term).
    When no directional component is detectable the colors pass through
    unchanged with light +z and ambient 1 by convention.
    """
    if mesh.colors is None or mesh.normals is None:
        raise MissingAttributes("deshade needs both colors and normals")
    if mesh.n_vertices < 10:
        raise MissingAttributes(f"deshade needs >= 10 vertices, got {mesh.n_vertices}")

    normals = mesh.normals
    sv = np.linalg.svd(normals, compute_uv=False)
    if sv[0] == 0.0 or (sv > 1e-9 * sv[0]).sum() < 2:
        raise IlluminationUnderdetermined("vertex normals span fewer than 2 dimensions")

    rgb = mesh.colors[:, :3].astype(np.float64) / 255.0
    lum = _luminance(rgb)
    if lum.max() == 0.0:
        out = mesh.copy()
        return out, np.array([0.0, 0.0, 1.0]), 1.0

    albedo = np.full(len(lum), max(float(lum.mean()), ALBEDO_FLOOR))
    amb, light = 1.0, np.zeros(3)
    for _ in range(_ALS_ITERS):
        shading_obs = lum / np.maximum(albedo, ALBEDO_FLOOR)
        amb, light = _solve_light(normals, shading_obs)
        shading = np.maximum(amb + np.maximum(normals @ light, 0.0), 1e-6)
        albedo = lum / shading

    intensity = float(np.linalg.norm(light))
    if intensity <= _MIN_DIRECTIONAL_FRACTION * abs(amb) or intensity < 1e-12:
        out = mesh.copy()
        return out, np.array([0.0, 0.0, 1.0]), 1.0

    light_dir = light / intensity
    ambient = amb / intensity
    shading = np.maximum(ambient + np.maximum(normals @ light_dir, 0.0), 1e-6)

    albedo_rgb = np.clip(rgb / shading[:, None], 0.0, 1.0)
    colors = mesh.colors.copy()
    colors[:, :3] = np.round(albedo_rgb * 255.0).astype(np.uint8)
    out = mesh.copy()
    out.colors = colors
    return out, light_dir, float(ambient)
