"""Synthetic scenes (test oracle generator) and similarity alignment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    CameraIntrinsics,
    CameraPose,
    DegenerateGeometry,
    FeatureTrack,
    Reconstruction,
    SfmError,
)


@dataclass(frozen=True)
class SceneConfig:
    n_cameras: int = 5
    n_points: int = 100
    noise_px: float = 0.0
    outlier_rate: float = 0.0
    seed: int = 0
    ring_radius: float = 3.0
    point_radius: float = 0.8
    focal: float = 1000.0
    image_size: int = 1000


def _look_at(center: np.ndarray, target: np.ndarray) -> np.ndarray:
    """World-to-camera rotation with +z toward the target."""
    z = target - center
    z = z / np.linalg.norm(z)
    up = np.array([0.0, 0.0, 1.0])
    if abs(z @ up) > 0.99:
        up = np.array([0.0, 1.0, 0.0])
    x = np.cross(up, z)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return np.stack([x, y, z])


def synthesize_scene(cfg: SceneConfig = SceneConfig()
                     ) -> tuple[Reconstruction, list, dict]:
    """Cameras on a ring looking at the origin, points in a ball around it.

    Returns (ground-truth reconstruction, tracks, outlier map). The outlier
    map lists {(image_id, track_id): True} for observations replaced by
    uniform random pixels. Deterministic for a given seed.
    """
    if cfg.n_cameras < 2:
        raise SfmError("need >= 2 cameras")
    if cfg.n_points < 8:
        raise SfmError("need >= 8 points")
    rng = np.random.default_rng(cfg.seed)
    intr = CameraIntrinsics(
        fx=cfg.focal, fy=cfg.focal,
        cx=cfg.image_size / 2.0, cy=cfg.image_size / 2.0,
        width=cfg.image_size, height=cfg.image_size,
    )

    image_ids = [f"cam{i:03d}" for i in range(cfg.n_cameras)]
    poses = {}
    for i, img in enumerate(image_ids):
        angle = 2.0 * np.pi * i / cfg.n_cameras
        center = np.array([
            cfg.ring_radius * np.cos(angle),
            cfg.ring_radius * np.sin(angle),
            0.3 * cfg.ring_radius * np.sin(2.0 * angle),
        ])
        poses[img] = CameraPose.from_matrix(_look_at(center, np.zeros(3)), center)

    # points uniform in a ball; every point is visible in all cameras by
    # construction (ball radius small relative to the ring)
    pts = rng.normal(size=(cfg.n_points, 3))
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    pts = pts * (cfg.point_radius * rng.random(cfg.n_points) ** (1.0 / 3.0))[:, None]
    track_ids = [f"pt{i:05d}" for i in range(cfg.n_points)]

    recon = Reconstruction(
        intrinsics={img: intr for img in image_ids},
        poses=poses,
        points={tid: pts[i] for i, tid in enumerate(track_ids)},
    )

    obs_per_track: dict = {tid: [] for tid in track_ids}
    outliers: dict = {}
    for img in image_ids:
        px, depth = recon.project(img, pts)
        if (depth <= 0).any():
            raise SfmError("internal: synthetic point behind a camera")
        noisy = px + rng.normal(scale=cfg.noise_px, size=px.shape) if cfg.noise_px > 0 else px.copy()
        for i, tid in enumerate(track_ids):
            u, v = noisy[i]
            if cfg.outlier_rate > 0 and rng.random() < cfg.outlier_rate:
                u = rng.uniform(0, intr.width)
                v = rng.uniform(0, intr.height)
                outliers[(img, tid)] = True
            if 0 <= u < intr.width and 0 <= v < intr.height:
                obs_per_track[tid].append((img, float(u), float(v)))
                recon.observations.append((img, tid, float(u), float(v)))

    tracks = [
        FeatureTrack(track_id=tid, observations=tuple(obs_per_track[tid]))
        for tid in track_ids if len(obs_per_track[tid]) >= 2
    ]
    return recon, tracks, outliers


def align_similarity(estimated: np.ndarray, ground_truth: np.ndarray
                     ) -> tuple[float, np.ndarray, np.ndarray, float]:
    """Closed-form similarity (Umeyama) minimizing |gt - (s R est + t)|^2.

    Returns (scale, rotation, translation, rmse in ground-truth units).
    """
    est = np.asarray(estimated, dtype=np.float64).reshape(-1, 3)
    gt = np.asarray(ground_truth, dtype=np.float64).reshape(-1, 3)
    if len(est) != len(gt):
        raise SfmError("point sets differ in length")
    n = len(est)
    if n < 3:
        raise DegenerateGeometry(f"need >= 3 points, got {n}")
    mu_e = est.mean(axis=0)
    mu_g = gt.mean(axis=0)
    ec = est - mu_e
    gc = gt - mu_g
    cov = gc.T @ ec / n
    var_e = (ec ** 2).sum() / n
    if var_e <= 0:
        raise DegenerateGeometry("estimated points are coincident")
    # collinearity check: the two largest singular values must be meaningful
    u, d, vt = np.linalg.svd(cov)
    ec_sv = np.linalg.svd(ec, compute_uv=False)
    if ec_sv[1] <= 1e-12 * max(ec_sv[0], 1e-300):
        raise DegenerateGeometry("points are collinear")
    s_fix = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s_fix[2, 2] = -1.0
    rot = u @ s_fix @ vt
    scale = float(np.trace(np.diag(d) @ s_fix) / var_e)
    trans = mu_g - scale * rot @ mu_e
    resid = gt - (scale * (est @ rot.T) + trans)
    rmse = float(np.sqrt((resid ** 2).sum(axis=1).mean()))
    return scale, rot, trans, rmse
