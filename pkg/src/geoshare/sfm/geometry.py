"""Two-view geometry: essential matrix, pose recovery, triangulation, PnP."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    CameraIntrinsics,
    CameraPose,
    CheiralityAmbiguous,
    DegenerateConfiguration,
    DegenerateGeometry,
    InsufficientBaseline,
    NegativeDepth,
    PointAtInfinity,
    TooFewCorrespondences,
    TooFewPoints,
)


@dataclass(frozen=True)
class RansacConfig:
    threshold: float = 1e-3  # Sampson distance in normalized coordinates
    max_iters: int = 2048
    seed: int = 0


def _hartley_normalize(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = pts.mean(axis=0)
    centered = pts - mean
    rms = np.sqrt((centered ** 2).sum(axis=1).mean())
    s = np.sqrt(2.0) / rms if rms > 0 else 1.0
    t = np.array([[s, 0, -s * mean[0]], [0, s, -s * mean[1]], [0, 0, 1.0]])
    return centered * s, t


def _eight_point(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Normalized 8-point estimate; x1, x2 are (N, 2) normalized coords."""
    n1, t1 = _hartley_normalize(x1)
    n2, t2 = _hartley_normalize(x2)
    a = np.column_stack([
        n2[:, 0] * n1[:, 0], n2[:, 0] * n1[:, 1], n2[:, 0],
        n2[:, 1] * n1[:, 0], n2[:, 1] * n1[:, 1], n2[:, 1],
        n1[:, 0], n1[:, 1], np.ones(len(n1)),
    ])
    _, _, vt = np.linalg.svd(a)
    f = vt[-1].reshape(3, 3)
    f = t2.T @ f @ t1
    # rank-2 projection with the two nonzero singular values equalized
    u, s, vt = np.linalg.svd(f)
    sigma = 0.5 * (s[0] + s[1])
    e = u @ np.diag([sigma, sigma, 0.0]) @ vt
    return e / np.linalg.norm(e)


def sampson_distance(e: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    h1 = np.column_stack([x1, np.ones(len(x1))])
    h2 = np.column_stack([x2, np.ones(len(x2))])
    ex1 = h1 @ e.T
    etx2 = h2 @ e
    num = (h2 * ex1).sum(axis=1)
    den = ex1[:, 0] ** 2 + ex1[:, 1] ** 2 + etx2[:, 0] ** 2 + etx2[:, 1] ** 2
    den = np.maximum(den, 1e-300)
    return np.abs(num) / np.sqrt(den)


def estimate_essential(corrs: np.ndarray, cfg: RansacConfig = RansacConfig()
                       ) -> tuple[np.ndarray, np.ndarray]:
    """RANSAC + normalized 8-point on calibrated correspondences.

    corrs: (N, 4) array of (x1, y1, x2, y2) in normalized camera coordinates.
    Returns (E, inlier mask). E is estimated once more on all inliers.
    """
    corrs = np.asarray(corrs, dtype=np.float64).reshape(-1, 4)
    n = len(corrs)
    if n < 8:
        raise TooFewCorrespondences(f"need >= 8 correspondences, got {n}")
    x1 = corrs[:, :2]
    x2 = corrs[:, 2:]

    rng = np.random.default_rng(cfg.seed)
    best_mask = None
    best_count = -1
    for _ in range(cfg.max_iters):
        pick = rng.choice(n, size=8, replace=False)
        try:
            e = _eight_point(x1[pick], x2[pick])
        except np.linalg.LinAlgError:
            continue
        mask = sampson_distance(e, x1, x2) <= cfg.threshold
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
    if best_mask is None or best_count < 8:
        raise DegenerateConfiguration(f"only {max(best_count, 0)} inliers after RANSAC")
    e = _eight_point(x1[best_mask], x2[best_mask])
    mask = sampson_distance(e, x1, x2) <= cfg.threshold
    if mask.sum() < 8:
        raise DegenerateConfiguration("inlier refit collapsed below 8 correspondences")
    return e, mask


def _pose_pair_for(r: np.ndarray, t: np.ndarray) -> tuple[CameraPose, CameraPose]:
    """First camera at origin; second from camera-frame transform x2 = R x1 + t."""
    first = CameraPose.from_matrix(np.eye(3), np.zeros(3))
    second = CameraPose.from_matrix(r, -r.T @ t)
    return first, second


def decompose_essential(e: np.ndarray, corrs: np.ndarray) -> CameraPose:
    """Pick the (R, t) with the most points in front of both cameras.

    Returns the second camera's pose (first camera is identity at origin);
    the translation is scaled to a unit baseline.
    """
    corrs = np.asarray(corrs, dtype=np.float64).reshape(-1, 4)
    if len(corrs) < 1:
        raise TooFewCorrespondences("need >= 1 correspondence for cheirality")
    u, _, vt = np.linalg.svd(np.asarray(e, dtype=np.float64))
    if np.linalg.det(u) < 0:
        u = -u
    if np.linalg.det(vt) < 0:
        vt = -vt
    w = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    t = u[:, 2]
    t = t / np.linalg.norm(t)
    candidates = [(u @ w @ vt, t), (u @ w @ vt, -t), (u @ w.T @ vt, t), (u @ w.T @ vt, -t)]

    ident = CameraIntrinsics(1.0, 1.0, 0.0, 0.0, 0, 0)
    best = None
    best_count = -1
    for r, tc in candidates:
        pose_a, pose_b = _pose_pair_for(r, tc)
        count = 0
        for x1, y1, x2, y2 in corrs:
            try:
                p = triangulate((x1, y1), (x2, y2), pose_a, pose_b, ident, ident)
            except (PointAtInfinity, NegativeDepth, InsufficientBaseline):
                continue
            za = pose_a.world_to_camera(p)[2]
            zb = pose_b.world_to_camera(p)[2]
            if za > 0 and zb > 0:
                count += 1
        if count > best_count:
            best_count = count
            best = (r, tc)
    if best is None or 2 * best_count <= len(corrs):
        raise CheiralityAmbiguous(
            f"best candidate has {max(best_count, 0)}/{len(corrs)} points in front"
        )
    r, tc = best
    return CameraPose.from_matrix(r, -r.T @ tc)


def triangulate(obs_a, obs_b, pose_a: CameraPose, pose_b: CameraPose,
                intr_a: CameraIntrinsics, intr_b: CameraIntrinsics | None = None
                ) -> np.ndarray:
    """Linear (DLT) two-view triangulation from pixel observations."""
    if intr_b is None:
        intr_b = intr_a
    baseline = np.linalg.norm(pose_a.center - pose_b.center)
    scale = max(1.0, float(np.linalg.norm(pose_a.center)), float(np.linalg.norm(pose_b.center)))
    if baseline <= 1e-12 * scale:
        raise InsufficientBaseline(f"baseline {baseline} is too small")

    rows = []
    for obs, pose, intr in ((obs_a, pose_a, intr_a), (obs_b, pose_b, intr_b)):
        x, y = intr.normalize(np.asarray(obs, dtype=np.float64))
        r = pose.matrix
        p = np.column_stack([r, -r @ pose.center])  # 3x4, normalized camera
        rows.append(x * p[2] - p[0])
        rows.append(y * p[2] - p[1])
    a = np.stack(rows)
    _, _, vt = np.linalg.svd(a)
    xh = vt[-1]
    if abs(xh[3]) <= 1e-12 * np.linalg.norm(xh[:3]):
        raise PointAtInfinity("homogeneous scale vanished")
    p = xh[:3] / xh[3]
    for pose in (pose_a, pose_b):
        if pose.world_to_camera(p)[2] <= 0:
            raise NegativeDepth("triangulated point behind a camera")
    return p


def _refine_pose(points: np.ndarray, pixels: np.ndarray, intr: CameraIntrinsics,
                 pose: CameraPose, iters: int = 30) -> CameraPose:
    """Small dense LM on reprojection error for a single camera."""
    r = pose.matrix
    c = pose.center.copy()
    lam = 1e-3

    def residual(rm, cc):
        cam = (points - cc) @ rm.T
        z = cam[:, 2]
        xy = cam[:, :2] / z[:, None]
        px = intr.denormalize(xy)
        return (px - pixels).ravel(), cam

    res, cam = residual(r, c)
    cost = float(res @ res)
    for _ in range(iters):
        z = cam[:, 2]
        n = len(points)
        j = np.zeros((2 * n, 6))
        for i in range(n):
            x, y, zz = cam[i]
            d_uv_cam = np.array([
                [intr.fx / zz, 0.0, -intr.fx * x / zz ** 2],
                [0.0, intr.fy / zz, -intr.fy * y / zz ** 2],
            ])
            d_cam_rot = -_skew(cam[i])
            d_cam_c = -r
            j[2 * i:2 * i + 2, :3] = d_uv_cam @ d_cam_rot
            j[2 * i:2 * i + 2, 3:] = d_uv_cam @ d_cam_c
        g = j.T @ res
        if np.abs(g).max() < 1e-14:
            break
        h = j.T @ j
        try:
            delta = np.linalg.solve(h + lam * np.diag(np.maximum(np.diag(h), 1e-12)), -g)
        except np.linalg.LinAlgError:
            break
        r_new = _exp_so3(delta[:3]) @ r
        c_new = c + delta[3:]
        res_new, cam_new = residual(r_new, c_new)
        cost_new = float(res_new @ res_new)
        if cost_new < cost:
            r, c, res, cam, cost = r_new, c_new, res_new, cam_new, cost_new
            lam = max(lam * 0.1, 1e-12)
            if cost < 1e-24:
                break
        else:
            lam *= 10.0
            if lam > 1e12:
                break
    return CameraPose.from_matrix(r, c)


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def _exp_so3(w: np.ndarray) -> np.ndarray:
    theta = np.linalg.norm(w)
    if theta < 1e-12:
        return np.eye(3) + _skew(w)
    k = _skew(w / theta)
    return np.eye(3) + np.sin(theta) * k + (1 - np.cos(theta)) * (k @ k)


def solve_pnp(points: np.ndarray, pixels: np.ndarray, intr: CameraIntrinsics) -> CameraPose:
    """DLT pose from >= 6 non-coplanar 3D<->2D matches, LM-refined."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    n = len(points)
    if n < 6:
        raise TooFewPoints(f"need >= 6 points, got {n}")
    centered = points - points.mean(axis=0)
    eigvals = np.linalg.eigvalsh(centered.T @ centered / n)
    if eigvals[0] <= 1e-10 * max(eigvals[2], 1e-300):
        raise DegenerateGeometry("points are coplanar or collinear")

    xy = intr.normalize(pixels)
    a = np.zeros((2 * n, 12))
    hom = np.column_stack([points, np.ones(n)])
    a[0::2, 0:4] = hom
    a[0::2, 8:12] = -xy[:, 0:1] * hom
    a[1::2, 4:8] = hom
    a[1::2, 8:12] = -xy[:, 1:2] * hom
    _, _, vt = np.linalg.svd(a)
    p = vt[-1].reshape(3, 4)
    # the true projection is sigma*[R|t] with sigma > 0, so det of the left
    # 3x3 block fixes the projective sign
    if np.linalg.det(p[:, :3]) < 0:
        p = -p
    u, s, vt2 = np.linalg.svd(p[:, :3])
    r = u @ vt2
    if np.linalg.det(r) < 0:
        r = u @ np.diag([1.0, 1.0, -1.0]) @ vt2
    t = p[:, 3] / s.mean()
    pose = CameraPose.from_matrix(r, -r.T @ t)
    return _refine_pose(points, pixels, intr, pose)
