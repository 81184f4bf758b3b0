"""Core reconstruction state: intrinsics, poses, tracks, observations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import GeoshareError


class SfmError(GeoshareError):
    pass


class TooFewCorrespondences(SfmError):
    pass


class DegenerateConfiguration(SfmError):
    pass


class CheiralityAmbiguous(SfmError):
    pass


class InsufficientBaseline(SfmError):
    pass


class PointAtInfinity(SfmError):
    pass


class NegativeDepth(SfmError):
    pass


class TooFewPoints(SfmError):
    pass


class DegenerateGeometry(SfmError):
    pass


class SingularNormalEquations(SfmError):
    pass


class NoValidSeedPair(SfmError):
    pass


class ReconstructionCollapsed(SfmError):
    pass


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise SfmError("focal lengths must be positive")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise SfmError("principal point outside image")

    def normalize(self, uv: np.ndarray) -> np.ndarray:
        """Pixels -> normalized camera coordinates (z = 1 plane)."""
        uv = np.asarray(uv, dtype=np.float64)
        return np.stack(
            [(uv[..., 0] - self.cx) / self.fx, (uv[..., 1] - self.cy) / self.fy], axis=-1
        )

    def denormalize(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64)
        return np.stack(
            [xy[..., 0] * self.fx + self.cx, xy[..., 1] * self.fy + self.cy], axis=-1
        )


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    t = np.trace(m)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        q = np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array([(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s,
                      (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array([(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s,
                      (m[1, 2] + m[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array([(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s, 0.25 * s])
    q = q / np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return q


@dataclass
class CameraPose:
    """World-to-camera rotation (unit quaternion, wxyz) and camera center."""

    rotation: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(4)
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)
        n = np.linalg.norm(self.rotation)
        if abs(n - 1.0) > 1e-9:
            raise SfmError(f"quaternion norm {n} != 1")

    @classmethod
    def from_matrix(cls, r: np.ndarray, center: np.ndarray) -> "CameraPose":
        return cls(rotation=matrix_to_quat(r), center=center)

    @property
    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def world_to_camera(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        return (pts - self.center) @ self.matrix.T

    def copy(self) -> "CameraPose":
        return CameraPose(rotation=self.rotation.copy(), center=self.center.copy())


@dataclass(frozen=True)
class FeatureTrack:
    track_id: str
    observations: tuple  # of (image_id, u, v)

    def __post_init__(self):
        seen = set()
        for image_id, _, _ in self.observations:
            if image_id in seen:
                raise SfmError(f"track {self.track_id}: duplicate image {image_id}")
            seen.add(image_id)


@dataclass
class Reconstruction:
    """Registered poses, sparse points, and the observation graph."""

    intrinsics: dict
    poses: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)
    observations: list = field(default_factory=list)  # (image_id, track_id, u, v)
    unregistered: dict = field(default_factory=dict)  # image_id -> reason

    def image_ids(self) -> list:
        return sorted(self.poses)

    def project(self, image_id, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project world points; returns (pixels, depths)."""
        cam = self.poses[image_id].world_to_camera(pts)
        depths = cam[..., 2]
        xy = cam[..., :2] / depths[..., None]
        return self.intrinsics[image_id].denormalize(xy), depths

    def reprojection_errors(self) -> np.ndarray:
        """Per-observation pixel distance, observation order."""
        errs = np.empty(len(self.observations))
        for i, (img, tid, u, v) in enumerate(self.observations):
            px, _ = self.project(img, self.points[tid])
            errs[i] = float(np.hypot(px[0] - u, px[1] - v))
        return errs

    def mean_reprojection(self) -> float:
        errs = self.reprojection_errors()
        return float(errs.mean()) if len(errs) else 0.0

    def rms_reprojection(self) -> float:
        errs = self.reprojection_errors()
        return float(np.sqrt((errs ** 2).mean())) if len(errs) else 0.0

    def validate(self) -> None:
        obs_per_point: dict = {}
        for img, tid, _, _ in self.observations:
            if img not in self.poses:
                raise SfmError(f"observation references unregistered image {img}")
            if tid not in self.points:
                raise SfmError(f"observation references unknown point {tid}")
            obs_per_point[tid] = obs_per_point.get(tid, 0) + 1
            _, depth = self.project(img, self.points[tid])
            if depth <= 0:
                raise SfmError(f"point {tid} behind camera {img}")
        for tid in self.points:
            if obs_per_point.get(tid, 0) < 2:
                raise SfmError(f"point {tid} has fewer than 2 observations")

    def copy(self) -> "Reconstruction":
        return Reconstruction(
            intrinsics=dict(self.intrinsics),
            poses={k: v.copy() for k, v in self.poses.items()},
            points={k: v.copy() for k, v in self.points.items()},
            observations=list(self.observations),
            unregistered=dict(self.unregistered),
        )

    def apply_similarity(self, scale: float, rotation: np.ndarray,
                         translation: np.ndarray) -> "Reconstruction":
        """Map every point/center x -> scale * R x + t (gauge transform)."""
        out = self.copy()
        r = np.asarray(rotation, dtype=np.float64)
        t = np.asarray(translation, dtype=np.float64)
        for tid, p in out.points.items():
            out.points[tid] = scale * (r @ p) + t
        for img, pose in out.poses.items():
            new_r = pose.matrix @ r.T
            out.poses[img] = CameraPose.from_matrix(new_r, scale * (r @ pose.center) + t)
        return out
