"""Incremental structure-from-motion over 2D feature tracks."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .ba import BaConfig, bundle_adjust
from .geometry import (
    RansacConfig,
    decompose_essential,
    estimate_essential,
    solve_pnp,
    triangulate,
)
from .model import (
    CameraPose,
    CheiralityAmbiguous,
    DegenerateConfiguration,
    DegenerateGeometry,
    InsufficientBaseline,
    NegativeDepth,
    NoValidSeedPair,
    PointAtInfinity,
    Reconstruction,
    ReconstructionCollapsed,
    SfmError,
    TooFewCorrespondences,
    TooFewPoints,
)


@dataclass(frozen=True)
class SfmConfig:
    seed: int = 0
    ransac: RansacConfig = field(default_factory=RansacConfig)
    min_shared_tracks: int = 8
    min_median_angle_deg: float = 2.0
    max_seed_pairs: int = 50
    min_pnp_points: int = 6
    max_reprojection_px: float = 4.0
    ba: BaConfig = field(default_factory=BaConfig)


def _observation_maps(tracks):
    by_image: dict = {}
    by_track: dict = {}
    for track in tracks:
        for image_id, u, v in track.observations:
            by_image.setdefault(image_id, {})[track.track_id] = (float(u), float(v))
        by_track[track.track_id] = {
            image_id: (float(u), float(v)) for image_id, u, v in track.observations
        }
    return by_image, by_track


def _triangulation_angle(p: np.ndarray, c1: np.ndarray, c2: np.ndarray) -> float:
    r1 = c1 - p
    r2 = c2 - p
    n1 = np.linalg.norm(r1)
    n2 = np.linalg.norm(r2)
    if n1 <= 0 or n2 <= 0:
        return 0.0
    cosang = np.clip(r1 @ r2 / (n1 * n2), -1.0, 1.0)
    return float(np.degrees(np.arccos(cosang)))


def incremental_sfm(tracks, intrinsics: dict, cfg: SfmConfig = SfmConfig()
                    ) -> Reconstruction:
    """Seed from the best two-view pair, then register, triangulate, and
    bundle-adjust until no image can be added.

    The seed pair maximizes (inlier count x median triangulation angle);
    pairs with a median angle under the configured floor are rejected.
    Every input image ends up either registered or listed in
    `unregistered` with a reason.
    """
    by_image, by_track = _observation_maps(tracks)
    image_ids = sorted(set(by_image) | set(intrinsics))
    if len(image_ids) < 2:
        raise NoValidSeedPair("need at least 2 images")
    for image_id in by_image:
        if image_id not in intrinsics:
            raise SfmError(f"missing intrinsics for image {image_id}")

    # shared-track counts per pair
    pair_tracks: dict = {}
    for tid, obs in by_track.items():
        for a, b in itertools.combinations(sorted(obs), 2):
            pair_tracks.setdefault((a, b), []).append(tid)
    candidates = [
        (len(tids), pair) for pair, tids in pair_tracks.items()
        if len(tids) >= cfg.min_shared_tracks
    ]
    if not candidates:
        raise NoValidSeedPair("no image pair shares enough tracks")
    candidates.sort(key=lambda e: (-e[0], e[1]))

    best = None  # (score, pair, pose_b, inlier track ids)
    for _, pair in candidates[: cfg.max_seed_pairs]:
        a, b = pair
        tids = sorted(pair_tracks[pair])
        xa = intrinsics[a].normalize(np.array([by_track[t][a] for t in tids]))
        xb = intrinsics[b].normalize(np.array([by_track[t][b] for t in tids]))
        corrs = np.column_stack([xa, xb])
        try:
            e, mask = estimate_essential(corrs, cfg.ransac)
            pose_b = decompose_essential(e, corrs[mask])
        except (TooFewCorrespondences, DegenerateConfiguration, CheiralityAmbiguous):
            continue
        pose_a = CameraPose.from_matrix(np.eye(3), np.zeros(3))
        angles = []
        inlier_tids = [t for t, keep in zip(tids, mask) if keep]
        for t in inlier_tids:
            try:
                p = triangulate(by_track[t][a], by_track[t][b], pose_a, pose_b,
                                intrinsics[a], intrinsics[b])
            except (InsufficientBaseline, PointAtInfinity, NegativeDepth):
                continue
            angles.append(_triangulation_angle(p, pose_a.center, pose_b.center))
        if not angles:
            continue
        median_angle = float(np.median(angles))
        if median_angle < cfg.min_median_angle_deg:
            continue
        score = int(mask.sum()) * median_angle
        if best is None or score > best[0]:
            best = (score, pair, pose_b, inlier_tids)
    if best is None:
        raise NoValidSeedPair("no pair passed the inlier/angle gates")

    _, (img_a, img_b), pose_b, inlier_tids = best
    recon = Reconstruction(intrinsics=dict(intrinsics))
    recon.poses[img_a] = CameraPose.from_matrix(np.eye(3), np.zeros(3))
    recon.poses[img_b] = pose_b

    _grow_points(recon, by_track, cfg, only_tracks=inlier_tids)
    if len(recon.points) < cfg.min_shared_tracks:
        raise NoValidSeedPair("seed pair produced too few triangulated points")
    recon, _ = bundle_adjust(recon, cfg.ba)

    while True:
        remaining = [i for i in image_ids if i not in recon.poses]
        if not remaining:
            break
        # next image: most observations of existing points
        scored = []
        for img in remaining:
            seen = [t for t in by_image.get(img, {}) if t in recon.points]
            scored.append((-len(seen), img, seen))
        scored.sort()
        progressed = False
        for neg_count, img, seen in scored:
            if -neg_count < cfg.min_pnp_points:
                recon.unregistered.setdefault(
                    img, f"only {-neg_count} observations of reconstructed points"
                )
                continue
            pts = np.array([recon.points[t] for t in sorted(seen)])
            pix = np.array([by_image[img][t] for t in sorted(seen)])
            try:
                pose = solve_pnp(pts, pix, intrinsics[img])
            except (TooFewPoints, DegenerateGeometry) as err:
                recon.unregistered.setdefault(img, f"registration failed: {err}")
                continue
            recon.poses[img] = pose
            recon.unregistered.pop(img, None)
            _attach_observations(recon, img, by_image, cfg)
            _grow_points(recon, by_track, cfg)
            recon, _ = bundle_adjust(recon, cfg.ba)
            progressed = True
            break
        if not progressed:
            break

    if len(recon.poses) < 2:
        raise ReconstructionCollapsed("all candidate registrations failed")
    for img in image_ids:
        if img not in recon.poses:
            recon.unregistered.setdefault(img, "no registrable observations")
    return recon


def _attach_observations(recon: Reconstruction, img, by_image, cfg: SfmConfig) -> None:
    """Add this image's observations of existing points (cheirality and
    reprojection gated)."""
    have = {(i, t) for i, t, _, _ in recon.observations}
    for tid, (u, v) in sorted(by_image.get(img, {}).items()):
        if tid not in recon.points or (img, tid) in have:
            continue
        px, depth = recon.project(img, recon.points[tid])
        if depth <= 0:
            continue
        if np.hypot(px[0] - u, px[1] - v) > cfg.max_reprojection_px:
            continue
        recon.observations.append((img, tid, u, v))


def _grow_points(recon: Reconstruction, by_track, cfg: SfmConfig,
                 only_tracks=None) -> None:
    """Triangulate tracks with >= 2 registered observations and keep them if
    every registered view agrees (positive depth, bounded reprojection)."""
    tids = sorted(only_tracks) if only_tracks is not None else sorted(by_track)
    for tid in tids:
        if tid in recon.points:
            continue
        obs = by_track[tid]
        reg = sorted(i for i in obs if i in recon.poses)
        if len(reg) < 2:
            continue
        best_point = None
        best_angle = -1.0
        for a, b in itertools.combinations(reg, 2):
            try:
                p = triangulate(obs[a], obs[b], recon.poses[a], recon.poses[b],
                                recon.intrinsics[a], recon.intrinsics[b])
            except (InsufficientBaseline, PointAtInfinity, NegativeDepth):
                continue
            angle = _triangulation_angle(p, recon.poses[a].center, recon.poses[b].center)
            if angle > best_angle:
                best_angle = angle
                best_point = p
        if best_point is None:
            continue
        keep_obs = []
        for img in reg:
            u, v = obs[img]
            cam = recon.poses[img].world_to_camera(best_point)
            if cam[2] <= 0:
                continue
            xy = cam[:2] / cam[2]
            px = recon.intrinsics[img].denormalize(xy)
            if np.hypot(px[0] - u, px[1] - v) <= cfg.max_reprojection_px:
                keep_obs.append((img, tid, u, v))
        if len(keep_obs) >= 2:
            recon.points[tid] = best_point
            recon.observations.extend(keep_obs)
