"""Bundle adjustment: sparse Levenberg-Marquardt on reprojection error.

Gauge handling: the first camera (smallest image id) is held fixed, and
after every accepted step the scene is rescaled about that camera so the
distance between the first two camera centers keeps its initial value.
Reprojection error is invariant under that similarity, so the rescale never
changes the cost and the accepted-step cost sequence stays non-increasing.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import _exp_so3, _skew
from .model import CameraPose, Reconstruction, SingularNormalEquations


@dataclass(frozen=True)
class BaConfig:
    max_iters: int = 50
    gradient_tol: float = 1e-10
    cost_rel_tol: float = 1e-12
    damping_init: float = 1e-3
    damping_scale: float = 10.0


@dataclass
class BaReport:
    converged: bool
    iterations: int
    initial_cost: float
    final_cost: float
    accepted_costs: list = field(default_factory=list)


class BundleProblem:
    """Linearized view of a reconstruction for one LM iteration.

    Parameters are local deltas: 6 per free camera (rotation vector applied
    on the left, center shift) followed by 3 per point. residuals(delta)
    evaluates the perturbed model, so central differences at delta=0 can
    validate jacobian().
    """

    def __init__(self, recon: Reconstruction):
        self.recon = recon
        self.images = recon.image_ids()
        self.fixed_image = self.images[0] if self.images else None
        self.free_images = self.images[1:]
        self.track_ids = sorted(recon.points)
        self.cam_index = {img: i for i, img in enumerate(self.free_images)}
        self.point_index = {tid: i for i, tid in enumerate(self.track_ids)}
        self.n_params = 6 * len(self.free_images) + 3 * len(self.track_ids)
        self.obs = sorted(recon.observations)

    def _posed(self, delta: np.ndarray):
        poses = {}
        for img in self.images:
            pose = self.recon.poses[img]
            if img in self.cam_index:
                k = 6 * self.cam_index[img]
                r = _exp_so3(delta[k:k + 3]) @ pose.matrix
                c = pose.center + delta[k + 3:k + 6]
                poses[img] = (r, c)
            else:
                poses[img] = (pose.matrix, pose.center.copy())
        points = {}
        base = 6 * len(self.free_images)
        for tid in self.track_ids:
            k = base + 3 * self.point_index[tid]
            points[tid] = self.recon.points[tid] + delta[k:k + 3]
        return poses, points

    def residuals(self, delta: np.ndarray | None = None) -> np.ndarray:
        if delta is None:
            delta = np.zeros(self.n_params)
        poses, points = self._posed(delta)
        res = np.empty(2 * len(self.obs))
        for i, (img, tid, u, v) in enumerate(self.obs):
            r, c = poses[img]
            intr = self.recon.intrinsics[img]
            cam = r @ (points[tid] - c)
            px = intr.fx * cam[0] / cam[2] + intr.cx
            py = intr.fy * cam[1] / cam[2] + intr.cy
            res[2 * i] = px - u
            res[2 * i + 1] = py - v
        return res

    def jacobian(self) -> sp.csr_matrix:
        """Analytic Jacobian of residuals at delta = 0."""
        rows = []
        cols = []
        vals = []
        base = 6 * len(self.free_images)
        for i, (img, tid, _, _) in enumerate(self.obs):
            pose = self.recon.poses[img]
            intr = self.recon.intrinsics[img]
            r = pose.matrix
            cam = r @ (self.recon.points[tid] - pose.center)
            x, y, z = cam
            d_uv_cam = np.array([
                [intr.fx / z, 0.0, -intr.fx * x / z ** 2],
                [0.0, intr.fy / z, -intr.fy * y / z ** 2],
            ])
            pj = base + 3 * self.point_index[tid]
            d_point = d_uv_cam @ r
            for a in range(2):
                for b in range(3):
                    rows.append(2 * i + a)
                    cols.append(pj + b)
                    vals.append(d_point[a, b])
            if img in self.cam_index:
                k = 6 * self.cam_index[img]
                d_rot = d_uv_cam @ (-_skew(cam))
                d_center = d_uv_cam @ (-r)
                for a in range(2):
                    for b in range(3):
                        rows.append(2 * i + a)
                        cols.append(k + b)
                        vals.append(d_rot[a, b])
                        rows.append(2 * i + a)
                        cols.append(k + 3 + b)
                        vals.append(d_center[a, b])
        return sp.csr_matrix(
            (vals, (rows, cols)), shape=(2 * len(self.obs), self.n_params)
        )

    def apply(self, delta: np.ndarray) -> Reconstruction:
        poses, points = self._posed(delta)
        out = self.recon.copy()
        for img, (r, c) in poses.items():
            out.poses[img] = CameraPose.from_matrix(r, c)
        for tid, p in points.items():
            out.points[tid] = p
        return out


def _renormalize_scale(recon: Reconstruction, anchor: str, second: str,
                       target: float) -> None:
    """Rescale the scene about the anchor camera so |c_second - c_anchor|
    equals target. Reprojection error is invariant under this similarity."""
    c0 = recon.poses[anchor].center
    d = float(np.linalg.norm(recon.poses[second].center - c0))
    if d <= 0 or target <= 0:
        return
    s = target / d
    if s == 1.0:
        return
    for tid, p in recon.points.items():
        recon.points[tid] = c0 + s * (p - c0)
    for img in recon.image_ids():
        pose = recon.poses[img]
        recon.poses[img] = CameraPose(
            rotation=pose.rotation.copy(), center=c0 + s * (pose.center - c0)
        )


def bundle_adjust(recon: Reconstruction, cfg: BaConfig = BaConfig()
                  ) -> tuple[Reconstruction, BaReport]:
    """LM refinement of all free poses and points; returns best-so-far state
    plus a report (converged=False when the iteration budget ran out)."""
    current = recon.copy()
    images = current.image_ids()
    anchor = images[0] if images else None
    second = images[1] if len(images) > 1 else None
    baseline = (
        float(np.linalg.norm(current.poses[second].center - current.poses[anchor].center))
        if second is not None else 0.0
    )

    problem = BundleProblem(current)
    res = problem.residuals()
    cost = float(res @ res)
    report = BaReport(converged=False, iterations=0, initial_cost=cost, final_cost=cost,
                      accepted_costs=[cost])
    if problem.n_params == 0 or not len(res):
        report.converged = True
        return current, report

    lam = cfg.damping_init
    for it in range(cfg.max_iters):
        report.iterations = it + 1
        jac = problem.jacobian()
        grad = jac.T @ res
        if np.abs(grad).max() < cfg.gradient_tol:
            report.converged = True
            break
        h = (jac.T @ jac).tocsc()
        diag = h.diagonal()
        scale_floor = np.maximum(diag, 1e-12)

        accepted = False
        while True:
            damped = h + sp.diags(lam * scale_floor)
            try:
                delta = spla.spsolve(damped, -grad)
            except Exception as e:
                raise SingularNormalEquations(str(e)) from None
            if not np.all(np.isfinite(delta)):
                raise SingularNormalEquations("non-finite LM step")
            candidate = problem.apply(delta)
            if second is not None:
                _renormalize_scale(candidate, anchor, second, baseline)
            cand_problem = BundleProblem(candidate)
            cand_res = cand_problem.residuals()
            cand_cost = float(cand_res @ cand_res)
            if cand_cost < cost:
                rel_drop = (cost - cand_cost) / max(cost, 1e-300)
                current, problem, res, cost = candidate, cand_problem, cand_res, cand_cost
                report.accepted_costs.append(cost)
                lam = max(lam / cfg.damping_scale, 1e-15)
                accepted = True
                if rel_drop < cfg.cost_rel_tol:
                    report.converged = True
                break
            lam *= cfg.damping_scale
            if lam > 1e15:
                break
        if not accepted:
            report.converged = True  # no descent direction left
            break
        if report.converged:
            break

    report.final_cost = cost
    return current, report
