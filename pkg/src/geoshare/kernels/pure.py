"""Pure-Python/NumPy implementations of the hot geometry kernels.

These are the fallback twins of the compiled extension in `_native.pyx`.
Both backends must produce bit-identical results: the collapse loop below is
written with plain C-double arithmetic (no vectorized reassociation) in the
exact operation order the native version uses.
"""
from __future__ import annotations

import heapq

import numpy as np

NAME = "pure"

# Relative determinant cutoff below which the quadric system is treated as
# singular and placement falls back to endpoint/midpoint candidates.
_DET_RTOL = 1e-10
_TINY = 1e-300
# Dimensionless length^4 term mixed into the heap key only; spreads collapses
# evenly through regions where quadric costs are nearly tied. Small enough
# that any genuine feature (crease, corner) still dominates the ordering.
_EDGE_PENALTY = 1e-3
# Flip-rejected edges are retried with an inflated key instead of dropped,
# so a pocket of rejections cannot starve a region and force over-collapse
# elsewhere. The cap bounds the retries per edge.
_REJECT_INFLATION = 4.0
_REJECT_CAP = 10


def point_mesh_closest(points, tri_a, tri_b, tri_c):
    """Closest surface point on any triangle for each query point.

    points: (P, 3); tri_a/b/c: (T, 3) triangle corner positions.
    Returns ((P,) float64 distances, (P, 3) closest points); exact
    point-to-triangle, brute force over all triangles.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    a = np.ascontiguousarray(tri_a, dtype=np.float64)
    b = np.ascontiguousarray(tri_b, dtype=np.float64)
    c = np.ascontiguousarray(tri_c, dtype=np.float64)
    dist = np.empty(len(pts), dtype=np.float64)
    closest = np.empty((len(pts), 3), dtype=np.float64)

    ab = b - a
    bc = c - b
    ca = a - c
    v0 = ab
    v1 = c - a
    d00 = (v0 * v0).sum(axis=1)
    d01 = (v0 * v1).sum(axis=1)
    d11 = (v1 * v1).sum(axis=1)
    bary_den = d00 * d11 - d01 * d01
    n = np.cross(v0, v1)
    nn = (n * n).sum(axis=1)

    len_ab = np.maximum((ab * ab).sum(axis=1), _TINY)
    len_bc = np.maximum((bc * bc).sum(axis=1), _TINY)
    len_ca = np.maximum((ca * ca).sum(axis=1), _TINY)

    for i in range(len(pts)):
        if len(a) == 0:
            dist[i] = np.inf
            closest[i] = pts[i]
            continue
        p = pts[i]
        pa = p - a
        pb = p - b
        pc = p - c

        t = np.clip((pa * ab).sum(axis=1) / len_ab, 0.0, 1.0)
        q = a + t[:, None] * ab
        d2 = ((p - q) ** 2).sum(axis=1)
        best_q = q

        t = np.clip((pb * bc).sum(axis=1) / len_bc, 0.0, 1.0)
        q = b + t[:, None] * bc
        d2_edge = ((p - q) ** 2).sum(axis=1)
        better = d2_edge < d2
        d2 = np.where(better, d2_edge, d2)
        best_q = np.where(better[:, None], q, best_q)

        t = np.clip((pc * ca).sum(axis=1) / len_ca, 0.0, 1.0)
        q = c + t[:, None] * ca
        d2_edge = ((p - q) ** 2).sum(axis=1)
        better = d2_edge < d2
        d2 = np.where(better, d2_edge, d2)
        best_q = np.where(better[:, None], q, best_q)

        d20 = (pa * v0).sum(axis=1)
        d21 = (pa * v1).sum(axis=1)
        den = np.maximum(bary_den, _TINY)
        v = (d11 * d20 - d01 * d21) / den
        w = (d00 * d21 - d01 * d20) / den
        inside = (bary_den > 0.0) & (v >= 0.0) & (w >= 0.0) & (v + w <= 1.0) & (nn > 0.0)
        plane = (pa * n).sum(axis=1)
        face_d2 = plane * plane / np.maximum(nn, _TINY)
        q = p - (plane / np.maximum(nn, _TINY))[:, None] * n
        better = inside & (face_d2 < d2)
        d2 = np.where(better, face_d2, d2)
        best_q = np.where(better[:, None], q, best_q)

        j = int(np.argmin(d2))
        dist[i] = np.sqrt(d2[j])
        closest[i] = best_q[j]
    return dist, closest


def point_mesh_min_dist(points, tri_a, tri_b, tri_c):
    """Distance from each query point to the closest point of any triangle."""
    return point_mesh_closest(points, tri_a, tri_b, tri_c)[0]


def _quadric_cost(q, x, y, z):
    # q is the upper triangle (q00,q01,q02,q03,q11,q12,q13,q22,q23,q33)
    return (
        q[0] * x * x
        + 2.0 * q[1] * x * y
        + 2.0 * q[2] * x * z
        + 2.0 * q[3] * x
        + q[4] * y * y
        + 2.0 * q[5] * y * z
        + 2.0 * q[6] * y
        + q[7] * z * z
        + 2.0 * q[8] * z
        + q[9]
    )


def _add_plane_quadric(q, nx, ny, nz, d, w):
    q[0] += w * nx * nx
    q[1] += w * nx * ny
    q[2] += w * nx * nz
    q[3] += w * nx * d
    q[4] += w * ny * ny
    q[5] += w * ny * nz
    q[6] += w * ny * d
    q[7] += w * nz * nz
    q[8] += w * nz * d
    q[9] += w * d * d


def _solve_3x3(q, r0, r1, r2, det):
    """Cramer solve of the symmetric quadric 3x3 block against (r0, r1, r2)."""
    q00, q01, q02, q11, q12, q22 = q[0], q[1], q[2], q[4], q[5], q[7]
    det_x = (
        r0 * (q11 * q22 - q12 * q12)
        - q01 * (r1 * q22 - q12 * r2)
        + q02 * (r1 * q12 - q11 * r2)
    )
    det_y = (
        q00 * (r1 * q22 - q12 * r2)
        - r0 * (q01 * q22 - q12 * q02)
        + q02 * (q01 * r2 - r1 * q02)
    )
    det_z = (
        q00 * (q11 * r2 - r1 * q12)
        - q01 * (q01 * r2 - r1 * q02)
        + r0 * (q01 * q12 - q11 * q02)
    )
    return det_x / det, det_y / det, det_z / det


def _solve_placement(q, ax, ay, az, bx, by, bz, gx, gy, gz, k, guard2):
    """Collapse target minimizing the summed quadric subject to local volume
    preservation (g . v = k over the collapse neighborhood). Falls back to the
    unconstrained optimum when the constraint is degenerate or throws the
    point further than sqrt(guard2) from the midpoint, and to
    endpoint/midpoint candidates when the quadric system itself is singular.
    Returns (x, y, z, cost)."""
    q00, q01, q02, q11, q12, q22 = q[0], q[1], q[2], q[4], q[5], q[7]
    det = (
        q00 * (q11 * q22 - q12 * q12)
        - q01 * (q01 * q22 - q12 * q02)
        + q02 * (q01 * q12 - q11 * q02)
    )
    scale = max(abs(q00), abs(q01), abs(q02), abs(q11), abs(q12), abs(q22))
    if abs(det) > _DET_RTOL * scale * scale * scale and scale > 0.0:
        x0, y0, z0 = _solve_3x3(q, -q[3], -q[6], -q[8], det)
        x, y, z = x0, y0, z0
        hx, hy, hz = _solve_3x3(q, gx, gy, gz, det)
        denom = gx * hx + gy * hy + gz * hz
        if abs(denom) > _TINY:
            lam = (gx * x0 + gy * y0 + gz * z0 - k) / denom
            cx = x0 - lam * hx
            cy = y0 - lam * hy
            cz = z0 - lam * hz
            mx = 0.5 * (ax + bx)
            my = 0.5 * (ay + by)
            mz = 0.5 * (az + bz)
            d2 = (cx - mx) ** 2 + (cy - my) ** 2 + (cz - mz) ** 2
            if d2 <= guard2:
                x, y, z = cx, cy, cz
        return x, y, z, _quadric_cost(q, x, y, z)
    best = None
    for x, y, z in (
        (ax, ay, az),
        (bx, by, bz),
        (0.5 * (ax + bx), 0.5 * (ay + by), 0.5 * (az + bz)),
    ):
        cost = _quadric_cost(q, x, y, z)
        if best is None or cost < best[3]:
            best = (x, y, z, cost)
    return best


def qem_simplify(positions, triangles, target_tris):
    """Greedy quadric-error edge collapse down to at most target_tris triangles.

    Endpoints of non-manifold edges (shared by >2 triangles) are locked in
    place and never removed. Boundary edges contribute perpendicular
    constraint quadrics. Collapses that would flip a surviving incident
    triangle's normal (dot <= 0) are rejected. Heap order is
    (cost, min index, max index), so the result is deterministic.

    Returns (new_positions, new_triangles, kept_src, removed_src) where
    kept_src maps output vertices to input vertex indices.
    """
    pos_arr = np.ascontiguousarray(positions, dtype=np.float64)
    tris_arr = np.ascontiguousarray(triangles, dtype=np.int64)
    n = len(pos_arr)
    m = len(tris_arr)

    pos = [[float(pos_arr[i, 0]), float(pos_arr[i, 1]), float(pos_arr[i, 2])] for i in range(n)]
    tris = [[int(tris_arr[t, 0]), int(tris_arr[t, 1]), int(tris_arr[t, 2])] for t in range(m)]

    vert_tris = [set() for _ in range(n)]
    for t in range(m):
        for v in tris[t]:
            vert_tris[v].add(t)

    edge_tris: dict[tuple[int, int], list[int]] = {}
    for t in range(m):
        a, b, c = tris[t]
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edge_tris.setdefault(key, []).append(t)

    locked = [False] * n
    for (u, v), ts in edge_tris.items():
        if len(ts) > 2:
            locked[u] = True
            locked[v] = True

    quad = [[0.0] * 10 for _ in range(n)]
    for t in range(m):
        a, b, c = tris[t]
        e1x = pos[b][0] - pos[a][0]
        e1y = pos[b][1] - pos[a][1]
        e1z = pos[b][2] - pos[a][2]
        e2x = pos[c][0] - pos[a][0]
        e2y = pos[c][1] - pos[a][1]
        e2z = pos[c][2] - pos[a][2]
        cx = e1y * e2z - e1z * e2y
        cy = e1z * e2x - e1x * e2z
        cz = e1x * e2y - e1y * e2x
        norm2 = cx * cx + cy * cy + cz * cz
        if norm2 <= 0.0:
            continue
        norm = norm2 ** 0.5
        area = 0.5 * norm
        nx = cx / norm
        ny = cy / norm
        nz = cz / norm
        d = -(nx * pos[a][0] + ny * pos[a][1] + nz * pos[a][2])
        for v in (a, b, c):
            _add_plane_quadric(quad[v], nx, ny, nz, d, area)

    # Border preservation: a plane through each boundary edge, perpendicular
    # to its single face, weighted by the squared edge length.
    for (u, v), ts in edge_tris.items():
        if len(ts) != 1:
            continue
        a, b, c = tris[ts[0]]
        e1x = pos[b][0] - pos[a][0]
        e1y = pos[b][1] - pos[a][1]
        e1z = pos[b][2] - pos[a][2]
        e2x = pos[c][0] - pos[a][0]
        e2y = pos[c][1] - pos[a][1]
        e2z = pos[c][2] - pos[a][2]
        fx = e1y * e2z - e1z * e2y
        fy = e1z * e2x - e1x * e2z
        fz = e1x * e2y - e1y * e2x
        ex = pos[v][0] - pos[u][0]
        ey = pos[v][1] - pos[u][1]
        ez = pos[v][2] - pos[u][2]
        cx = ey * fz - ez * fy
        cy = ez * fx - ex * fz
        cz = ex * fy - ey * fx
        norm2 = cx * cx + cy * cy + cz * cz
        if norm2 <= 0.0:
            continue
        norm = norm2 ** 0.5
        nx = cx / norm
        ny = cy / norm
        nz = cz / norm
        d = -(nx * pos[u][0] + ny * pos[u][1] + nz * pos[u][2])
        w = ex * ex + ey * ey + ez * ez
        _add_plane_quadric(quad[u], nx, ny, nz, d, w)
        _add_plane_quadric(quad[v], nx, ny, nz, d, w)

    rejects: dict[tuple[int, int], int] = {}

    def inflate(key, a, b):
        r = rejects.get((a, b), 0)
        return key * _REJECT_INFLATION ** r if r else key

    def edge_candidate(a, b):
        """(key, x, y, z, survivor) for collapsing edge (a, b), or None."""
        la = locked[a]
        lb = locked[b]
        if la and lb:
            return None
        qsum = [quad[a][i] + quad[b][i] for i in range(10)]
        if la:
            x, y, z = pos[a]
            return inflate(_quadric_cost(qsum, x, y, z), a, b), x, y, z, a
        if lb:
            x, y, z = pos[b]
            return inflate(_quadric_cost(qsum, x, y, z), a, b), x, y, z, b
        # Volume-preservation constraint over the current collapse
        # neighborhood: g . v = k keeps the signed volume swept by the
        # retriangulated fan at zero, which balances the placement instead of
        # letting coarse faces sink below curved regions.
        gx = gy = gz = 0.0
        k = 0.0
        for t in sorted(vert_tris[a] | vert_tris[b]):
            va, vb, vc = tris[t]
            p0 = pos[va]
            p1 = pos[vb]
            p2 = pos[vc]
            c12x = p1[1] * p2[2] - p1[2] * p2[1]
            c12y = p1[2] * p2[0] - p1[0] * p2[2]
            c12z = p1[0] * p2[1] - p1[1] * p2[0]
            k += p0[0] * c12x + p0[1] * c12y + p0[2] * c12z
            in_a = va == a or vb == a or vc == a
            in_b = va == b or vb == b or vc == b
            if in_a and in_b:
                continue
            u = a if in_a else b
            if va == u:
                gx += c12x
                gy += c12y
                gz += c12z
            elif vb == u:
                gx += p2[1] * p0[2] - p2[2] * p0[1]
                gy += p2[2] * p0[0] - p2[0] * p0[2]
                gz += p2[0] * p0[1] - p2[1] * p0[0]
            else:
                gx += p0[1] * p1[2] - p0[2] * p1[1]
                gy += p0[2] * p1[0] - p0[0] * p1[2]
                gz += p0[0] * p1[1] - p0[1] * p1[0]
        ex = pos[b][0] - pos[a][0]
        ey = pos[b][1] - pos[a][1]
        ez = pos[b][2] - pos[a][2]
        elen2 = ex * ex + ey * ey + ez * ez
        x, y, z, cost = _solve_placement(
            qsum, pos[a][0], pos[a][1], pos[a][2], pos[b][0], pos[b][1], pos[b][2],
            gx, gy, gz, k, 16.0 * elen2,
        )
        return inflate(cost + _EDGE_PENALTY * elen2 * elen2, a, b), x, y, z, min(a, b)

    vert_alive = [True] * n
    tri_alive = [True] * m
    tri_count = m

    def check_flip(a, b, x, y, z, affected):
        """True if moving a/b to (x,y,z) flips any triangle in affected."""
        for t in affected:
            va, vb, vc = tris[t]
            p0 = pos[va]
            p1 = pos[vb]
            p2 = pos[vc]
            o_x = (p1[1] - p0[1]) * (p2[2] - p0[2]) - (p1[2] - p0[2]) * (p2[1] - p0[1])
            o_y = (p1[2] - p0[2]) * (p2[0] - p0[0]) - (p1[0] - p0[0]) * (p2[2] - p0[2])
            o_z = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
            new_p = (x, y, z)
            q0 = new_p if va == a or va == b else p0
            q1 = new_p if vb == a or vb == b else p1
            q2 = new_p if vc == a or vc == b else p2
            n_x = (q1[1] - q0[1]) * (q2[2] - q0[2]) - (q1[2] - q0[2]) * (q2[1] - q0[1])
            n_y = (q1[2] - q0[2]) * (q2[0] - q0[0]) - (q1[0] - q0[0]) * (q2[2] - q0[2])
            n_z = (q1[0] - q0[0]) * (q2[1] - q0[1]) - (q1[1] - q0[1]) * (q2[0] - q0[0])
            if o_x * n_x + o_y * n_y + o_z * n_z <= 0.0:
                return True
        return False

    heap = []
    for a, b in sorted(edge_tris.keys()):
        cand = edge_candidate(a, b)
        if cand is not None:
            heapq.heappush(heap, (cand[0], a, b))

    while tri_count > target_tris and heap:
        cost, a, b = heapq.heappop(heap)
        if not (vert_alive[a] and vert_alive[b]):
            continue
        shared = vert_tris[a] & vert_tris[b]
        if not shared:
            continue
        cand = edge_candidate(a, b)
        if cand is None:
            continue
        if cand[0] != cost:
            heapq.heappush(heap, (cand[0], a, b))
            continue
        _, x, y, z, survivor = cand
        removed = b if survivor == a else a

        if check_flip(a, b, x, y, z, sorted((vert_tris[a] | vert_tris[b]) - shared)):
            r = rejects.get((a, b), 0) + 1
            if r <= _REJECT_CAP:
                rejects[(a, b)] = r
                cand = edge_candidate(a, b)
                if cand is not None:
                    heapq.heappush(heap, (cand[0], a, b))
            continue

        pos[survivor][0] = x
        pos[survivor][1] = y
        pos[survivor][2] = z
        qs = quad[survivor]
        qo = quad[removed]
        for i in range(10):
            qs[i] += qo[i]
        vert_alive[removed] = False

        for t in sorted(shared):
            tri_alive[t] = False
            tri_count -= 1
            for v in tris[t]:
                vert_tris[v].discard(t)
        for t in list(vert_tris[removed]):
            tri = tris[t]
            for i in range(3):
                if tri[i] == removed:
                    tri[i] = survivor
            vert_tris[survivor].add(t)
        vert_tris[removed] = set()

        neighbors = set()
        for t in vert_tris[survivor]:
            for v in tris[t]:
                if v != survivor:
                    neighbors.add(v)
        for nb in sorted(neighbors):
            key = (survivor, nb) if survivor < nb else (nb, survivor)
            cand = edge_candidate(key[0], key[1])
            if cand is not None:
                heapq.heappush(heap, (cand[0], key[0], key[1]))

    kept_src = np.array([i for i in range(n) if vert_alive[i]], dtype=np.int64)
    removed_src = np.array([i for i in range(n) if not vert_alive[i]], dtype=np.int64)
    remap = np.full(n, -1, dtype=np.int64)
    remap[kept_src] = np.arange(len(kept_src), dtype=np.int64)
    new_pos = np.array([pos[i] for i in kept_src], dtype=np.float64).reshape(len(kept_src), 3)
    out_tris = [tris[t] for t in range(m) if tri_alive[t]]
    new_tris = remap[np.array(out_tris, dtype=np.int64).reshape(len(out_tris), 3)]
    return new_pos, new_tris, kept_src, removed_src
