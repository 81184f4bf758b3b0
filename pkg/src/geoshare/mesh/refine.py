"""Post-decimation quality pass: budgeted incremental remeshing.

Greedy edge collapse hits the requested triangle count but leaves uneven
triangle sizes, and the sag of the oversized ones dominates the deviation
from the original surface. This pass reshapes the (already small) simplified
mesh under its triangle budget with the classic incremental-remeshing moves,
all validated against the original full-resolution mesh:

- split edges much longer than the budget's target edge length,
- collapse edges much shorter than it (and whatever else is needed to pay
  for the splits, so the budget is never exceeded),
- flip an interior manifold edge when the flipped diagonal strictly lowers
  the larger circumradius of its two triangles,
- slide vertices tangentially toward the area-weighted barycenter of their
  incident faces, and re-center the measured deviation band against the
  original surface along the vertex normal.

Crease edges (adjacent face normals apart by more than the feature angle),
boundaries, and non-manifold fans pin their vertices, so sharp features stay
exactly where decimation put them. If the budget cannot be restored after
splitting, the whole remesh attempt is discarded. The pass is skipped for
large inputs where the brute-force closest-point queries would dominate
runtime.
"""
from __future__ import annotations

import math

import numpy as np

from .. import kernels

_FEATURE_COS = math.cos(math.radians(30.0))
_ROUNDS = 6
_TANGENTIAL_SWEEPS = 4
_POLISH_SWEEPS = 8
_SMOOTH_STEP = 0.5
_SPLIT_FACTOR2 = (4.0 / 3.0) ** 2
_COLLAPSE_FACTOR2 = 0.8 ** 2
# skip the pass entirely when the closest-point query work gets too large
_MAX_QUERY_WORK = 2e8


class _Remesh:
    """Mutable mesh state with the local remeshing moves."""

    def __init__(self, positions, triangles):
        self.pos: list[np.ndarray] = [p.astype(np.float64) for p in positions]
        self.tris: list[list[int]] = [[int(a), int(b), int(c)] for a, b, c in triangles]
        self.alive: list[bool] = [True] * len(self.tris)
        self.parents: list[tuple[int, int]] = [(i, i) for i in range(len(self.pos))]
        self.vert_tris: list[set[int]] = [set() for _ in range(len(self.pos))]
        for t, tri in enumerate(self.tris):
            for v in tri:
                self.vert_tris[v].add(t)
        self.n_tris = len(self.tris)

    # -- queries ---------------------------------------------------------

    def edge_map(self):
        edges: dict[tuple[int, int], list[int]] = {}
        for t, tri in enumerate(self.tris):
            if not self.alive[t]:
                continue
            a, b, c = tri
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                edges.setdefault(key, []).append(t)
        return edges

    def tri_normal(self, tri):
        p0, p1, p2 = self.pos[tri[0]], self.pos[tri[1]], self.pos[tri[2]]
        return np.cross(p1 - p0, p2 - p0)

    def circumradius2(self, tri):
        p0, p1, p2 = self.pos[tri[0]], self.pos[tri[1]], self.pos[tri[2]]
        e0 = float(((p1 - p0) ** 2).sum())
        e1 = float(((p2 - p1) ** 2).sum())
        e2 = float(((p0 - p2) ** 2).sum())
        n = np.cross(p1 - p0, p2 - p0)
        four_a2 = float((n * n).sum())
        if four_a2 <= 0.0:
            return math.inf
        return e0 * e1 * e2 / (4.0 * four_a2)

    def pinned_verts(self, edges):
        pinned = [False] * len(self.pos)
        for (a, b), ts in edges.items():
            if len(ts) != 2:
                pinned[a] = True
                pinned[b] = True
                continue
            n1 = self.tri_normal(self.tris[ts[0]])
            n2 = self.tri_normal(self.tris[ts[1]])
            l1 = float(np.linalg.norm(n1))
            l2 = float(np.linalg.norm(n2))
            if l1 <= 0.0 or l2 <= 0.0 or float(n1 @ n2) / (l1 * l2) < _FEATURE_COS:
                pinned[a] = True
                pinned[b] = True
        return pinned

    def _flips_ok(self, moved, target, affected):
        for t in affected:
            tri = self.tris[t]
            old_n = self.tri_normal(tri)
            qs = [target if v in moved else self.pos[v] for v in tri]
            new_n = np.cross(qs[1] - qs[0], qs[2] - qs[0])
            if float(old_n @ new_n) <= 0.0:
                return False
        return True

    # -- moves -----------------------------------------------------------

    def valence_flip_sweep(self, edges):
        """Flip edges that reduce the squared deviation from valence 6.

        Irregular valences force triangle-size gradients that tangential
        relaxation cannot remove, so regularizing them first makes the
        whole pass converge to a more uniform mesh."""
        valence = [0] * len(self.pos)
        for (a, b) in edges:
            valence[a] += 1
            valence[b] += 1
        flips = 0
        for a, b in sorted(edges):
            ts = edges.get((a, b))
            if ts is None or len(ts) != 2:
                continue
            t1, t2 = ts
            tri1, tri2 = self.tris[t1], self.tris[t2]
            if not _has_directed(tri1, a, b):
                t1, t2 = t2, t1
                tri1, tri2 = tri2, tri1
                if not _has_directed(tri1, a, b):
                    continue
            if not _has_directed(tri2, b, a):
                continue
            c = _third(tri1, a, b)
            d = _third(tri2, a, b)
            if c == d:
                continue
            key_cd = (c, d) if c < d else (d, c)
            if key_cd in edges:
                continue
            old_p = ((valence[a] - 6) ** 2 + (valence[b] - 6) ** 2
                     + (valence[c] - 6) ** 2 + (valence[d] - 6) ** 2)
            new_p = ((valence[a] - 7) ** 2 + (valence[b] - 7) ** 2
                     + (valence[c] - 5) ** 2 + (valence[d] - 5) ** 2)
            if new_p >= old_p:
                continue
            n1 = self.tri_normal(tri1)
            n2 = self.tri_normal(tri2)
            l1 = float(np.linalg.norm(n1))
            l2 = float(np.linalg.norm(n2))
            if l1 <= 0.0 or l2 <= 0.0 or float(n1 @ n2) / (l1 * l2) < _FEATURE_COS:
                continue
            new1 = [c, a, d]
            new2 = [c, d, b]
            avg = n1 + n2
            if float(self.tri_normal(new1) @ avg) <= 0.0:
                continue
            if float(self.tri_normal(new2) @ avg) <= 0.0:
                continue
            # do not trade valence for a much worse shape
            q_old = max(self.circumradius2(tri1), self.circumradius2(tri2))
            q_new = max(self.circumradius2(new1), self.circumradius2(new2))
            if q_new > 2.0 * q_old:
                continue
            for t_old, new in ((t1, new1), (t2, new2)):
                old = self.tris[t_old]
                for u, v in ((old[0], old[1]), (old[1], old[2]), (old[2], old[0])):
                    key = (u, v) if u < v else (v, u)
                    edges[key].remove(t_old)
                    if not edges[key]:
                        del edges[key]
                for v in old:
                    self.vert_tris[v].discard(t_old)
                self.tris[t_old] = new
                for u, v in ((new[0], new[1]), (new[1], new[2]), (new[2], new[0])):
                    key = (u, v) if u < v else (v, u)
                    edges.setdefault(key, []).append(t_old)
                for v in new:
                    self.vert_tris[v].add(t_old)
            valence[a] -= 1
            valence[b] -= 1
            valence[c] += 1
            valence[d] += 1
            flips += 1
        return flips

    def flip_sweep(self, edges):
        flips = 0
        for a, b in sorted(edges):
            ts = edges.get((a, b))
            if ts is None or len(ts) != 2:
                continue
            t1, t2 = ts
            tri1, tri2 = self.tris[t1], self.tris[t2]
            if not _has_directed(tri1, a, b):
                t1, t2 = t2, t1
                tri1, tri2 = tri2, tri1
                if not _has_directed(tri1, a, b):
                    continue
            if not _has_directed(tri2, b, a):
                continue
            c = _third(tri1, a, b)
            d = _third(tri2, a, b)
            if c == d:
                continue
            key_cd = (c, d) if c < d else (d, c)
            if key_cd in edges:
                continue
            n1 = self.tri_normal(tri1)
            n2 = self.tri_normal(tri2)
            l1 = float(np.linalg.norm(n1))
            l2 = float(np.linalg.norm(n2))
            if l1 <= 0.0 or l2 <= 0.0 or float(n1 @ n2) / (l1 * l2) < _FEATURE_COS:
                continue
            new1 = [c, a, d]
            new2 = [c, d, b]
            avg = n1 + n2
            if float(self.tri_normal(new1) @ avg) <= 0.0:
                continue
            if float(self.tri_normal(new2) @ avg) <= 0.0:
                continue
            q_old = max(self.circumradius2(tri1), self.circumradius2(tri2))
            q_new = max(self.circumradius2(new1), self.circumradius2(new2))
            if not q_new < q_old * (1.0 - 1e-9):
                continue
            for t_old, new in ((t1, new1), (t2, new2)):
                old = self.tris[t_old]
                for u, v in ((old[0], old[1]), (old[1], old[2]), (old[2], old[0])):
                    key = (u, v) if u < v else (v, u)
                    edges[key].remove(t_old)
                    if not edges[key]:
                        del edges[key]
                for v in old:
                    self.vert_tris[v].discard(t_old)
                self.tris[t_old] = new
                for u, v in ((new[0], new[1]), (new[1], new[2]), (new[2], new[0])):
                    key = (u, v) if u < v else (v, u)
                    edges.setdefault(key, []).append(t_old)
                for v in new:
                    self.vert_tris[v].add(t_old)
            flips += 1
        return flips

    def split_edge(self, a, b, edges):
        """Insert a midpoint vertex on interior manifold edge (a, b)."""
        ts = edges.get((a, b) if a < b else (b, a))
        if ts is None or len(ts) != 2:
            return False
        w = len(self.pos)
        self.pos.append(0.5 * (self.pos[a] + self.pos[b]))
        self.parents.append((a, b))
        self.vert_tris.append(set())
        for t in list(ts):
            tri = self.tris[t]
            # each incident triangle becomes two: w replaces b in one copy
            # and a in the other, preserving winding
            new_a = [w if v == b else v for v in tri]
            new_b = [w if v == a else v for v in tri]
            self._retire(t, edges)
            self._add_tri(new_a, edges)
            self._add_tri(new_b, edges)
        return True

    def _add_tri(self, tri, edges):
        t = len(self.tris)
        self.tris.append(tri)
        self.alive.append(True)
        self.n_tris += 1
        for v in tri:
            self.vert_tris[v].add(t)
        a, b, c = tri
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edges.setdefault(key, []).append(t)

    def _retire(self, t, edges):
        tri = self.tris[t]
        a, b, c = tri
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            if key in edges and t in edges[key]:
                edges[key].remove(t)
                if not edges[key]:
                    del edges[key]
        for v in tri:
            self.vert_tris[v].discard(t)
        self.alive[t] = False
        self.n_tris -= 1

    def collapse_edge(self, a, b, edges, pinned):
        """Collapse (a, b) to its midpoint (or the pinned endpoint)."""
        shared = self.vert_tris[a] & self.vert_tris[b]
        if not shared:
            return False
        pa, pb = pinned[a], pinned[b]
        if pa and pb:
            return False
        if pa:
            survivor, removed, target = a, b, self.pos[a]
        elif pb:
            survivor, removed, target = b, a, self.pos[b]
        else:
            survivor = a if a < b else b
            removed = b if survivor == a else a
            target = 0.5 * (self.pos[a] + self.pos[b])
        # link condition: the common neighbors must be exactly the third
        # vertices of the shared triangles, else the collapse pinches the mesh
        na = set()
        for t in self.vert_tris[a]:
            na.update(self.tris[t])
        nb = set()
        for t in self.vert_tris[b]:
            nb.update(self.tris[t])
        common = (na & nb) - {a, b}
        thirds = set()
        for t in shared:
            thirds.update(v for v in self.tris[t] if v != a and v != b)
        if common != thirds:
            return False
        affected = sorted((self.vert_tris[a] | self.vert_tris[b]) - shared)
        if not self._flips_ok({a, b}, target, affected):
            return False
        for t in sorted(shared):
            self._retire(t, edges)
        self.pos[survivor] = target
        for t in sorted(self.vert_tris[removed]):
            tri = self.tris[t]
            for u, v in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (u, v) if u < v else (v, u)
                if key in edges and t in edges[key]:
                    edges[key].remove(t)
                    if not edges[key]:
                        del edges[key]
            for i in range(3):
                if tri[i] == removed:
                    tri[i] = survivor
            for u, v in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (u, v) if u < v else (v, u)
                edges.setdefault(key, []).append(t)
            self.vert_tris[removed].discard(t)
            self.vert_tris[survivor].add(t)
        return True

    # -- extraction ------------------------------------------------------

    def compact(self, n_input):
        used = sorted({v for t, tri in enumerate(self.tris) if self.alive[t] for v in tri})
        remap = {v: i for i, v in enumerate(used)}
        pos = np.array([self.pos[v] for v in used], dtype=np.float64).reshape(-1, 3)
        tris = np.array(
            [[remap[v] for v in tri] for t, tri in enumerate(self.tris) if self.alive[t]],
            dtype=np.int64,
        ).reshape(-1, 3)

        def resolve(v):
            # chase split-of-split chains down to an input vertex
            while v >= n_input:
                v = self.parents[v][0]
            return v

        parents = np.array(
            [(resolve(self.parents[v][0]), resolve(self.parents[v][1])) for v in used],
            dtype=np.int64,
        ).reshape(-1, 2)
        return pos, tris, parents


def _has_directed(tri, a, b):
    x, y, z = tri
    return (x == a and y == b) or (y == a and z == b) or (z == a and x == b)


def _third(tri, a, b):
    for v in tri:
        if v != a and v != b:
            return int(v)
    return int(tri[0])


def _np_circumradius2(pos, tri):
    p0, p1, p2 = pos[tri[0]], pos[tri[1]], pos[tri[2]]
    e0 = float(((p1 - p0) ** 2).sum())
    e1 = float(((p2 - p1) ** 2).sum())
    e2 = float(((p0 - p2) ** 2).sum())
    n = np.cross(p1 - p0, p2 - p0)
    four_a2 = float((n * n).sum())
    if four_a2 <= 0.0:
        return math.inf
    return e0 * e1 * e2 / (4.0 * four_a2)


def _butterfly_reference(positions, triangles):
    """One interpolating (butterfly) subdivision of the reference mesh.

    The reference is a linear interpolant that sits slightly inside the
    smooth surface it sampled; its butterfly subdivision lands midpoints
    near that smooth surface, so balancing against it centers the output on
    the true shape instead of the reference's own facets. Crease, boundary,
    and non-manifold edges fall back to plain midpoints, keeping features.
    """
    pos = [np.asarray(p, dtype=np.float64) for p in positions]
    edge_faces: dict[tuple[int, int], list[int]] = {}
    for t, (a, b, c) in enumerate(triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edge_faces.setdefault(key, []).append(t)

    def opposite(t, u, v):
        for w in triangles[t]:
            if w != u and w != v:
                return int(w)
        return int(triangles[t][0])

    def face_normal(t):
        a, b, c = triangles[t]
        return np.cross(pos[b] - pos[a], pos[c] - pos[a])

    midpoint_id: dict[tuple[int, int], int] = {}
    for key in sorted(edge_faces):
        a, b = key
        ts = edge_faces[key]
        m = 0.5 * (pos[a] + pos[b])
        if len(ts) == 2:
            n1 = face_normal(ts[0])
            n2 = face_normal(ts[1])
            l1 = float(np.linalg.norm(n1))
            l2 = float(np.linalg.norm(n2))
            smooth = l1 > 0.0 and l2 > 0.0 and float(n1 @ n2) / (l1 * l2) >= _FEATURE_COS
            if smooth:
                c = opposite(ts[0], a, b)
                d = opposite(ts[1], a, b)
                m = m + 0.125 * (pos[c] + pos[d])
                wings = []
                complete = True
                for t, far in ((ts[0], c), (ts[1], d)):
                    tn = face_normal(t)
                    tl = float(np.linalg.norm(tn))
                    for u in (a, b):
                        wkey = (u, far) if u < far else (far, u)
                        wts = edge_faces.get(wkey, [])
                        wing = None
                        for wt in wts:
                            if wt == t:
                                continue
                            # a wing across a crease would bulge the
                            # reference next to the feature; skip it
                            wn = face_normal(wt)
                            wl = float(np.linalg.norm(wn))
                            if tl > 0.0 and wl > 0.0 and \
                                    float(tn @ wn) / (tl * wl) >= _FEATURE_COS:
                                wing = opposite(wt, u, far)
                        if wing is None:
                            complete = False
                        else:
                            wings.append(wing)
                if complete:
                    m = m - 0.0625 * (pos[wings[0]] + pos[wings[1]]
                                      + pos[wings[2]] + pos[wings[3]])
                else:
                    # incomplete stencil: only the plain midpoint is safe
                    m = 0.5 * (pos[a] + pos[b])
        midpoint_id[key] = len(pos)
        pos.append(m)

    out_tris = []
    for a, b, c in triangles:
        mab = midpoint_id[(a, b) if a < b else (b, a)]
        mbc = midpoint_id[(b, c) if b < c else (c, b)]
        mca = midpoint_id[(c, a) if c < a else (a, c)]
        out_tris.extend([[a, mab, mca], [b, mbc, mab], [c, mca, mbc], [mab, mbc, mca]])
    return np.array(pos), np.array(out_tris, dtype=np.int64)


def _relax_tangential(rm: _Remesh, edges):
    """One area-weighted tangential relaxation sweep (no reference queries)."""
    pinned = rm.pinned_verts(edges)
    n = len(rm.pos)
    for u in range(n):
        if pinned[u] or not rm.vert_tris[u]:
            continue
        star = sorted(rm.vert_tris[u])
        a_sum = 0.0
        target = np.zeros(3)
        vnorm = np.zeros(3)
        for t in star:
            tri = rm.tris[t]
            p0, p1, p2 = rm.pos[tri[0]], rm.pos[tri[1]], rm.pos[tri[2]]
            fn = np.cross(p1 - p0, p2 - p0)
            area = 0.5 * float(np.linalg.norm(fn))
            vnorm += fn
            # weight by area x circumradius^4: oversized faces pull hard,
            # so the equilibrium equalizes sag rather than cell area
            cr2 = rm.circumradius2(tri)
            w = area * cr2 * cr2
            if not math.isfinite(w):
                w = 0.0
            a_sum += w
            target += w * ((p0 + p1 + p2) / 3.0)
        ln = float(np.linalg.norm(vnorm))
        if a_sum <= 0.0 or ln <= 0.0:
            continue
        vnorm /= ln
        move = target / a_sum - rm.pos[u]
        tangential = move - float(move @ vnorm) * vnorm
        cand = rm.pos[u] + _SMOOTH_STEP * tangential
        if rm._flips_ok({u}, cand, star):
            rm.pos[u] = cand


def _signed_heights(points, normals, ref_a, ref_b, ref_c):
    dist, closest = kernels.point_mesh_closest(points, ref_a, ref_b, ref_c)
    offset = points - closest
    sign = np.where((offset * normals).sum(axis=1) >= 0.0, 1.0, -1.0)
    return sign * dist


def _relax_and_balance(rm: _Remesh, edges, ref_a, ref_b, ref_c, orig,
                       tangential_step=None):
    """Tangential area relaxation plus deviation-band centering.

    orig is the (unsubdivided) input surface triple; heights above it are
    capped so the bulge cannot stack on the input's own facet sag.
    Returns (live triangle ids, |signed sag| per live triangle)."""
    if tangential_step is None:
        tangential_step = _SMOOTH_STEP
    pinned = rm.pinned_verts(edges)
    n = len(rm.pos)
    pos = np.array([p for p in rm.pos]).reshape(-1, 3)
    live = [t for t in range(len(rm.tris)) if rm.alive[t]]
    tris = np.array([rm.tris[t] for t in live], dtype=np.int64).reshape(-1, 3)
    if not len(tris):
        return [], np.zeros(0)
    fa = pos[tris[:, 0]]
    fb = pos[tris[:, 1]]
    fc = pos[tris[:, 2]]
    face_n = np.cross(fb - fa, fc - fa)
    areas = 0.5 * np.linalg.norm(face_n, axis=1)
    bary = (fa + fb + fc) / 3.0
    vnorm = np.zeros((n, 3))
    for kk in range(3):
        np.add.at(vnorm, tris[:, kk], face_n)
    ln = np.linalg.norm(vnorm, axis=1)
    ok = ln > 0.0
    vnorm[ok] /= ln[ok, None]

    h_vert = _signed_heights(pos, vnorm, ref_a, ref_b, ref_c)
    h_orig = _signed_heights(pos, vnorm, orig[0], orig[1], orig[2])
    fl = np.linalg.norm(face_n, axis=1)
    face_dir = np.zeros_like(face_n)
    fok = fl > 0.0
    face_dir[fok] = face_n[fok] / fl[fok, None]
    h_face = _signed_heights(bary, face_dir, ref_a, ref_b, ref_c)
    row_of = {t: i for i, t in enumerate(live)}

    for u in range(n):
        if pinned[u] or not rm.vert_tris[u] or not ok[u]:
            continue
        star = sorted(rm.vert_tris[u])
        rows = [row_of[t] for t in star]
        a_sum = float(areas[rows].sum())
        if a_sum <= 0.0:
            continue
        cr2 = np.array([_np_circumradius2(pos, tris[r]) for r in rows])
        cr2 = np.where(np.isfinite(cr2), cr2, 0.0)
        w = areas[rows] * cr2 * cr2
        w_sum = float(w.sum())
        if w_sum > 0.0:
            target = (w[:, None] * bary[rows]).sum(axis=0) / w_sum
        else:
            target = (areas[rows, None] * bary[rows]).sum(axis=0) / a_sum
        # balance against the deepest incident face center, not the mean:
        # the deviation is a max-norm, so the worst face decides
        h_faces = float(h_face[rows].min())
        max_e2 = 0.0
        for t in star:
            for w in rm.tris[t]:
                if w != u:
                    d2 = float(((rm.pos[w] - rm.pos[u]) ** 2).sum())
                    if d2 > max_e2:
                        max_e2 = d2
        nrm = vnorm[u]
        move = target - rm.pos[u]
        tangential = move - float(move @ nrm) * nrm
        # vertex at measured height h above the reference, incident face
        # centers at mean height h_faces below it; moving the vertex by
        # delta shifts the centers by about delta/3
        # the deviation band is read on both sides: vertex height against
        # the raw input surface and against the smooth reference (their
        # average), face depth against the smooth reference; driving the
        # sum to zero equalizes the binding terms
        h_top = 0.5 * (float(h_vert[u]) + float(h_orig[u]))
        delta = -0.75 * (h_top + h_faces)
        limit = 0.5 * math.sqrt(max_e2)
        delta = max(-limit, min(limit, delta))
        cand = rm.pos[u] + tangential_step * tangential + delta * nrm
        if rm._flips_ok({u}, cand, star):
            rm.pos[u] = cand
    return live, np.abs(h_face)


def refine_mesh(positions, triangles, ref_positions, ref_triangles):
    """Remesh within the triangle budget; returns (positions, triangles,
    parents) where parents maps each output vertex to the one or two input
    vertices it came from (i, i) or (i, j)."""
    identity = (
        positions,
        triangles,
        np.stack([np.arange(len(positions))] * 2, axis=1).astype(np.int64),
    )
    if len(triangles) == 0 or len(ref_triangles) == 0:
        return identity
    budget = len(triangles)
    work = (len(positions) + 2 * budget) * 4 * len(ref_triangles) * _ROUNDS
    if work > _MAX_QUERY_WORK:
        return identity

    ref_p, ref_t = _butterfly_reference(ref_positions, ref_triangles)
    ref_a = ref_p[ref_t[:, 0]]
    ref_b = ref_p[ref_t[:, 1]]
    ref_c = ref_p[ref_t[:, 2]]
    orig = (
        ref_positions[ref_triangles[:, 0]],
        ref_positions[ref_triangles[:, 1]],
        ref_positions[ref_triangles[:, 2]],
    )

    rm = _Remesh(positions, triangles)
    total_area = 0.0
    for t, tri in enumerate(rm.tris):
        total_area += 0.5 * float(np.linalg.norm(rm.tri_normal(tri)))
    if total_area <= 0.0:
        return identity
    # edge length of an equilateral tiling of the same area with `budget` tris
    target_e2 = 4.0 * total_area / (math.sqrt(3.0) * budget)

    def fill_to_budget(edges):
        """Split the longest interior edges until the budget is reached."""
        while rm.n_tris <= budget - 2:
            longs = []
            for (a, b), ts in edges.items():
                if len(ts) != 2:
                    continue
                e2 = float(((rm.pos[a] - rm.pos[b]) ** 2).sum())
                longs.append((-e2, a, b))
            longs.sort()
            split_any = False
            for _neg, a, b in longs:
                if rm.n_tris > budget - 2:
                    break
                if rm.split_edge(a, b, edges):
                    split_any = True
            if not split_any:
                break

    def pay_down(edges, fresh):
        """Collapse shortest edges until within budget, avoiding the fresh
        split vertices first and falling back to them only if stuck."""
        for allow_fresh in (False, True):
            while rm.n_tris > budget:
                pinned = rm.pinned_verts(edges)
                shorts = []
                for (a, b), ts in edges.items():
                    if not allow_fresh and (a in fresh or b in fresh):
                        continue
                    e2 = float(((rm.pos[a] - rm.pos[b]) ** 2).sum())
                    shorts.append((e2, a, b))
                shorts.sort()
                collapsed = False
                for _e2, a, b in shorts:
                    if rm.collapse_edge(a, b, edges, pinned):
                        collapsed = True
                        break
                if not collapsed:
                    break
            if rm.n_tris <= budget:
                return True
        return rm.n_tris <= budget

    for rnd in range(_ROUNDS):
        edges = rm.edge_map()
        rm.valence_flip_sweep(edges)
        rm.flip_sweep(edges)
        fill_to_budget(edges)

        # migrate density out of over-dense spots: collapse clearly short
        # edges, then spend the freed budget on the longest ones
        transfers = max(2, budget // 16)
        done = 0
        while done < transfers:
            pinned = rm.pinned_verts(edges)
            shorts = []
            for (a, b), ts in edges.items():
                e2 = float(((rm.pos[a] - rm.pos[b]) ** 2).sum())
                if e2 < _COLLAPSE_FACTOR2 * target_e2:
                    shorts.append((e2, a, b))
            shorts.sort()
            collapsed = False
            for _e2, a, b in shorts:
                if rm.collapse_edge(a, b, edges, pinned):
                    collapsed = True
                    break
            if not collapsed:
                break
            done += 1
        fill_to_budget(edges)
        if rm.n_tris > budget and not pay_down(edges, set()):
            return identity

        for _ in range(_TANGENTIAL_SWEEPS):
            _relax_tangential(rm, edges)
        _relax_and_balance(rm, edges, ref_a, ref_b, ref_c, orig)

    # height-only polish: settle the measured deviation band without
    # disturbing the triangulation again
    edges = rm.edge_map()
    for _ in range(_POLISH_SWEEPS):
        _relax_and_balance(rm, edges, ref_a, ref_b, ref_c, orig, tangential_step=0.0)

    if rm.n_tris > budget:
        return identity
    return rm.compact(len(positions))
