"""Gauss-Bonnet audits on meshes, whole or split along a nodal set.

Each region is the part of the parameter domain where the (perturbed)
piecewise-linear function has a fixed sign and lies in one component.
Triangles are clipped along the zero set, shared edges cancel, and the
remaining directed edges are chained into boundary loops.  Along the
domain boundary the exact geodesic curvature of the boundary curve is
integrated; along the nodal polyline (straight in the parameter plane) the
geodesic curvature is a Christoffel term per segment plus turning angles at
its vertices.  Angles are measured in the induced metric.  The parameter
domains are planar, so a region with b boundary loops has chi = 2 - b.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from curvatura.discretize.mesh import SurfaceMesh
from curvatura.spaceform import BallGeometry, cn, sn
from curvatura.topology.nodal import NodalGraph


@dataclass(frozen=True)
class RegionAudit:
    sign: int
    euler_characteristic: int
    integral_K: float
    boundary_kappa: float  # along the domain boundary
    nodal_kappa: float  # along nodal polylines (segments and turning)
    external_angles: list[float]
    residual: float  # int K + kappa terms + sum of angles - 2 pi chi


@dataclass(frozen=True)
class GaussBonnetAudit:
    regions: list[RegionAudit]
    integral_K: float
    boundary_kappa: float
    external_angle_sum: float
    euler_sum: int
    global_residual: float  # 2 pi sum chi - boundary kappa - angles - int K
    nodal_cancellation: float  # sum of nodal terms over regions (0 up to rounding)
    genus_inequality: dict | None = field(default=None)

    @property
    def max_region_residual(self) -> float:
        return max(abs(r.residual) for r in self.regions)

    def to_json(self) -> dict:
        return asdict(self)


def _angle(g, u, w) -> float:
    """Signed angle from u to w in the metric g (positive = left turn)."""
    cross = math.sqrt(max(g[0, 0] * g[1, 1] - g[0, 1] ** 2, 0.0)) * (u[0] * w[1] - u[1] * w[0])
    return math.atan2(cross, float(u @ g @ w))


class _Points:
    """Interpolated data at mesh vertices and edge crossings."""

    def __init__(self, mesh: SurfaceMesh, fp: np.ndarray, c: float):
        self.mesh = mesh
        self.fp = fp
        self.g = np.asarray(mesh.jets.metric)
        self.kj = (np.asarray(mesh.jets.H2) + c) * np.asarray(mesh.jets.area_density)
        self.row = mesh.boundary_row()
        bj = mesh.bjets
        nb = len(mesh.boundary_vertices)
        self.kg = np.asarray(bj.kappa_g) if bj is not None else np.full(nb, np.nan)
        self.tan = np.asarray(bj.tangent_coords) if bj is not None else np.full((nb, 2), np.nan)
        self.corner = mesh.corner_mask if len(mesh.corner_mask) else np.zeros(nb, bool)

    def _t(self, key):
        a, b = key
        return self.fp[a] / (self.fp[a] - self.fp[b])

    def _mix(self, arr, key):
        if key[1] < 0:
            return arr[key[0]]
        t = self._t(key)
        return (1.0 - t) * arr[key[0]] + t * arr[key[1]]

    def param(self, key):
        return self._mix(self.mesh.params, key)

    def metric(self, key):
        return self._mix(self.g, key)

    def kj_value(self, key):
        return float(self._mix(self.kj, key))

    def _bmix(self, arr, key):
        # boundary data at a vertex or a crossing on a boundary edge
        if key[1] < 0:
            return arr[self.row[key[0]]]
        ra, rb = self.row[key[0]], self.row[key[1]]
        va, vb = arr[ra], arr[rb]
        if np.any(~np.isfinite(va)):
            return vb
        if np.any(~np.isfinite(vb)):
            return va
        t = self._t(key)
        return (1.0 - t) * va + t * vb

    def kappa(self, key) -> float:
        return float(self._bmix(self.kg, key))

    def tangent(self, key):
        return self._bmix(self.tan, key)

    def is_corner(self, key) -> bool:
        return key[1] < 0 and self.row[key[0]] >= 0 and bool(self.corner[self.row[key[0]]])


def _vkey(i: int):
    return (int(i), -1)


def _ekey(a: int, b: int):
    return (int(a), int(b)) if a < b else (int(b), int(a))


def _region_labels(mesh: SurfaceMesh, fp: np.ndarray):
    e = mesh.edges
    s = fp > 0
    same = s[e[:, 0]] == s[e[:, 1]]
    n = mesh.n_vertices
    A = sp.coo_matrix((np.ones(same.sum()), (e[same, 0], e[same, 1])), shape=(n, n))
    _, lab = connected_components(A, directed=False)
    first: dict = {}
    for v, l in enumerate(lab):
        first.setdefault(int(l), v)
    order = sorted(first, key=first.get)
    remap = {l: i for i, l in enumerate(order)}
    return np.array([remap[int(l)] for l in lab]), [1 if s[first[l]] else -1 for l in order]


def _clip(tri, fp, region_of, region):
    """CCW polygon (point keys) of the triangle part belonging to ``region``,
    plus the set of its nodal (cut) edges."""
    out, cuts = [], set()
    verts = [int(v) for v in tri]
    inside = [region_of[v] == region for v in verts]
    if not any(inside):
        return out, cuts
    for k in range(3):
        a, b = verts[k], verts[(k + 1) % 3]
        if inside[k]:
            out.append(_vkey(a))
        if (fp[a] > 0) != (fp[b] > 0):
            out.append(_ekey(a, b))
    m = len(out)
    for k in range(m):
        p, q = out[k], out[(k + 1) % m]
        if p[1] >= 0 and q[1] >= 0:
            cuts.add((p, q))
    return out, cuts


def _loops(edges: list):
    nxt: dict = {}
    for e in edges:
        nxt.setdefault(e[0], []).append(e)
    used = set()
    loops = []
    for e0 in edges:
        if e0 in used:
            continue
        loop = []
        e = e0
        while e not in used:
            used.add(e)
            loop.append(e)
            cand = [c for c in nxt[e[1]] if c not in used]
            if not cand:
                break
            e = cand[0]
        loops.append(loop)
    return loops


def _triangles_ccw(mesh: SurfaceMesh) -> np.ndarray:
    tri = mesh.triangles.copy()
    P = mesh.params[tri]
    e1, e2 = P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]
    neg = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    tri[neg] = tri[neg][:, ::-1]
    return tri


def _segment_kappa(mesh: SurfaceMesh, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Integral of the geodesic curvature along straight parameter segments (midpoint rule)."""
    if len(starts) == 0:
        return np.zeros(0)
    d = ends - starts
    mids = 0.5 * (starts + ends)
    _, D1, D2 = mesh.patch.derivatives(mids, order=2)
    sig = np.asarray(mesh.patch.sf.signature, dtype=float)
    g = np.einsum("nai,naj,a->nij", D1, D1, sig)
    acc = np.einsum("naij,ni,nj->na", D2, d, d)
    w = np.einsum("na,nal,a->nl", acc, D1, sig)  # lowered Christoffel term
    detg = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] ** 2
    ginv = np.linalg.inv(g)
    rd = np.stack([-d[:, 1], d[:, 0]], axis=1)
    dn = np.sqrt(np.einsum("ni,nij,nj->n", d, g, d))
    N = np.sqrt(detg)[:, None] * np.einsum("nij,nj->ni", ginv, rd) / dn[:, None]
    return np.einsum("nl,nl->n", w, N) / dn


def gauss_bonnet_audit(
    mesh: SurfaceMesh,
    partition: NodalGraph | None = None,
    ball: BallGeometry | None = None,
) -> GaussBonnetAudit:
    """Per-region and global Gauss-Bonnet residuals.

    Without ``partition`` the whole mesh is one region.  With a nodal graph
    the regions are the sign components of its (perturbed) function and the
    corners where nodal lines meet the boundary carry external angles.
    ``ball`` adds the genus-zero inequality report for ball supports.
    """
    c = mesh.patch.sf.c
    fp = np.ones(mesh.n_vertices) if partition is None else np.asarray(partition.f, dtype=float)
    region_of, signs = _region_labels(mesh, fp)
    pts = _Points(mesh, fp, c)
    tri_ccw = _triangles_ccw(mesh)
    h = float(np.mean(mesh.edge_lengths))

    # polygons per region
    per_region: list = [[] for _ in signs]
    for tri in tri_ccw:
        for r in {int(region_of[v]) for v in tri}:
            poly, cuts = _clip(tri, fp, region_of, r)
            if len(poly) >= 3:
                per_region[r].append((poly, cuts))

    region_data = []
    seg_requests = []
    for r, polys in enumerate(per_region):
        intK = 0.0
        directed = {}
        cutset = set()
        for poly, cuts in polys:
            cutset |= cuts
            p0 = pts.param(poly[0])
            k0 = pts.kj_value(poly[0])
            for j in range(1, len(poly) - 1):
                p1, p2 = pts.param(poly[j]), pts.param(poly[j + 1])
                a = 0.5 * abs((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]))
                intK += a * (k0 + pts.kj_value(poly[j]) + pts.kj_value(poly[j + 1])) / 3.0
            for j in range(len(poly)):
                e = (poly[j], poly[(j + 1) % len(poly)])
                directed[e] = directed.get(e, 0) + 1
        bedges = [e for e in directed if (e[1], e[0]) not in directed]
        loops = _loops(sorted(bedges))
        for loop in loops:
            for e in loop:
                if e in cutset:
                    seg_requests.append(e)
        region_data.append((intK, loops, cutset))

    # Christoffel terms for all nodal segments in one batch
    seg_index = {e: k for k, e in enumerate(seg_requests)}
    if seg_requests:
        S = np.array([pts.param(e[0]) for e in seg_requests])
        E = np.array([pts.param(e[1]) for e in seg_requests])
        seg_k = _segment_kappa(mesh, S, E)
    else:
        seg_k = np.zeros(0)

    regions = []
    total_outer, total_angles, total_K, total_nodal = 0.0, 0.0, 0.0, 0.0
    chi_sum = 0
    outer_length = 0.0
    for r, (intK, loops, cutset) in enumerate(region_data):
        outer, nodal = 0.0, 0.0
        angles: list[float] = []
        for loop in loops:
            corners = []  # (arc position, angle)
            pos = 0.0
            m = len(loop)
            for j, e in enumerate(loop):
                pa, pb = pts.param(e[0]), pts.param(e[1])
                d = pb - pa
                gm = 0.5 * (pts.metric(e[0]) + pts.metric(e[1]))
                length = math.sqrt(max(float(d @ gm @ d), 0.0))
                if e in cutset:
                    nodal += float(seg_k[seg_index[e]])
                else:
                    ka, kb = pts.kappa(e[0]), pts.kappa(e[1])
                    kvals = [k for k in (ka, kb) if math.isfinite(k)]
                    outer += length * (sum(kvals) / len(kvals) if kvals else 0.0)
                    outer_length += length
                pos += length
                # turning at the end point of e
                f = loop[(j + 1) % m]
                node = e[1]
                in_cut, out_cut = e in cutset, f in cutset
                if not in_cut and not out_cut and not pts.is_corner(node):
                    continue  # smooth boundary curve: its curvature is in kappa_g
                u = d if (in_cut or pts.is_corner(node)) else _oriented(pts.tangent(node), d)
                q = pts.param(f[1]) - pts.param(f[0])
                w = q if (out_cut or pts.is_corner(node)) else _oriented(pts.tangent(node), q)
                turn = _angle(pts.metric(node), u, w)
                if in_cut and out_cut:
                    nodal += turn
                else:
                    corners.append((pos, turn))
            angles.extend(_merge_corners(corners, pos, h))
        chi = 2 - len(loops)
        res = intK + outer + nodal + sum(angles) - 2 * math.pi * chi
        regions.append(
            RegionAudit(
                sign=int(signs[r]),
                euler_characteristic=chi,
                integral_K=intK,
                boundary_kappa=outer,
                nodal_kappa=nodal,
                external_angles=[float(a) for a in angles],
                residual=res,
            )
        )
        total_outer += outer
        total_angles += sum(angles)
        total_K += intK
        total_nodal += nodal
        chi_sum += chi
    glob = 2 * math.pi * chi_sum - total_outer - total_angles - total_K
    genus = None
    if ball is not None:
        area = _area(mesh)
        R = ball.radius
        rhs = c * area + float(cn(c, R) / sn(c, R)) * outer_length
        lhs = 2 * math.pi * mesh.euler_characteristic
        genus = dict(lhs=lhs, rhs=rhs, holds=bool(lhs > rhs), area=area, boundary_length=outer_length)
    return GaussBonnetAudit(
        regions=regions,
        integral_K=total_K,
        boundary_kappa=total_outer,
        external_angle_sum=total_angles,
        euler_sum=chi_sum,
        global_residual=glob,
        nodal_cancellation=total_nodal,
        genus_inequality=genus,
    )


def _oriented(t, d):
    t = np.asarray(t, dtype=float)
    return t if float(t @ d) >= 0 else -t


def _merge_corners(corners, loop_length, h):
    """Merge consecutive corners closer than ``h`` along the loop (cyclically)."""
    if not corners:
        return []
    merged = [[corners[0][0], corners[0][1]]]
    for p, a in corners[1:]:
        if p - merged[-1][0] < h:
            merged[-1][1] += a
            merged[-1][0] = p
        else:
            merged.append([p, a])
    if len(merged) > 1 and merged[0][0] + loop_length - merged[-1][0] < h:
        merged[0][1] += merged.pop()[1]
    return [a for _, a in merged]


def _area(mesh: SurfaceMesh) -> float:
    P = mesh.params[mesh.triangles]
    e1, e2 = P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]
    a = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    J = np.asarray(mesh.jets.area_density)[mesh.triangles].mean(axis=1)
    return float(np.sum(a * J))


def export_audit_json(audit: GaussBonnetAudit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(audit.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
