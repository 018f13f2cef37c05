"""Triangulations of parameter domains with per-vertex jets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from curvatura.surface.domains import Annulus, Rectangle, StarDomain
from curvatura.surface.jets import BoundaryJet, SurfaceJet, evaluate_boundary_jets, evaluate_jets
from curvatura.surface.patch import ParametricPatch, PatchError


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Triangulated patch.

    ``boundary_vertices`` lists the vertices on the domain boundary;
    ``boundary_curve`` and ``boundary_t`` locate each on its boundary curve
    and ``bjets`` holds their frame data (rows aligned with
    ``boundary_vertices``; corner vertices of rectangles carry NaN).
    """

    patch: ParametricPatch
    resolution: int
    params: np.ndarray
    positions: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_edge_labels: np.ndarray
    boundary_vertices: np.ndarray
    boundary_curve: np.ndarray
    boundary_t: np.ndarray
    jets: SurfaceJet
    bjets: BoundaryJet | None
    corner_mask: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))

    @property
    def n_vertices(self) -> int:
        return int(self.params.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def edges(self) -> np.ndarray:
        return _unique_edges(self.triangles)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_triangles

    @property
    def n_boundary_components(self) -> int:
        return int(len(np.unique(self.boundary_edge_labels))) if len(self.boundary_edges) else 0

    @property
    def interior_mask(self) -> np.ndarray:
        m = np.ones(self.n_vertices, bool)
        m[self.boundary_vertices] = False
        return m

    @property
    def triangle_areas(self) -> np.ndarray:
        """Areas of the flat ambient triangles (Euclidean chord areas)."""
        P = self.positions
        a = P[self.triangles[:, 1]] - P[self.triangles[:, 0]]
        b = P[self.triangles[:, 2]] - P[self.triangles[:, 0]]
        aa, bb, ab = (a * a).sum(1), (b * b).sum(1), (a * b).sum(1)
        return 0.5 * np.sqrt(np.maximum(aa * bb - ab * ab, 0.0))

    @property
    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.linalg.norm(self.positions[e[:, 1]] - self.positions[e[:, 0]], axis=1)

    @property
    def max_edge_length(self) -> float:
        return float(self.edge_lengths.max())

    def boundary_row(self) -> np.ndarray:
        """Map vertex index -> row in ``boundary_vertices`` (-1 for interior)."""
        row = np.full(self.n_vertices, -1)
        row[self.boundary_vertices] = np.arange(len(self.boundary_vertices))
        return row


def _unique_edges(tris: np.ndarray) -> np.ndarray:
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def _boundary_edges(tris: np.ndarray) -> np.ndarray:
    """Directed edges used by exactly one triangle (orientation kept)."""
    directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(directed, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return directed[counts[inv.ravel()] == 1]


def _label_components(edges: np.ndarray) -> np.ndarray:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    if len(edges) == 0:
        return np.zeros(0, int)
    verts, inv = np.unique(edges, return_inverse=True)
    inv = inv.reshape(edges.shape)
    n = len(verts)
    g = coo_matrix((np.ones(len(edges)), (inv[:, 0], inv[:, 1])), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    # relabel in order of first appearance for determinism
    first = {}
    for l_ in lab[inv[:, 0]]:
        first.setdefault(int(l_), len(first))
    return np.array([first[int(l_)] for l_ in lab[inv[:, 0]]])


def _zip_rings(ia: np.ndarray, ta: np.ndarray, ib: np.ndarray, tb: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate the strip between two closed rings (inner a, outer b).

    ``ta``/``tb`` are increasing angles in [0, 2 pi); triangles are CCW when
    ring b lies outside ring a.
    """
    na, nb = len(ia), len(ib)
    tris = []
    i = j = 0
    while i < na or j < nb:
        a0, b0 = ia[i % na], ib[j % nb]
        next_a = ta[i + 1] if i + 1 < na else ta[0] + 2 * math.pi
        next_b = tb[j + 1] if j + 1 < nb else tb[0] + 2 * math.pi
        if j >= nb or (i < na and next_a <= next_b):
            tris.append((a0, b0, ia[(i + 1) % na]))
            i += 1
        else:
            tris.append((a0, b0, ib[(j + 1) % nb]))
            j += 1
    return tris


def _ring_mesh(radii: np.ndarray, counts: list[int], with_center: bool, offsets: list[float] | None = None):
    """Concentric rings of the unit-scaled disk/annulus; returns (rho, t, tris)."""
    rho, tt, rings = [], [], []
    idx = 0
    if with_center:
        rho.append(0.0)
        tt.append(0.0)
        idx = 1
    for k, (r, m) in enumerate(zip(radii, counts)):
        off = 0.0 if offsets is None else offsets[k]
        t = (off + 2 * math.pi * np.arange(m) / m) % (2 * math.pi)
        order = np.argsort(t, kind="stable")
        t = t[order]
        ids = idx + np.arange(m)
        rho.extend([r] * m)
        tt.extend(t.tolist())
        rings.append((ids, t))
        idx += m
    tris = []
    if with_center:
        ids, _ = rings[0]
        m = len(ids)
        tris.extend((0, int(ids[j]), int(ids[(j + 1) % m])) for j in range(m))
    for (ia, ta), (ib, tb) in zip(rings[:-1], rings[1:]):
        tris.extend(_zip_rings(ia, ta, ib, tb))
    return np.array(rho), np.array(tt), np.array(tris, dtype=np.int64), rings


def mesh_patch(patch: ParametricPatch, resolution: int) -> SurfaceMesh:
    """Triangulate the patch's domain and evaluate jets at every vertex.

    Star domains use ``resolution`` concentric rings with 6k vertices on ring
    k; annuli use ``resolution`` radial layers with ring sizes proportional to
    the radius; rectangles use a structured grid.
    """
    resolution = int(resolution)
    if resolution < 4:
        raise ValueError("resolution must be at least 4")
    dom = patch.domain
    if isinstance(dom, StarDomain):
        n = resolution
        s = np.arange(1, n + 1) / n
        rho, t, tris, rings = _ring_mesh(s, [6 * k for k in range(1, n + 1)], True, [0.0] * n)
        R = np.asarray(dom.radius(t, np))
        params = np.stack([rho * R * np.cos(t), rho * R * np.sin(t)], axis=1)
        bverts = rings[-1][0]
        bcurve = np.zeros(len(bverts), int)
        bt = rings[-1][1]
        corner = np.zeros(len(bverts), bool)
    elif isinstance(dom, Annulus):
        n = resolution
        radii = dom.r_in + (dom.r_out - dom.r_in) * np.arange(n + 1) / n
        hr = (dom.r_out - dom.r_in) / n
        counts = [max(12, int(round(2 * math.pi * r / hr))) for r in radii]
        offs = [0.5 * (k % 2) * 2 * math.pi / counts[k] for k in range(n + 1)]
        rho, t, tris, rings = _ring_mesh(radii, counts, False, offs)
        params = np.stack([rho * np.cos(t), rho * np.sin(t)], axis=1)
        outer, inner = rings[-1], rings[0]
        bverts = np.concatenate([outer[0], inner[0]])
        bcurve = np.concatenate([np.zeros(len(outer[0]), int), np.ones(len(inner[0]), int)])
        # the inner curve is traversed clockwise: point(t) = r_in (cos(-t), sin(-t))
        bt = np.concatenate([outer[1], (-inner[1]) % (2 * math.pi)])
        corner = np.zeros(len(bverts), bool)
    elif isinstance(dom, Rectangle):
        nu = resolution
        nv = max(4, int(round(resolution * (dom.v1 - dom.v0) / (dom.u1 - dom.u0))))
        u = np.linspace(dom.u0, dom.u1, nu + 1)
        v = np.linspace(dom.v0, dom.v1, nv + 1)
        U, V = np.meshgrid(u, v, indexing="ij")
        params = np.stack([U.ravel(), V.ravel()], axis=1)

        def vid(i, j):
            return i * (nv + 1) + j

        tl = []
        for i in range(nu):
            for j in range(nv):
                a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
                tl.extend([(a, b, c), (a, c, d)])
        tris = np.array(tl, dtype=np.int64)
        bl, cl, tl_ = [], [], []
        for k, (ii, jj, tv) in enumerate(
            [
                (np.arange(nu + 1), np.zeros(nu + 1, int), np.linspace(0, 1, nu + 1)),
                (np.full(nv + 1, nu), np.arange(nv + 1), np.linspace(0, 1, nv + 1)),
                (np.arange(nu, -1, -1), np.full(nu + 1, nv), np.linspace(0, 1, nu + 1)),
                (np.zeros(nv + 1, int), np.arange(nv, -1, -1), np.linspace(0, 1, nv + 1)),
            ]
        ):
            bl.append(vid(ii[:-1], jj[:-1]))
            cl.append(np.full(len(ii) - 1, k))
            tl_.append(tv[:-1])
        bverts = np.concatenate(bl)
        bcurve = np.concatenate(cl)
        bt = np.concatenate(tl_)
        corner = bt == 0.0
    else:
        raise PatchError(f"no mesher for domain type {type(dom).__name__}")

    bedges = _boundary_edges(tris)
    labels = _label_components(bedges)
    jets = evaluate_jets(patch, params)
    positions = jets.position
    bjets = _boundary_jets(patch, bcurve, bt, corner)
    return SurfaceMesh(
        patch=patch,
        resolution=resolution,
        params=params,
        positions=positions,
        triangles=tris,
        boundary_edges=bedges,
        boundary_edge_labels=labels,
        boundary_vertices=np.asarray(bverts, dtype=np.int64),
        boundary_curve=bcurve,
        boundary_t=bt,
        jets=jets,
        bjets=bjets,
        corner_mask=corner,
    )


def _boundary_jets(patch, bcurve, bt, corner) -> BoundaryJet:
    parts = {}
    for k in np.unique(bcurve):
        sel = np.where((bcurve == k) & ~corner)[0]
        if len(sel):
            parts[k] = (sel, evaluate_boundary_jets(patch, int(k), bt[sel]))
    n = len(bcurve)
    first = next(iter(parts.values()))[1]
    out = {}
    for name in first.__dataclass_fields__:
        proto = np.asarray(getattr(first, name))
        arr = np.full((n,) + proto.shape[1:], np.nan)
        for sel, bj in parts.values():
            arr[sel] = getattr(bj, name)
        out[name] = arr
    out["t"] = np.asarray(bt, dtype=float)
    out["label"] = np.asarray(bcurve)
    return BoundaryJet(**out)


def export_off(mesh: SurfaceMesh, path) -> None:
    """ASCII OFF: header, 'V F 0', vertex coordinates (3 or 4 floats), '3 i j k'."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles} 0\n")
        for x in mesh.positions:
            fh.write(" ".join(f"{v:.17g}" for v in x) + "\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def read_off(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if lines[0] != "OFF":
        raise ValueError("not an OFF file")
    nv, nf, _ = (int(x) for x in lines[1].split())
    verts = np.array([[float(x) for x in ln.split()] for ln in lines[2 : 2 + nv]])
    faces = np.array([[int(x) for x in ln.split()[1:]] for ln in lines[2 + nv : 2 + nv + nf]])
    return verts, faces
