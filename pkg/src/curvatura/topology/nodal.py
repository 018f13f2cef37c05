"""Nodal sets of piecewise-linear vertex functions.

Vertex values below the zero tolerance are moved to ``+tol`` (a symbolic
perturbation), so the level set {f = 0} of the interpolant is a disjoint
union of simple polylines: closed loops or arcs ending on the boundary.
Branch points of the analytic nodal set then show up as near-touching
polylines; they are detected per vertex star by counting sign changes
around the star's link.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from curvatura.discretize.assembly import AssembledOperators, index_form
from curvatura.discretize.mesh import SurfaceMesh


class NodalError(ValueError):
    """The function vanishes identically (within tolerance) or the request is ill posed."""


@dataclass(frozen=True, eq=False)
class NodalGraph:
    """Zero set and sign components of a vertex function.

    ``polylines`` hold parameter points; ``polyline_edges`` name the mesh
    edge each point lies on.  ``domain_of_vertex`` maps every vertex to its
    nodal domain, or -1 for vertices within tolerance of zero; ``f`` holds
    the values after the zero perturbation.
    """

    f: np.ndarray  # perturbed values actually used
    tolerance: float
    polylines: list[np.ndarray]
    polyline_edges: list[np.ndarray]
    closed: list[bool]
    branch_points: np.ndarray  # (k, 2) parameter points
    endpoints: np.ndarray  # (k, 2) boundary endpoints of open polylines
    domain_of_vertex: np.ndarray
    domain_signs: np.ndarray
    domain_vertices: list[np.ndarray] = field(repr=False)

    @property
    def n_domains(self) -> int:
        return len(self.domain_signs)

    @property
    def vertices(self) -> np.ndarray:
        """Graph vertices: branch points followed by boundary endpoints."""
        return np.concatenate([self.branch_points.reshape(-1, 2), self.endpoints.reshape(-1, 2)])

    def to_json(self) -> dict:
        return {
            "n_domains": self.n_domains,
            "domain_signs": [int(s) for s in self.domain_signs],
            "domain_sizes": [int(len(v)) for v in self.domain_vertices],
            "n_polylines": len(self.polylines),
            "closed": [bool(c) for c in self.closed],
            "branch_points": [[float(x) for x in p] for p in self.branch_points],
            "endpoints": [[float(x) for x in p] for p in self.endpoints],
            "tolerance": float(self.tolerance),
        }


def zero_tolerance(mesh: SurfaceMesh, rel: float = 1e-6) -> float:
    """``rel`` times the jet scale (largest model-coordinate size of the mesh)."""
    return rel * max(1.0, float(np.max(np.abs(mesh.positions))))


def _crossing(fa, fb):
    return fa / (fa - fb)


def _edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _perturbed(mesh: SurfaceMesh, f, tol: float | None):
    f = np.asarray(f, dtype=float)
    if f.shape != (mesh.n_vertices,):
        raise ValueError(f"vertex function must have shape ({mesh.n_vertices},)")
    if tol is None:
        tol = zero_tolerance(mesh)
    if not np.all(np.isfinite(f)):
        raise NodalError("vertex function has non-finite values")
    if float(np.max(np.abs(f))) < tol:
        raise NodalError("function is identically zero within tolerance")
    return np.where(np.abs(f) < tol, tol, f), float(tol)


def _segments(mesh: SurfaceMesh, fp: np.ndarray):
    """One segment per triangle with a sign change: (edge key a, edge key b)."""
    segs = []
    for tri in mesh.triangles:
        s = fp[tri] > 0
        if s.all() or (~s).all():
            continue
        keys = [_edge_key(int(tri[i]), int(tri[(i + 1) % 3])) for i in range(3) if s[i] != s[(i + 1) % 3]]
        segs.append((keys[0], keys[1]))
    return segs


def _crossing_point(mesh: SurfaceMesh, fp, key):
    a, b = key
    t = _crossing(fp[a], fp[b])
    return (1.0 - t) * mesh.params[a] + t * mesh.params[b]


def _chain(segs):
    """Join segments sharing an edge key into polylines (lists of keys)."""
    adj: dict = {}
    for i, (a, b) in enumerate(segs):
        adj.setdefault(a, []).append(i)
        adj.setdefault(b, []).append(i)
    used = np.zeros(len(segs), bool)
    lines = []
    # open polylines start at keys seen once (boundary edges)
    starts = sorted(k for k, v in adj.items() if len(v) == 1)
    order = starts + sorted(k for k, v in adj.items() if len(v) != 1)
    for k0 in order:
        free = [i for i in adj[k0] if not used[i]]
        if not free:
            continue
        keys = [k0]
        cur = k0
        i = free[0]
        while True:
            used[i] = True
            a, b = segs[i]
            nxt = b if a == cur else a
            keys.append(nxt)
            cand = [j for j in adj[nxt] if not used[j]]
            if not cand:
                break
            cur, i = nxt, cand[0]
        closed = keys[0] == keys[-1] and len(keys) > 2
        lines.append((keys[:-1] if closed else keys, closed))
    return lines


def _link_sign_changes(mesh: SurfaceMesh, fp: np.ndarray) -> np.ndarray:
    """Number of sign changes of f along the link of each interior vertex."""
    n = mesh.n_vertices
    changes = np.zeros(n, int)
    s = fp > 0
    # each triangle contributes its opposite edge to the link of a vertex
    for k in range(3):
        v = mesh.triangles[:, k]
        a = mesh.triangles[:, (k + 1) % 3]
        b = mesh.triangles[:, (k + 2) % 3]
        np.add.at(changes, v, (s[a] != s[b]).astype(int))
    changes[~mesh.interior_mask] = 0
    return changes


def _sign_components(mesh: SurfaceMesh, f: np.ndarray, tol: float):
    """Components of same-sign edges among vertices with |f| >= tol.

    Returns (domain id per vertex, -1 for zero vertices), signs, vertex lists;
    domains are numbered by their lowest vertex index.
    """
    e = mesh.edges
    nz = np.abs(f) >= tol
    s = f > 0
    same = nz[e[:, 0]] & nz[e[:, 1]] & (s[e[:, 0]] == s[e[:, 1]])
    n = mesh.n_vertices
    A = sp.coo_matrix((np.ones(same.sum()), (e[same, 0], e[same, 1])), shape=(n, n))
    _, lab = connected_components(A, directed=False)
    first: dict = {}
    for v in np.flatnonzero(nz):
        first.setdefault(int(lab[v]), int(v))
    order = sorted(first, key=first.get)
    remap = {l: i for i, l in enumerate(order)}
    dom = np.array([remap[int(l)] if nz[v] else -1 for v, l in enumerate(lab)], dtype=int)
    signs = np.array([1 if s[first[l]] else -1 for l in order], dtype=int)
    verts = [np.flatnonzero(dom == i) for i in range(len(order))]
    return dom, signs, verts


def nodal_graph(mesh: SurfaceMesh, f, tol: float | None = None) -> NodalGraph:
    """Nodal polylines, branch points and nodal domains of ``f``.

    ``tol`` defaults to :func:`zero_tolerance`; a function whose sup norm is
    below it raises :class:`NodalError` ("identically zero").
    """
    fp, tol = _perturbed(mesh, f, tol)
    segs = _segments(mesh, fp)
    lines = _chain(segs)
    polylines, poly_edges, closed = [], [], []
    ends = []
    bset = {_edge_key(int(a), int(b)) for a, b in mesh.boundary_edges}
    for keys, is_closed in lines:
        pts = np.array([_crossing_point(mesh, fp, k) for k in keys])
        polylines.append(pts)
        poly_edges.append(np.array(keys, dtype=int))
        closed.append(bool(is_closed))
        if not is_closed:
            for k, p in ((keys[0], pts[0]), (keys[-1], pts[-1])):
                if k in bset:
                    ends.append(p)
    # branch candidates: >= 4 sign changes around an interior vertex (>= 3 branches)
    cand = np.flatnonzero(_link_sign_changes(mesh, fp) >= 4)
    branch = np.zeros((0, 2))
    if len(cand):
        e = mesh.edges
        keep = np.isin(e[:, 0], cand) & np.isin(e[:, 1], cand)
        n = mesh.n_vertices
        A = sp.coo_matrix((np.ones(keep.sum()), (e[keep, 0], e[keep, 1])), shape=(n, n))
        _, lab = connected_components(A, directed=False)
        groups = {}
        for v in cand:
            groups.setdefault(int(lab[v]), []).append(int(v))
        branch = np.array([mesh.params[g].mean(axis=0) for _, g in sorted(groups.items())])
    dom, signs, verts = _sign_components(mesh, np.asarray(f, dtype=float), tol)
    return NodalGraph(
        f=fp,
        tolerance=tol,
        polylines=polylines,
        polyline_edges=poly_edges,
        closed=closed,
        branch_points=branch.reshape(-1, 2),
        endpoints=np.array(ends).reshape(-1, 2),
        domain_of_vertex=dom,
        domain_signs=signs,
        domain_vertices=verts,
    )


def boundary_sign_changes(mesh: SurfaceMesh, f, tol: float | None = None) -> list[int]:
    """Sign changes of ``f`` along each boundary component (tangential zeros not counted)."""
    fp, _ = _perturbed(mesh, f, tol)
    s = fp > 0
    out = []
    labels = mesh.boundary_edge_labels
    for lab in np.unique(labels):
        be = mesh.boundary_edges[labels == lab]
        out.append(int(np.sum(s[be[:, 0]] != s[be[:, 1]])))
    return out


@dataclass(frozen=True, eq=False)
class BalancedCutoff:
    """f on the first domain, alpha f on the second, zero elsewhere."""

    values: np.ndarray
    alpha: float
    integral: float
    abs_integral: float
    index_value: float | None


def balanced_cutoff(
    graph: NodalGraph,
    domains: tuple[int, int],
    mass,
    ops: AssembledOperators | None = None,
) -> BalancedCutoff:
    """Combine two nodal domains into a mean-zero test function.

    ``mass`` is the mass matrix (or the operators, whose M is used).  The
    integrals are those of the masked vertex functions, so the result has
    zero mean up to rounding.  With ``ops`` the index form of the result is
    returned too.
    """
    M = mass.M if isinstance(mass, AssembledOperators) else mass
    i, j = (int(d) for d in domains)
    if i == j or not (0 <= i < graph.n_domains and 0 <= j < graph.n_domains):
        raise NodalError("need two distinct nodal-domain ids")
    f = graph.f
    f1 = np.where(graph.domain_of_vertex == i, f, 0.0)
    f2 = np.where(graph.domain_of_vertex == j, f, 0.0)
    one = np.ones(len(f))
    m = M @ one
    i1, i2 = float(m @ f1), float(m @ f2)
    if abs(i2) <= 1e-12 * float(m @ np.abs(f2)) or i2 == 0.0:
        raise NodalError("the second domain has zero integral; alpha is undefined")
    alpha = -i1 / i2
    ft = f1 + alpha * f2
    val = index_form(ops, ft, ft) if ops is not None else None
    return BalancedCutoff(
        values=ft,
        alpha=alpha,
        integral=float(m @ ft),
        abs_integral=float(m @ np.abs(ft)),
        index_value=val,
    )


def export_graph_json(graph: NodalGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def export_polylines_csv(graph: NodalGraph, path) -> None:
    """Rows (polyline, point, u, v)."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["polyline", "point", "u", "v"])
        for k, pts in enumerate(graph.polylines):
            for j, p in enumerate(pts):
                w.writerow([k, j, repr(float(p[0])), repr(float(p[1]))])
