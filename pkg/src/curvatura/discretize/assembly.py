"""Piecewise-linear finite elements for the index form.

On each triangle of the parameter plane the bilinear forms are

    K:  int <P_1 grad u, grad v> dmu = int du . W dv sqrt(det g) du dv,
        W = g^-1 (2 H_1 g - h) g^-1,
    M:  int u v dmu,
    Q:  int q u v dmu,   q = 2 H_1 (H_2 + c),
    B:  int_{boundary} |P_1 nu| alpha u v ds,

with the vertex values of W sqrt(det g), sqrt(det g) and q sqrt(det g)
interpolated linearly and integrated by a fixed triangle rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from curvatura.discretize.mesh import SurfaceMesh
from curvatura.spaceform import BallGeometry, GeometryError, SpaceForm

# barycentric rules (points, weights summing to 1)
_RULES = {
    2: (np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]), np.full(3, 1.0 / 3.0)),
    4: (
        np.array(
            [
                [0.108103018168070, 0.445948490915965, 0.445948490915965],
                [0.445948490915965, 0.108103018168070, 0.445948490915965],
                [0.445948490915965, 0.445948490915965, 0.108103018168070],
                [0.816847572980459, 0.091576213509771, 0.091576213509771],
                [0.091576213509771, 0.816847572980459, 0.091576213509771],
                [0.091576213509771, 0.091576213509771, 0.816847572980459],
            ]
        ),
        np.array([0.223381589678011] * 3 + [0.109951743655322] * 3),
    ),
}
_GAUSS2 = (np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)]), np.array([0.5, 0.5]))


class AssemblyError(ValueError):
    """Assembly refused (indefinite Newton tensor where definiteness is required)."""


@dataclass(frozen=True)
class SlabGeometry:
    """Support made of the two planes x3 = lower and x3 = upper in R^3."""

    lower: float = 0.0
    upper: float = 1.0
    boundary_second_fundamental: float = 0.0

    def outward_normal(self, x):
        x = np.asarray(x, dtype=float)
        mid = 0.5 * (self.lower + self.upper)
        n = np.zeros_like(x)
        n[..., 2] = np.sign(x[..., 2] - mid)
        return n


@dataclass(frozen=True)
class AssemblyConfig:
    """Contact angle, support geometry and quadrature choices.

    ``tensor="identity"`` replaces P_1 by the identity (and |P_1 nu| by 1)
    for Laplace-Beltrami audits; ``alpha_override`` fixes the Robin
    coefficient; ``potential_scale`` multiplies q (sanity counter-tests).
    """

    theta: float = math.pi / 2
    support: BallGeometry | SlabGeometry | None = None
    quadrature_order: int = 2
    tensor: str = "newton"
    alpha_override: float | None = None
    potential_scale: float = 1.0
    require_definite: bool = False

    def __post_init__(self):
        if not 0.0 < self.theta < math.pi:
            raise ValueError("contact angle must lie in (0, pi)")
        if self.quadrature_order not in _RULES:
            raise ValueError(f"quadrature order must be one of {sorted(_RULES)}")
        if self.tensor not in ("newton", "identity"):
            raise ValueError("tensor must be 'newton' or 'identity'")

    @property
    def free_boundary(self) -> bool:
        return abs(self.theta - math.pi / 2) < 1e-14


@dataclass(frozen=True, eq=False)
class AssembledOperators:
    K: sp.csr_matrix
    M: sp.csr_matrix
    Q: sp.csr_matrix
    B: sp.csr_matrix
    alpha_values: np.ndarray
    boundary_weights: np.ndarray
    p1_definite: bool
    principal_boundary_defect: float
    mesh: SurfaceMesh
    sf: SpaceForm
    config: AssemblyConfig
    potential: np.ndarray = field(repr=False, default=None)
    notes: tuple[str, ...] = ()

    @property
    def index_matrix(self) -> sp.csr_matrix:
        return (self.K - self.Q + self.B).tocsr()

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def with_potential_scale(self, s: float) -> "AssembledOperators":
        from dataclasses import replace

        return replace(self, Q=(self.Q * s).tocsr())


def robin_coefficient(cfg: AssemblyConfig, bjet) -> float | np.ndarray:
    """alpha = csc(theta) II_dOmega(nu_bar, nu_bar) - cot(theta) II_Sigma(nu, nu)."""
    if cfg.alpha_override is not None:
        return cfg.alpha_override + 0.0 * np.asarray(bjet.II_nu_nu)
    if cfg.support is None:
        raise GeometryError("the Robin coefficient needs a support geometry (ball or slab)")
    ii_support = cfg.support.boundary_second_fundamental
    th = cfg.theta
    ii_nn = np.asarray(bjet.II_nu_nu)
    cot = 0.0 if cfg.free_boundary else math.cos(th) / math.sin(th)
    return ii_support / math.sin(th) - cot * ii_nn


def _vertex_tensors(mesh: SurfaceMesh, cfg: AssemblyConfig):
    jets = mesh.jets
    g = np.asarray(jets.metric)
    h = np.asarray(jets.second_fundamental)
    J = np.asarray(jets.area_density)
    ginv = np.linalg.inv(g)
    if cfg.tensor == "identity":
        W = ginv
    else:
        H1 = np.asarray(jets.H1)[:, None, None]
        W = ginv @ (2.0 * H1 * g - h) @ ginv
    return W * J[:, None, None], J


def assemble(mesh: SurfaceMesh, sf: SpaceForm, cfg: AssemblyConfig) -> AssembledOperators:
    """Assemble K, M, Q and B for the mesh (deterministic element order)."""
    jets = mesh.jets
    k1, k2 = np.asarray(jets.kappa1), np.asarray(jets.kappa2)
    definite = bool(np.all(k2 > 0) or np.all(k1 < 0)) and bool(np.all(np.asarray(jets.H2) > 0))
    if cfg.require_definite and cfg.tensor == "newton" and not definite:
        raise AssemblyError("P1 is not definite at every vertex")
    notes = []
    WJ, J = _vertex_tensors(mesh, cfg)
    q = 2.0 * np.asarray(jets.H1) * (np.asarray(jets.H2) + sf.c) * cfg.potential_scale
    qJ = q * J

    tri = mesh.triangles
    P = mesh.params[tri]  # (m, 3, 2)
    e1 = P[:, 1] - P[:, 0]
    e2 = P[:, 2] - P[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * np.abs(det)
    # gradients of the barycentric hat functions in parameter coordinates
    G = np.empty((len(tri), 3, 2))
    G[:, 1] = np.stack([e2[:, 1], -e2[:, 0]], axis=1) / det[:, None]
    G[:, 2] = np.stack([-e1[:, 1], e1[:, 0]], axis=1) / det[:, None]
    G[:, 0] = -G[:, 1] - G[:, 2]

    lam, wq = _RULES[cfg.quadrature_order]
    Wq = np.einsum("qv,mvij->mqij", lam, WJ[tri])  # interpolated tensor at quad points
    Wbar = np.einsum("q,mqij->mij", wq, Wq)
    Ke = area[:, None, None] * np.einsum("mai,mij,mbj->mab", G, Wbar, G)
    Jq = lam @ J[tri].T  # (nq, m)
    qq = lam @ qJ[tri].T
    mass_w = np.einsum("q,qa,qb->qab", wq, lam, lam)
    Me = area[:, None, None] * np.einsum("qab,qm->mab", mass_w, Jq)
    Qe = area[:, None, None] * np.einsum("qab,qm->mab", mass_w, qq)

    n = mesh.n_vertices
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()

    def build(vals):
        A = sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(n, n)).tocsr()
        A.sum_duplicates()
        return (0.5 * (A + A.T)).tocsr()

    K, M, Q = build(Ke), build(Me), build(Qe)

    # boundary Robin term
    bv = mesh.boundary_vertices
    nb = len(bv)
    alpha = np.zeros(nb)
    weight = np.zeros(nb)
    defect = 0.0
    if nb and mesh.bjets is not None:
        bj = mesh.bjets
        ok = ~mesh.corner_mask if len(mesh.corner_mask) else np.ones(nb, bool)
        p1nu = np.ones(nb) if cfg.tensor == "identity" else np.asarray(bj.p1_nu_norm)
        try:
            alpha = np.asarray(robin_coefficient(cfg, bj), dtype=float) * np.ones(nb)
        except GeometryError:
            if cfg.support is None and cfg.alpha_override is None:
                alpha = np.zeros(nb)
                notes.append("no support geometry: Robin term omitted (B = 0)")
            else:
                raise
        alpha = np.where(ok, alpha, 0.0)
        weight = np.where(ok, p1nu * alpha, 0.0)
        defect = float(np.nanmax(np.abs(np.asarray(bj.II_nu_T)[ok]))) if np.any(ok) else 0.0
        if cfg.tensor == "newton" and defect > 1e-6:
            notes.append(
                f"conormal is not a principal direction (max |II(nu,T)| = {defect:.3g}); "
                "|P1 nu| taken as the literal vector norm"
            )
    row = mesh.boundary_row()
    be = mesh.boundary_edges
    if len(be) and np.any(weight != 0):
        xa = mesh.positions[be[:, 0]]
        xb = mesh.positions[be[:, 1]]
        L = np.linalg.norm(xb - xa, axis=1)
        wa, wb = weight[row[be[:, 0]]], weight[row[be[:, 1]]]
        s, ws = _GAUSS2
        Be = np.zeros((len(be), 2, 2))
        for sk, wk in zip(s, ws):
            phi = np.array([1.0 - sk, sk])
            wv = (1.0 - sk) * wa + sk * wb
            Be += wk * (L * wv)[:, None, None] * np.outer(phi, phi)[None]
        r = np.repeat(be, 2, axis=1).ravel()
        c = np.tile(be, (1, 2)).ravel()
        B = sp.coo_matrix((Be.ravel(), (r, c)), shape=(n, n)).tocsr()
        B.sum_duplicates()
        B = (0.5 * (B + B.T)).tocsr()
    else:
        B = sp.csr_matrix((n, n))
    if not definite and cfg.tensor == "newton":
        notes.append("P1 is not definite on the mesh: stability verdicts are refused")
    return AssembledOperators(
        K=K,
        M=M,
        Q=Q,
        B=B,
        alpha_values=alpha,
        boundary_weights=weight,
        p1_definite=definite,
        principal_boundary_defect=defect,
        mesh=mesh,
        sf=sf,
        config=cfg,
        potential=q,
        notes=tuple(notes),
    )


def weighted_mass(mesh: SurfaceMesh, values, quadrature_order: int = 2) -> sp.csr_matrix:
    """Matrix of (u, v) -> int w u v dmu for a vertex function w (interpolated linearly)."""
    w = np.asarray(values, dtype=float)
    if w.shape != (mesh.n_vertices,):
        raise ValueError(f"vertex function must have shape ({mesh.n_vertices},)")
    J = np.asarray(mesh.jets.area_density)
    tri = mesh.triangles
    P = mesh.params[tri]
    e1 = P[:, 1] - P[:, 0]
    e2 = P[:, 2] - P[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    lam, wq = _RULES[quadrature_order]
    vals = lam @ (w * J)[tri].T
    Ee = area[:, None, None] * np.einsum("qab,qm->mab", np.einsum("q,qa,qb->qab", wq, lam, lam), vals)
    n = mesh.n_vertices
    A = sp.coo_matrix(
        (Ee.ravel(), (np.repeat(tri, 3, axis=1).ravel(), np.tile(tri, (1, 3)).ravel())), shape=(n, n)
    ).tocsr()
    A.sum_duplicates()
    return (0.5 * (A + A.T)).tocsr()


def index_form(ops: AssembledOperators, f1, f2) -> float:
    """I(f1, f2) = f1^T (K - Q + B) f2."""
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    if f1.shape != (ops.n,) or f2.shape != (ops.n,):
        raise ValueError(f"vertex functions must have shape ({ops.n},)")
    return float(f1 @ (ops.K @ f2) - f1 @ (ops.Q @ f2) + f1 @ (ops.B @ f2))


def export_coo(A: sp.spmatrix, path) -> None:
    """Write a sparse matrix as text lines 'i j value'."""
    C = sp.coo_matrix(A)
    order = np.lexsort((C.col, C.row))
    with open(path, "w", encoding="ascii") as fh:
        for k in order:
            fh.write(f"{C.row[k]} {C.col[k]} {C.data[k]:.17g}\n")
