"""Spectra of the index form and stability verdicts.

The generalized problem (K - Q + B) v = lambda M v is solved by LOBPCG with
a sparse LU preconditioner.  On the volume-preserving subspace (mean-zero
functions) the constant is removed by M-orthogonal projection, which LOBPCG
supports directly through its constraint block.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from curvatura.discretize.assembly import AssembledOperators


class SolverError(RuntimeError):
    """Eigen-iteration did not converge."""


class IndefiniteError(ValueError):
    """Stability verdicts need P_1 positive definite on the whole mesh."""


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # (n, k), M-orthonormal columns
    residuals: np.ndarray
    constrained: bool
    iterations: int

    def __len__(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class StabilityVerdict:
    lambda_min_constrained: float
    lambda_min_full: float
    stable: bool
    strongly_stable: bool
    tolerance: float


def _start_block(ops: AssembledOperators, k: int) -> np.ndarray:
    # deterministic: constant first, then monomials in the parameter coordinates
    u, v = ops.mesh.params[:, 0], ops.mesh.params[:, 1]
    s = ops.mesh.patch.domain.scale
    u, v = u / s, v / s
    cols = [np.ones_like(u), u, v, u * u, u * v, v * v, u**3, u * u * v, u * v * v, v**3]
    deg = 4
    while len(cols) < k:
        cols.extend(u ** (deg - j) * v**j for j in range(deg + 1))
        deg += 1
    return np.stack(cols[:k], axis=1)


def _projector(ops: AssembledOperators):
    one = np.ones(ops.n)
    m1 = ops.M @ one
    mass = float(one @ m1)
    return one, m1, mass


def solve_spectrum(
    ops: AssembledOperators,
    k: int = 4,
    constrained: bool = False,
    tol: float = 1e-9,
    maxiter: int = 400,
) -> Spectrum:
    """k smallest eigenpairs of (K - Q + B) v = lambda M v.

    With ``constrained=True`` the search space is the M-orthogonal
    complement of the constants (functions with zero mean).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = ops.n
    if k + 1 >= n // 3:
        raise ValueError("too many eigenpairs requested for this mesh")
    A = ops.index_matrix
    M = ops.M
    kk = k + 2  # a small guard block improves convergence of the last pair
    pre_mat = (ops.K + M).tocsc() if ops.p1_definite or ops.config.tensor == "identity" else (abs(A) + M).tocsc()
    lu = spla.splu(pre_mat)
    X0 = _start_block(ops, kk + (1 if constrained else 0))
    if constrained:
        # deflation: P^T A P on the mean-zero space, the constant pushed to
        # the top of the spectrum by a rank-one shift
        one, m1, mass = _projector(ops)
        shift = 10.0 * float(np.max(np.abs(A.diagonal()) / M.diagonal()))

        def proj(x):
            return x - np.outer(one, m1 @ x) / mass if x.ndim == 2 else x - one * (m1 @ x) / mass

        def proj_t(y):
            return y - np.outer(m1, one @ y) / mass if y.ndim == 2 else y - m1 * (one @ y) / mass

        def op(x):
            x2 = x if x.ndim == 2 else x[:, None]
            y = proj_t(A @ proj(x2)) + shift * np.outer(m1, m1 @ x2) / mass
            return y if x.ndim == 2 else y[:, 0]

        def pre(x):
            return proj(lu.solve(x))

        A_op = spla.LinearOperator((n, n), matvec=op, matmat=op, dtype=float)
        precond = spla.LinearOperator((n, n), matvec=pre, matmat=pre, dtype=float)
        X0 = proj(X0[:, 1:])
    else:
        A_op = A
        precond = spla.LinearOperator((n, n), matvec=lu.solve, matmat=lu.solve, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        lam, V, hist = spla.lobpcg(
            A_op,
            X0,
            B=M,
            M=precond,
            tol=tol,
            maxiter=maxiter,
            largest=False,
            retResidualNormsHistory=True,
        )
    order = np.argsort(lam)[:k]
    V = V[:, order]
    # Rayleigh quotients and M-normalisation
    mv = M @ V
    nrm = np.sqrt(np.einsum("ij,ij->j", V, mv))
    V = V / nrm
    mv = mv / nrm
    av = A @ V
    lam = np.einsum("ij,ij->j", V, av)
    R = av - mv * lam
    if constrained:
        one, m1, mass = _projector(ops)
        R = R - np.outer(m1, one @ R) / mass
    res = np.linalg.norm(R, axis=0) / np.linalg.norm(V, axis=0)
    scale = max(1.0, float(np.max(np.abs(lam))))
    if not np.all(np.isfinite(res)) or np.any(res > 1e-5 * scale):
        raise SolverError(
            f"eigen-iteration did not converge in {maxiter} iterations (max residual {np.max(res):.3g})"
        )
    # fix signs deterministically: largest-magnitude entry positive
    idx = np.argmax(np.abs(V), axis=0)
    V = V * np.sign(V[idx, np.arange(V.shape[1])])
    return Spectrum(
        eigenvalues=lam,
        eigenfunctions=V,
        residuals=res,
        constrained=constrained,
        iterations=len(hist),
    )


def mesh_h2_scale(ops: AssembledOperators) -> float:
    """Squared mesh size relative to the surface area (dimensionless)."""
    area = float(ops.M.sum())
    return ops.mesh.max_edge_length**2 / area


def default_tolerance(ops: AssembledOperators, full: Spectrum) -> float:
    lam = np.abs(full.eigenvalues[:2])
    return 1e-3 * max(float(np.max(lam)), mesh_h2_scale(ops))


def stability_verdict(ops: AssembledOperators, tol: float | None = None, k: int = 4) -> StabilityVerdict:
    """Stable iff the constrained minimum is >= -tol; strongly stable iff the full one is."""
    if not ops.p1_definite:
        raise IndefiniteError("P1 is not positive definite on the mesh; no stability verdict")
    full = solve_spectrum(ops, k=max(k, 2), constrained=False)
    cons = solve_spectrum(ops, k=k, constrained=True)
    if tol is None:
        tol = default_tolerance(ops, full)
    lc = float(cons.eigenvalues[0])
    lf = float(full.eigenvalues[0])
    strong = lf >= -tol
    return StabilityVerdict(
        lambda_min_constrained=lc,
        lambda_min_full=lf,
        stable=bool(lc >= -tol or strong),
        strongly_stable=bool(strong),
        tolerance=float(tol),
    )


def t1_apply(ops: AssembledOperators, f) -> np.ndarray:
    """Discrete T_1 f = -L_1 f - q f at vertices (lumped mass inverse)."""
    f = np.asarray(f, dtype=float)
    lumped = np.asarray(ops.M.sum(axis=1)).ravel()
    return (ops.K @ f - ops.Q @ f) / lumped


def conormal_derivative(ops: AssembledOperators, f) -> np.ndarray:
    """df/dnu at boundary vertices from a least-squares quadratic fit.

    The fit uses the vertex and its two-ring in the parameter plane; the
    conormal is taken in parameter coordinates from the boundary jets.
    """
    mesh = ops.mesh
    f = np.asarray(f, dtype=float)
    nbrs = _two_rings(mesh)
    out = np.full(len(mesh.boundary_vertices), np.nan)
    nu = np.asarray(mesh.bjets.conormal_coords)
    for k, v in enumerate(mesh.boundary_vertices):
        if len(mesh.corner_mask) and mesh.corner_mask[k]:
            continue
        ring = nbrs[v]
        d = mesh.params[ring] - mesh.params[v]
        sc = np.max(np.abs(d))
        ds = d / sc
        V = np.stack([np.ones(len(ring)), ds[:, 0], ds[:, 1], ds[:, 0] ** 2, ds[:, 0] * ds[:, 1], ds[:, 1] ** 2], 1)
        coef, *_ = np.linalg.lstsq(V, f[ring], rcond=None)
        out[k] = (coef[1] * nu[k, 0] + coef[2] * nu[k, 1]) / sc
    return out


def _two_rings(mesh):
    cache = getattr(mesh, "_two_ring_cache", None)
    if cache is not None:
        return cache
    n = mesh.n_vertices
    e = mesh.edges
    adj = sp.coo_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(n, n))
    adj = (adj + sp.identity(n)).tocsr()
    two = (adj @ adj).tocsr()
    rings = {int(v): np.sort(two.indices[two.indptr[v] : two.indptr[v + 1]]) for v in mesh.boundary_vertices}
    object.__setattr__(mesh, "_two_ring_cache", rings)
    return rings


def jacobi_residual(ops: AssembledOperators, f) -> tuple[float, float]:
    """(variance of T_1 f over interior vertices, max |df/dnu + alpha f| on the boundary)."""
    f = np.asarray(f, dtype=float)
    if not np.any(f):
        return 0.0, 0.0
    mesh = ops.mesh
    interior = mesh.interior_mask
    # drop the ring next to the boundary, where the lumped operator is one-sided
    near = np.zeros(mesh.n_vertices, bool)
    be = mesh.edges
    bmask = ~interior
    near[be[bmask[be[:, 0]], 1]] = True
    near[be[bmask[be[:, 1]], 0]] = True
    sel = interior & ~near
    t1 = t1_apply(ops, f)[sel]
    dev = float(np.var(t1))
    dn = conormal_derivative(ops, f)
    fb = f[mesh.boundary_vertices]
    ok = np.isfinite(dn)
    bres = float(np.max(np.abs(dn[ok] + ops.alpha_values[ok] * fb[ok]))) if np.any(ok) else 0.0
    return dev, bres


def export_spectrum_csv(spec: Spectrum, path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "lambda", "residual"])
        for i, (lam, r) in enumerate(zip(spec.eigenvalues, spec.residuals)):
            w.writerow([i, repr(float(lam)), repr(float(r))])


def rayleigh_gap(ops: AssembledOperators, spec: Spectrum) -> np.ndarray:
    """|I(v, v) - lambda v^T M v| per pair (Rayleigh consistency)."""
    from curvatura.discretize.assembly import index_form

    V = spec.eigenfunctions
    return np.array(
        [
            abs(index_form(ops, V[:, j], V[:, j]) - spec.eigenvalues[j] * float(V[:, j] @ (ops.M @ V[:, j])))
            for j in range(V.shape[1])
        ]
    )


__all__ = [
    "IndefiniteError",
    "SolverError",
    "Spectrum",
    "StabilityVerdict",
    "conormal_derivative",
    "default_tolerance",
    "export_spectrum_csv",
    "jacobi_residual",
    "mesh_h2_scale",
    "rayleigh_gap",
    "solve_spectrum",
    "stability_verdict",
    "t1_apply",
]

