"""Pointwise second-order geometry of parametric patches.

All three space-form models are handled by one set of jax kernels working
in R^4: Euclidean data are padded with a zero fourth coordinate and the
model enters only through a small runtime vector (curvature, signature,
orientation), so each kernel is compiled once per process rather than once
per patch.  The kernels are traceable and can be differentiated again
(normal derivatives, gradient of H2, variations of the immersion).
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import jax
import jax.numpy as jnp
import numpy as np

from curvatura.spaceform import SpaceForm
from curvatura.surface.patch import ParametricPatch, PatchError, batched_jit, derivative_stack

_ROT = jnp.array([[0.0, -1.0], [1.0, 0.0]])
_E4 = jnp.array([0.0, 0.0, 0.0, 1.0])


def geometry_vector(sf: SpaceForm, sign: float = 1.0) -> np.ndarray:
    """Runtime description of the model: (c, signature[4], orientation, flat)."""
    sig = list(sf.signature) + [1] * (4 - sf.model_dim)
    return np.array([sf.c, *sig, float(sign), 1.0 if sf.c == 0 else 0.0])


def pad_ambient(sf: SpaceForm, arr, axis: int = 0, xp=jnp):
    """Append a zero fourth ambient coordinate to Euclidean data."""
    if sf.model_dim == 4:
        return arr
    shape = list(arr.shape)
    shape[axis] = 1
    return xp.concatenate([arr, xp.zeros(shape)], axis=axis)


def _unpack(geo):
    return geo[0], geo[1:5], geo[5], geo[6]


def _ip(sig, a, b):
    return jnp.sum(sig * a * b)


def _det2(m):
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def _inv2(m):
    # closed form; jnp.linalg under vmap/jvp traces a much larger LU graph
    return jnp.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / _det2(m)


def _det3m(m):
    return (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )


def _cross4(sig, a, b, c):
    rows = []
    for i in range(4):
        sel = jnp.array([j for j in range(4) if j != i])
        m = jnp.stack([a[sel], b[sel], c[sel]])
        rows.append(((-1) ** (i + 3)) * _det3m(m))
    return sig * jnp.stack(rows)


def normal_kernel(geo, X, D1):
    """Unit normal from the position and first partials (padded to R^4)."""
    _, sig, sign, flat = _unpack(geo)
    ref = flat * _E4 + (1.0 - flat) * X
    # cross(e4, a, b) = -(a x b, 0), hence the (1 - 2 flat) factor
    N = (1.0 - 2.0 * flat) * _cross4(sig, ref, D1[:, 0], D1[:, 1])
    return sign * N / jnp.sqrt(_ip(sig, N, N))


def jet_kernel(geo, X, D1, D2, D3=None) -> dict:
    """Second-order data at one point from the (padded) partials of phi."""
    _, sig, _, _ = _unpack(geo)
    Xu, Xv = D1[:, 0], D1[:, 1]
    eta = normal_kernel(geo, X, D1)
    E, F, G = _ip(sig, Xu, Xu), _ip(sig, Xu, Xv), _ip(sig, Xv, Xv)
    g = jnp.array([[E, F], [F, G]])
    h = jnp.einsum("aij,a->ij", D2, sig * eta)
    h = 0.5 * (h + h.T)
    detg = E * G - F * F
    ginv = jnp.array([[G, -F], [-F, E]]) / detg
    A = ginv @ h
    sE = jnp.sqrt(E)
    sd = jnp.sqrt(detg)
    frame = jnp.array([[1.0 / sE, -F / (sE * sd)], [0.0, sE / sd]])
    S = frame.T @ h @ frame
    S = 0.5 * (S + S.T)
    H1 = 0.5 * (S[0, 0] + S[1, 1])
    H2 = S[0, 0] * S[1, 1] - S[0, 1] ** 2
    disc = jnp.sqrt(jnp.maximum(0.25 * (S[0, 0] - S[1, 1]) ** 2 + S[0, 1] ** 2, 0.0))
    k1 = H1 + disc
    k2 = H1 - disc
    P1 = 2.0 * H1 * jnp.eye(2) - S
    ang = 0.5 * jnp.arctan2(2.0 * S[0, 1], S[0, 0] - S[1, 1])
    e1 = jnp.array([jnp.cos(ang), jnp.sin(ang)])
    e2 = jnp.array([-jnp.sin(ang), jnp.cos(ang)])
    out = dict(
        position=X,
        normal=eta,
        tangents=D1,
        metric=g,
        second_fundamental=h,
        shape=A,
        shape_orthonormal=S,
        frame=frame,
        kappa1=k1,
        kappa2=k2,
        H1=H1,
        H2=H2,
        P1=P1,
        umbilicity_defect=k1 - k2,
        principal_dir1=frame @ e1,
        principal_dir2=frame @ e2,
        area_density=sd,
    )
    if D3 is not None:
        out["K_intrinsic"] = _brioschi(sig, D1, D2, D3, E, F, G)
    return out


def _brioschi(sig, D1, D2, D3, E, F, G):
    Xu, Xv = D1[:, 0], D1[:, 1]
    Xuu, Xuv, Xvv = D2[:, 0, 0], D2[:, 0, 1], D2[:, 1, 1]
    Xuuv, Xuvv = D3[:, 0, 0, 1], D3[:, 0, 1, 1]

    def ip(a, b):
        return _ip(sig, a, b)

    Eu, Ev = 2 * ip(Xuu, Xu), 2 * ip(Xuv, Xu)
    Gu, Gv = 2 * ip(Xuv, Xv), 2 * ip(Xvv, Xv)
    Fu = ip(Xuu, Xv) + ip(Xu, Xuv)
    Fv = ip(Xuv, Xv) + ip(Xu, Xvv)
    Evv = 2 * (ip(Xuvv, Xu) + ip(Xuv, Xuv))
    Guu = 2 * (ip(Xuuv, Xv) + ip(Xuv, Xuv))
    Fuv = ip(Xuuv, Xv) + ip(Xuu, Xvv) + ip(Xuv, Xuv) + ip(Xu, Xuvv)
    m1 = jnp.array(
        [
            [-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev],
            [Fv - 0.5 * Gu, E, F],
            [0.5 * Gv, F, G],
        ]
    )
    m2 = jnp.array([[0.0, 0.5 * Ev, 0.5 * Gu], [0.5 * Ev, E, F], [0.5 * Gu, F, G]])
    return (_det3m(m1) - _det3m(m2)) / (E * G - F * F) ** 2


def boundary_kernel(geo, X, D1, D2, dp, ddp) -> dict:
    """Frame data along a boundary curve p(t) of the domain (domain on the left)."""
    _, sig, _, _ = _unpack(geo)
    jet = jet_kernel(geo, X, D1, D2)
    g, h, A = jet["metric"], jet["second_fundamental"], jet["shape"]
    ginv = _inv2(g)
    gam1 = D1 @ dp
    gam2 = jnp.einsum("aij,i,j->a", D2, dp, dp) + D1 @ ddp
    speed = jnp.sqrt(dp @ g @ dp)
    left = jnp.sqrt(_det2(g)) * ginv @ (_ROT @ dp) / speed
    out_c = -left
    kappa_g = _ip(sig, gam2, D1 @ left) / speed**2
    p1nu = 2.0 * jet["H1"] * out_c - A @ out_c
    return dict(
        position=X,
        normal=jet["normal"],
        tangent=gam1 / speed,
        conormal=D1 @ out_c,
        conormal_coords=out_c,
        tangent_coords=dp / speed,
        kappa_g=kappa_g,
        II_nu_nu=out_c @ h @ out_c,
        II_nu_T=out_c @ h @ dp / speed,
        p1_nu_norm=jnp.sqrt(p1nu @ g @ p1nu),
        p1_nu_vector=D1 @ p1nu,
        H1=jet["H1"],
        H2=jet["H2"],
        speed=speed,
        metric=g,
    )


def l1_from_partials(geo, jet: dict, D1, D2, J, Hs):
    """tr(P_1 Hess F) from coordinate partials J (m,2) and Hs (m,2,2) of F."""
    _, sig, _, _ = _unpack(geo)
    g, h = jet["metric"], jet["second_fundamental"]
    ginv = _inv2(g)
    W = ginv @ (2.0 * jet["H1"] * g - h) @ ginv
    gam_low = jnp.einsum("aij,ak->kij", D2 * sig[:, None, None], D1)
    gamma = jnp.einsum("lk,kij->lij", ginv, gam_low)
    hess = Hs - jnp.einsum("kij,mk->mij", gamma, J)
    return jnp.einsum("ij,mij->m", W, hess)


def lemma_kernel(geo, X, D1, D2, D3):
    """Max-abs residuals of the L_1 identities for phi and eta at one point."""
    c, sig, _, _ = _unpack(geo)
    jet = jet_kernel(geo, X, D1, D2)
    S, P = jet["shape_orthonormal"], jet["P1"]
    eta, H1, H2 = jet["normal"], jet["H1"], jet["H2"]
    ginv = _inv2(jet["metric"])

    # eta and H2 along the cubic Taylor model of phi: exact to the orders
    # needed here and far cheaper to trace than phi itself
    def model(d):
        Pd = X + D1 @ d + 0.5 * D2 @ d @ d + (D3 @ d @ d @ d) / 6.0
        DP = D1 + D2 @ d + 0.5 * (D3 @ d) @ d
        DDP = D2 + D3 @ d
        return Pd, DP, DDP

    def eta_model(d):
        Pd, DP, _ = model(d)
        return normal_kernel(geo, Pd, DP)

    def h2_model(d):
        Pd, DP, DDP = model(d)
        nrm = normal_kernel(geo, Pd, DP)
        g = jnp.einsum("aj,ak->jk", DP * sig[:, None], DP)
        h = jnp.einsum("ajk,a->jk", DDP, nrm * sig)
        return _det2(h) / _det2(g)

    zero = jnp.zeros(2)
    J_eta = jax.jacfwd(eta_model)(zero)
    H_eta = jax.jacfwd(jax.jacfwd(eta_model))(zero)
    grad_h2 = D1 @ (ginv @ jax.grad(h2_model)(zero))
    l1_phi = l1_from_partials(geo, jet, D1, D2, D1, D2)
    l1_eta = l1_from_partials(geo, jet, D1, D2, J_eta, H_eta)
    r_phi = l1_phi - (2 * H2 * eta - 2 * c * H1 * X)
    r_eta = l1_eta - (-jnp.trace(P @ S @ S) * eta + 2 * c * H2 * X - grad_h2)
    return jnp.max(jnp.abs(r_phi)), jnp.max(jnp.abs(r_eta))


_JETS = batched_jit(lambda geo, X, D1, D2: jet_kernel(geo, X, D1, D2))
_JETS3 = batched_jit(lambda geo, X, D1, D2, D3: jet_kernel(geo, X, D1, D2, D3))
_BOUNDARY = batched_jit(boundary_kernel)
_LEMMA = batched_jit(lemma_kernel)


@dataclass(frozen=True)
class SurfaceJet:
    """Second-order data at one point (or a batch: leading axis = points)."""

    position: np.ndarray
    normal: np.ndarray
    tangents: np.ndarray
    metric: np.ndarray
    second_fundamental: np.ndarray
    shape: np.ndarray
    shape_orthonormal: np.ndarray
    frame: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    P1: np.ndarray
    umbilicity_defect: np.ndarray
    principal_dir1: np.ndarray
    principal_dir2: np.ndarray
    area_density: np.ndarray

    def __getitem__(self, idx) -> "SurfaceJet":
        return SurfaceJet(**{f.name: getattr(self, f.name)[idx] for f in fields(self)})

    def __len__(self) -> int:
        return int(np.shape(self.H1)[0]) if np.ndim(self.H1) else 1


@dataclass(frozen=True)
class BoundaryJet:
    """Conormal frame data at boundary points (batched along the leading axis)."""

    param: np.ndarray
    t: np.ndarray
    label: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    conormal: np.ndarray
    conormal_coords: np.ndarray
    tangent_coords: np.ndarray
    kappa_g: np.ndarray
    II_nu_nu: np.ndarray
    II_nu_T: np.ndarray
    p1_nu_norm: np.ndarray
    p1_nu_vector: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    speed: np.ndarray
    metric: np.ndarray

    def __getitem__(self, idx) -> "BoundaryJet":
        return BoundaryJet(**{f.name: getattr(self, f.name)[idx] for f in fields(self)})

    def __len__(self) -> int:
        return int(np.shape(self.kappa_g)[0])


_JET_FIELDS = [f.name for f in fields(SurfaceJet)]
_AMBIENT_FIELDS = {"position", "normal", "tangents", "tangent", "conormal", "p1_nu_vector"}


def _geo_rows(patch: ParametricPatch, n: int) -> np.ndarray:
    return np.tile(geometry_vector(patch.sf, patch.orientation_sign), (n, 1))


def _padded_derivatives(patch: ParametricPatch, pts, order: int):
    return [pad_ambient(patch.sf, d, axis=1, xp=np) for d in patch.derivatives(pts, order=order)]


def _trim(patch: ParametricPatch, raw: dict) -> dict:
    D = patch.sf.model_dim
    return {k: (v[:, :D] if k in _AMBIENT_FIELDS else v) for k, v in raw.items()}


def _raw_jets(patch: ParametricPatch, points, intrinsic=False) -> dict:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    derivs = _padded_derivatives(patch, pts, 3 if intrinsic else 2)
    kernel = _JETS3 if intrinsic else _JETS
    raw = {k: np.asarray(v) for k, v in kernel(_geo_rows(patch, len(pts)), *derivs).items()}
    bad = ~np.isfinite(raw["area_density"]) | (raw["area_density"] <= 1e-14 * patch.domain.scale**2)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise PatchError(f"degenerate metric (not an immersion) at parameter point {pts[i].tolist()}")
    return _trim(patch, raw)


def evaluate_jets(patch: ParametricPatch, points) -> SurfaceJet:
    raw = _raw_jets(patch, points)
    return SurfaceJet(**{k: raw[k] for k in _JET_FIELDS})


def evaluate_jet(patch: ParametricPatch, p) -> SurfaceJet:
    return evaluate_jets(patch, np.asarray(p, dtype=float)[None, :])[0]


def intrinsic_curvature(patch: ParametricPatch, points) -> np.ndarray:
    """Gauss curvature from the induced metric alone (Brioschi formula)."""
    return _raw_jets(patch, points, intrinsic=True)["K_intrinsic"]


def gauss_relation_residual(patch: ParametricPatch, points) -> np.ndarray:
    """|K_intrinsic - H2 - c| per point."""
    raw = _raw_jets(patch, points, intrinsic=True)
    return np.abs(raw["K_intrinsic"] - raw["H2"] - patch.sf.c)


def verify_newton_identities(jet: SurfaceJet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """|tr P1 - 2H1|, |tr(P1 A) - 2H2|, |tr(P1 A^2) - 2 H1 H2|."""
    P, S = np.asarray(jet.P1), np.asarray(jet.shape_orthonormal)
    H1, H2 = np.asarray(jet.H1), np.asarray(jet.H2)

    def tr(M):
        return np.trace(M, axis1=-2, axis2=-1)

    PA = P @ S
    return (
        np.abs(tr(P) - 2 * H1),
        np.abs(tr(PA) - 2 * H2),
        np.abs(tr(PA @ S) - 2 * H1 * H2),
    )


def sample_points(patch: ParametricPatch, n: int = 12) -> np.ndarray:
    pts, _ = patch.domain.quadrature(n, 2 * n)
    return pts


def orient_for_positivity(patch: ParametricPatch, n: int = 12) -> ParametricPatch:
    """Choose the normal so that kappa_2 > 0 (hence P_1 > 0) on a sample grid."""
    pts = sample_points(patch, n)
    jet = evaluate_jets(patch, pts)
    if np.any(jet.H2 <= 0):
        raise PatchError("H2 <= 0 somewhere on the sample grid; no orientation makes P1 positive definite")
    if np.all(jet.kappa2 > 0):
        return patch
    if np.all(jet.kappa1 < 0):
        return patch.flipped()
    raise PatchError("principal curvatures change sign on the sample grid")


def evaluate_boundary_jets(patch: ParametricPatch, curve_index: int, t) -> BoundaryJet:
    """Boundary frame data at parameters ``t`` of the domain's boundary curve."""
    curve = patch.domain.boundary_curves()[curve_index]
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not curve.closed:
        span = curve.t1 - curve.t0
        if np.any(np.minimum(np.abs(t - curve.t0), np.abs(t - curve.t1)) < 1e-9 * span):
            raise PatchError("boundary tangent undefined at a corner of the parameter domain")
    key = ("curve", curve_index)
    curve_fn = patch._cache.get(key)
    if curve_fn is None:
        curve_fn = batched_jit(derivative_stack(lambda s: curve.point(s, jnp), 2))
        patch._cache[key] = curve_fn
    p, dp, ddp = curve_fn(t)
    derivs = _padded_derivatives(patch, p, 2)
    raw = {k: np.asarray(v) for k, v in _BOUNDARY(_geo_rows(patch, len(t)), *derivs, dp, ddp).items()}
    raw = _trim(patch, raw)
    return BoundaryJet(param=p, t=t, label=np.full(t.shape, curve.label), **raw)


def evaluate_boundary_jet(patch: ParametricPatch, curve_index: int, t: float) -> BoundaryJet:
    return evaluate_boundary_jets(patch, curve_index, [t])[0]


def lemma_l1_residuals(patch: ParametricPatch, points) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate-wise residuals of the L_1 identities for phi and eta.

    Returns the max-abs residuals of ``L1 phi - (2 H2 eta - 2 c H1 phi)`` and
    ``L1 eta - (-tr(P1 A^2) eta + 2 c H2 phi - grad H2)`` per point.  The
    derivatives of eta and H2 come from the third-order jet of phi.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    derivs = _padded_derivatives(patch, pts, 3)
    a, b = _LEMMA(_geo_rows(patch, len(pts)), *derivs)
    return np.asarray(a), np.asarray(b)
