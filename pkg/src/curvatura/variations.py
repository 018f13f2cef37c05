"""Normal variations, enclosed volume and the capillary functional.

A variation moves the base patch along the geodesic exponential,

    Phi(t, p) = exp_{phi(p)}( t (f eta + D phi . tau) + t^2/2 W ),

where f is the support function, tau optional tangential coefficients and
W an optional second-order term.  The built-in admissible families choose
W so that the boundary stays on the support to second order in t and the
enclosed volume is stationary to second order, which is what the
second-variation formula requires.

All kernels act on truncated Taylor models of phi (third order), f and tau
(second order) at each sample point.  That keeps the traced graphs small
and lets every kernel compile once per process; derivatives at the sample
point are exact because only derivatives up to those orders enter.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from curvatura.discretize.assembly import AssembledOperators, AssemblyConfig, SlabGeometry, index_form
from curvatura.spaceform import BallGeometry, GeometryError, SpaceForm, cn, sn
from curvatura.surface.jets import (
    _E4,
    _det2,
    _det3m,
    _inv2,
    _ip,
    _unpack,
    boundary_kernel,
    geometry_vector,
    jet_kernel,
    l1_from_partials,
    normal_kernel,
    pad_ambient,
)
from curvatura.surface.patch import ParametricPatch, batched_jit, derivative_stack

_E3 = jnp.array([0.0, 0.0, 1.0, 0.0])


class VariationError(ValueError):
    """Invalid variation (degenerate immersion, inadmissible family, ...)."""


@dataclass(frozen=True, eq=False)
class VariationSpec:
    """A variation of ``patch`` with support function ``support(uv, params) - offset``.

    ``tangential(uv, params)`` returns coordinate coefficients of a tangent
    field (default none).  ``second_order`` holds (a_flat, a_curved, g0): the
    second-order term is a_flat f^2 phi + a_curved f^2 o_T + g0 eta, with o_T
    the tangential part of the model origin (see :func:`admissible_variation`).
    """

    patch: ParametricPatch
    support: Callable
    params: np.ndarray = field(default_factory=lambda: np.zeros(0))
    offset: float = 0.0
    tangential: Callable | None = None
    epsilon: float = 1e-2
    times: tuple = ()
    second_order: tuple = (0.0, 0.0, 0.0)
    support_geometry: BallGeometry | SlabGeometry | None = None

    def __post_init__(self):
        if not self.times:
            object.__setattr__(self, "times", tuple(np.linspace(-self.epsilon, self.epsilon, 5)))
        if not any(abs(t) < 1e-15 for t in self.times):
            object.__setattr__(self, "times", tuple(sorted((*self.times, 0.0))))

    @property
    def sf(self) -> SpaceForm:
        return self.patch.sf

    def support_values(self, points) -> np.ndarray:
        return _support_jets(self, points)[0]


@dataclass(frozen=True, eq=False)
class FunctionalTrace:
    t: np.ndarray
    F: np.ndarray
    H2: np.ndarray  # (len(t), n_samples)
    V: np.ndarray
    boundary_deviation: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "F", "V"])
            for t, F, V in zip(self.t, self.F, self.V):
                w.writerow([repr(float(t)), repr(float(F)), repr(float(V))])


@dataclass(frozen=True)
class SecondVariationAudit:
    finite_difference: float
    index_value: float
    relative_error: float
    F0: float
    volume_second_derivative: float
    boundary_deviation: float
    step: float


# ---------------------------------------------------------------------------
# polynomial support functions (a shared family so kernels compile once)

_MONOMIALS = [(i, d - i) for d in range(5) for i in range(d, -1, -1)]


def polynomial_support(uv, params):
    """sum_k params[k] u^i v^j over monomials of degree <= 4 (ordered by degree)."""
    u, v = uv[0], uv[1]
    out = 0.0 * u
    for k, (i, j) in enumerate(_MONOMIALS[: params.shape[0]]):
        out = out + params[k] * u**i * v**j
    return out


def polynomial_coefficients(terms: dict) -> np.ndarray:
    """Coefficient vector from {(i, j): value}."""
    idx = {m: k for k, m in enumerate(_MONOMIALS)}
    out = np.zeros(len(_MONOMIALS))
    for m, val in terms.items():
        if tuple(m) not in idx:
            raise ValueError(f"monomial {m} has degree above 4")
        out[idx[tuple(m)]] = val
    return out


def polynomial_variation(patch: ParametricPatch, terms: dict, **kw) -> VariationSpec:
    return VariationSpec(patch=patch, support=polynomial_support, params=polynomial_coefficients(terms), **kw)


# ---------------------------------------------------------------------------
# jax kernels on Taylor models


def _exp_factors(z):
    # cn and sn(s)/s as series in z = -c |v|^2 (exact for c = 0)
    cosine, ratio, term_c, term_s = 1.0, 1.0, 1.0, 1.0
    for k in range(1, 12):
        term_c = term_c * z / ((2 * k - 1) * (2 * k))
        term_s = term_s * z / ((2 * k) * (2 * k + 1))
        cosine = cosine + term_c
        ratio = ratio + term_s
    return cosine, ratio


def _exp4(geo, x, v):
    c, sig, _, _ = _unpack(geo)
    cosine, ratio = _exp_factors(-c * _ip(sig, v, v))
    return cosine * x + ratio * v


def _det4(a, b, cc, d):
    m = jnp.stack([a, b, cc, d])
    out = 0.0
    for i in range(4):
        sel = jnp.array([j for j in range(4) if j != i])
        out = out + ((-1) ** i) * m[0, i] * _det3m(m[1:, sel])
    return out


def _model_origin(geo):
    c, _, _, flat = _unpack(geo)
    return _E4 / jnp.sqrt(jnp.abs(c) + flat)


def _volume_reference(geo, x):
    c, _, _, flat = _unpack(geo)
    return flat * _E4 + (1.0 - flat) * jnp.sqrt(jnp.abs(c) + flat) * x


def _flow(geo, so, X, D1, D2, D3, F, T):
    """Phi(t, d) for displacement d of the parameter from the sample point."""
    c, sig, _, _ = _unpack(geo)
    F0, F1, F2 = F
    T0, T1, T2 = T
    o = _model_origin(geo)

    def phi(d):
        return X + D1 @ d + 0.5 * D2 @ d @ d + (D3 @ d @ d @ d) / 6.0

    def dphi(d):
        return D1 + D2 @ d + 0.5 * (D3 @ d) @ d

    def flow(t, d):
        x = phi(d)
        Dx = dphi(d)
        eta = normal_kernel(geo, x, Dx)
        f = F0 + F1 @ d + 0.5 * d @ F2 @ d
        tau = T0 + T1 @ d + 0.5 * (T2 @ d) @ d
        o_t = o - c * _ip(sig, o, x) * x
        W = so[0] * f * f * x + so[1] * f * f * o_t + so[2] * eta
        return _exp4(geo, x, t * (f * eta + Dx @ tau) + 0.5 * t * t * W)

    return flow


def _jets_at(geo, flow, t):
    zero = jnp.zeros(2)

    def pos(d):
        return flow(t, d)

    X = pos(zero)
    D1 = jax.jacfwd(pos)(zero)
    D2 = jax.jacfwd(jax.jacfwd(pos))(zero)
    xi = jax.jacfwd(lambda s: flow(s, zero))(t)
    return X, D1, D2, xi


def variation_kernel(geo, so, t, X, D1, D2, D3, F0, F1, F2, T0, T1, T2):
    """Interior data of Phi_t at one sample point."""
    _, sig, _, _ = _unpack(geo)
    flow = _flow(geo, so, X, D1, D2, D3, (F0, F1, F2), (T0, T1, T2))
    Xt, D1t, D2t, xi = _jets_at(geo, flow, t)
    jet = jet_kernel(geo, Xt, D1t, D2t)
    ref = _volume_reference(geo, Xt)
    return dict(
        H1=jet["H1"],
        H2=jet["H2"],
        area_density=jet["area_density"],
        support=_ip(sig, xi, jet["normal"]),
        volume_density=_det4(D1t[:, 0], D1t[:, 1], xi, ref),
        normal_volume=_det4(D1t[:, 0], D1t[:, 1], jet["normal"], ref),
        position=Xt,
    )


def boundary_variation_kernel(geo, so, supp, t, X, D1, D2, D3, F0, F1, F2, T0, T1, T2, dp, ddp):
    """Boundary integrand of the capillary functional for Phi_t at one point.

    ``supp = (is_ball, is_slab, slab_mid, cos_theta, ball_radius)``.
    """
    c, sig, _, flat = _unpack(geo)
    flow = _flow(geo, so, X, D1, D2, D3, (F0, F1, F2), (T0, T1, T2))
    Xt, D1t, D2t, xi = _jets_at(geo, flow, t)
    b = boundary_kernel(geo, Xt, D1t, D2t, dp, ddp)
    is_ball, is_slab, mid, cos_th, R = supp[0], supp[1], supp[2], supp[3], supp[4]
    o = _model_origin(geo)
    # outward normal of the support at the boundary point
    n_ball = flat * Xt + (1.0 - flat) * (-(o - c * _ip(sig, o, Xt) * Xt))
    n_ball = n_ball / jnp.sqrt(jnp.abs(_ip(sig, n_ball, n_ball)) + 1e-300)
    n_slab = jnp.sign(Xt[2] - mid) * _E3
    nbar = is_ball * n_ball + is_slab * n_slab
    nu = b["conormal"]
    nu_bar = nu - _ip(sig, nu, nbar) * nbar
    nu_bar = nu_bar / jnp.sqrt(jnp.abs(_ip(sig, nu_bar, nu_bar)) + 1e-300)
    vec = b["p1_nu_vector"] - b["p1_nu_norm"] * cos_th * nu_bar
    # distance of the boundary point from the support
    dist_flat = jnp.sqrt(_ip(sig, Xt, Xt))
    cos_d = c * _ip(sig, o, Xt)
    ball_dev = flat * (dist_flat - R) + (1.0 - flat) * (cos_d - supp[5])
    slab_dev = jnp.minimum(jnp.abs(Xt[2] - supp[6]), jnp.abs(Xt[2] - supp[7]))
    return dict(
        integrand=_ip(sig, xi, vec) * b["speed"],
        deviation=is_ball * jnp.abs(ball_dev) + is_slab * slab_dev,
        speed=b["speed"],
    )


def rhs_kernel(geo, X, D1, D2, D3, F0, F1, F2, T0):
    """L_1 f + 2 H_1 H_2 f + 2 c H_1 f + <grad H2, tau> at one point (t = 0)."""
    c, sig, _, _ = _unpack(geo)
    jet = jet_kernel(geo, X, D1, D2)
    l1f = l1_from_partials(geo, jet, D1, D2, F1[None, :], F2[None, :, :])[0]

    def h2_model(d):
        Pd = X + D1 @ d + 0.5 * D2 @ d @ d
        DP = D1 + D2 @ d + 0.5 * (D3 @ d) @ d
        DDP = D2 + D3 @ d
        nrm = normal_kernel(geo, Pd, DP)
        g = jnp.einsum("aj,ak->jk", DP * sig[:, None], DP)
        h = jnp.einsum("ajk,a->jk", DDP, nrm * sig)
        return _det2(h) / _det2(g)

    dh2 = jax.grad(h2_model)(jnp.zeros(2))
    H1, H2 = jet["H1"], jet["H2"]
    return dict(
        rhs=l1f + 2.0 * H1 * H2 * F0 + 2.0 * c * H1 * F0 + dh2 @ T0,
        L1f=l1f,
        H1=H1,
        H2=H2,
        grad_H2=_inv2(jet["metric"]) @ dh2,
    )


_VARIATION = batched_jit(variation_kernel)
_BOUNDARY_VARIATION = batched_jit(boundary_variation_kernel)
_RHS = batched_jit(rhs_kernel)


# ---------------------------------------------------------------------------
# numpy-side plumbing


@lru_cache(maxsize=None)
def _scalar_stack(fn):
    return batched_jit(lambda uv, prm: derivative_stack(lambda q: fn(q, prm), 2)(uv))


@lru_cache(maxsize=None)
def _vector_stack(fn):
    return batched_jit(lambda uv, prm: derivative_stack(lambda q: jnp.asarray(fn(q, prm)), 2)(uv))


def _rows(vec, n):
    vec = np.asarray(vec, dtype=float).ravel()
    if vec.size == 0:
        vec = np.zeros(1)
    return np.tile(vec, (n, 1))


def _support_jets(var: VariationSpec, pts):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    F0, F1, F2 = _scalar_stack(var.support)(pts, _rows(var.params, len(pts)))
    return np.asarray(F0) - var.offset, np.asarray(F1), np.asarray(F2)


def _tangential_jets(var: VariationSpec, pts):
    n = len(pts)
    if var.tangential is None:
        return np.zeros((n, 2)), np.zeros((n, 2, 2)), np.zeros((n, 2, 2, 2))
    T0, T1, T2 = _vector_stack(var.tangential)(pts, _rows(var.params, n))
    return np.asarray(T0), np.asarray(T1), np.asarray(T2)


def _inputs(var: VariationSpec, pts):
    patch = var.patch
    derivs = [pad_ambient(patch.sf, d, axis=1, xp=np) for d in patch.derivatives(pts, order=3)]
    return [*derivs, *_support_jets(var, pts), *_tangential_jets(var, pts)]


def _geo(var: VariationSpec, n: int):
    return np.tile(geometry_vector(var.sf, var.patch.orientation_sign), (n, 1))


@dataclass
class _Sampler:
    """Cached quadrature inputs for one variation."""

    var: VariationSpec
    n_radial: int = 40
    n_angular: int = 96
    n_boundary: int = 256

    def __post_init__(self):
        pts, w = self.var.patch.domain.quadrature(self.n_radial, self.n_angular)
        self.pts, self.w = np.asarray(pts), np.asarray(w)
        self.inp = _inputs(self.var, self.pts)
        self.geo = _geo(self.var, len(self.pts))
        self.so = _rows(self.var.second_order, len(self.pts))
        self._bd = None

    def interior(self, t: float) -> dict:
        tt = np.full((len(self.pts), 1), float(t))
        out = _VARIATION(self.geo, self.so, tt[:, 0], *self.inp)
        if not np.all(np.isfinite(out["H2"])) or np.any(out["area_density"] <= 0):
            raise VariationError(f"Phi_t degenerates at t = {t}")
        return out

    def boundary_inputs(self):
        if self._bd is None:
            rows = []
            for idx, curve in enumerate(self.var.patch.domain.boundary_curves()):
                if curve.closed:
                    s = curve.t0 + (curve.t1 - curve.t0) * np.arange(self.n_boundary) / self.n_boundary
                    w = np.full(self.n_boundary, (curve.t1 - curve.t0) / self.n_boundary)
                else:
                    x, w = np.polynomial.legendre.leggauss(self.n_boundary // 4)
                    s = curve.t0 + 0.5 * (curve.t1 - curve.t0) * (x + 1.0)
                    w = 0.5 * (curve.t1 - curve.t0) * w
                fn = self.var.patch._cache.get(("curve", idx))
                if fn is None:
                    fn = batched_jit(derivative_stack(lambda q, curve=curve: curve.point(q, jnp), 2))
                    self.var.patch._cache[("curve", idx)] = fn
                p, dp, ddp = (np.asarray(a) for a in fn(s))
                rows.append((p, dp, ddp, w))
            p = np.concatenate([r[0] for r in rows])
            dp = np.concatenate([r[1] for r in rows])
            ddp = np.concatenate([r[2] for r in rows])
            w = np.concatenate([r[3] for r in rows])
            inp = _inputs(self.var, p)
            self._bd = (inp, dp, ddp, w)
        return self._bd

    def boundary(self, t: float, cfg: AssemblyConfig) -> dict:
        inp, dp, ddp, w = self.boundary_inputs()
        n = len(w)
        supp = _support_vector(self.var.sf, cfg)
        out = _BOUNDARY_VARIATION(
            _geo(self.var, n), _rows(self.var.second_order, n), _rows(supp, n), np.full(n, float(t)), *inp, dp, ddp
        )
        out["weights"] = w
        return out


def _support_vector(sf: SpaceForm, cfg: AssemblyConfig) -> np.ndarray:
    sup = cfg.support
    cos_th = 0.0 if cfg.free_boundary else math.cos(cfg.theta)
    if isinstance(sup, BallGeometry):
        R = sup.radius
        target = float(cn(sf.c, R)) if sf.c != 0 else 0.0
        return np.array([1.0, 0.0, 0.0, cos_th, R, target, 0.0, 0.0])
    if isinstance(sup, SlabGeometry):
        if sf.c != 0:
            raise GeometryError("slab supports are defined in R^3 only")
        mid = 0.5 * (sup.lower + sup.upper)
        return np.array([0.0, 1.0, mid, cos_th, 0.0, 0.0, sup.lower, sup.upper])
    raise GeometryError("the capillary functional needs a ball or slab support")


def orientation_sign(var: VariationSpec, sampler: _Sampler | None = None) -> float:
    """Sign making the volume form positive on (phi_u, phi_v, eta)."""
    sampler = sampler or _Sampler(var)
    nv = sampler.interior(0.0)["normal_volume"]
    s = np.sign(nv)
    if not (np.all(s > 0) or np.all(s < 0)):
        raise VariationError("volume orientation of (phi_u, phi_v, eta) is not constant")
    return float(s[0])


# ---------------------------------------------------------------------------
# public operations


def h2_derivative_audit(var: VariationSpec, sf: SpaceForm | None = None, points=None, h: float = 1e-4) -> float:
    """Worst error of (H2(h) - H2(-h))/2h against the first-variation formula.

    The error is measured relative to max |right side| over the points (or
    max |H2| when the right side vanishes identically).
    """
    detail = h2_derivative_detail(var, sf, points, h)
    return detail["relative_error"]


def h2_derivative_detail(var: VariationSpec, sf: SpaceForm | None = None, points=None, h: float = 1e-4) -> dict:
    if sf is not None and sf.c != var.sf.c:
        raise GeometryError("space form does not match the variation's patch")
    if points is None:
        points, _ = var.patch.domain.quadrature(6, 12)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(pts)
    inp = _inputs(var, pts)
    geo = _geo(var, n)
    so = _rows(var.second_order, n)
    try:
        hp = _VARIATION(geo, so, np.full(n, h), *inp)["H2"]
        hm = _VARIATION(geo, so, np.full(n, -h), *inp)["H2"]
    except FloatingPointError as exc:  # pragma: no cover - jax does not raise here
        raise VariationError(str(exc)) from exc
    if not (np.all(np.isfinite(hp)) and np.all(np.isfinite(hm))):
        raise VariationError(f"step h = {h} too large: Phi_t is degenerate")
    fd = (hp - hm) / (2.0 * h)
    X, D1, D2, D3, F0, F1, F2, T0, _, _ = inp
    r = _RHS(geo, X, D1, D2, D3, F0, F1, F2, T0)
    rhs = r["rhs"]
    err = np.abs(fd - rhs)
    scale = float(np.max(np.abs(rhs)))
    if scale == 0.0:
        if float(np.max(err)) == 0.0:
            rel = 0.0
        else:
            rel = float(np.max(err)) / max(float(np.max(np.abs(r["H2"]))), 1e-300)
    else:
        rel = float(np.max(err)) / scale
    return dict(finite_difference=fd, rhs=rhs, relative_error=rel, L1f=r["L1f"], H2=r["H2"])


def enclosed_volume(var: VariationSpec, t: float, n_time: int = 6, sampler: _Sampler | None = None) -> float:
    """Signed volume swept between phi and phi_t (positive along +eta)."""
    if t == 0:
        return 0.0
    sampler = sampler or _Sampler(var)
    sigma = orientation_sign(var, sampler)
    x, w = np.polynomial.legendre.leggauss(n_time)
    s = 0.5 * t * (x + 1.0)
    ws = 0.5 * t * w
    total = 0.0
    for sk, wk in zip(s, ws):
        total += wk * float(sampler.w @ sampler.interior(sk)["volume_density"])
    return sigma * total


def support_integral(var: VariationSpec, sampler: _Sampler | None = None) -> tuple[float, float]:
    """(int f dmu, area) on the base patch."""
    sampler = sampler or _Sampler(var)
    out = sampler.interior(0.0)
    return float(sampler.w @ (out["support"] * out["area_density"])), float(sampler.w @ out["area_density"])


def volume_derivative_audit(var: VariationSpec, h: float = 1e-4) -> dict:
    """V'(0) by central difference against int f dmu."""
    sampler = _Sampler(var)
    vp = enclosed_volume(var, h, sampler=sampler)
    vm = enclosed_volume(var, -h, sampler=sampler)
    fd = (vp - vm) / (2.0 * h)
    integral, area = support_integral(var, sampler)
    scale = max(abs(integral), 1e-300)
    return dict(finite_difference=fd, integral=integral, area=area, relative_error=abs(fd - integral) / scale)


def mean_zero(var: VariationSpec) -> VariationSpec:
    """Shift the support function by a constant so that int f dmu = 0."""
    sampler = _Sampler(replace(var, second_order=(0.0, 0.0, 0.0)))
    integral, area = support_integral(sampler.var, sampler)
    return replace(var, offset=var.offset + integral / area)


def admissible_variation(var: VariationSpec, support: BallGeometry | SlabGeometry, volume_preserving: bool = True):
    """Add the second-order term that keeps a free boundary on the support.

    Ball in R^3 (centre 0, radius R): W = -f^2 phi / R^2 keeps |Phi| = R to
    second order where <phi, eta> = 0.  Ball in a curved model: W = f^2
    cn(R)/sn(R)^2 o_T keeps the distance to the centre.  Slab: no term is
    needed.  A multiple g0 eta is then added so that V''(0) = 0.
    """
    sf = var.sf
    if isinstance(support, BallGeometry):
        R = support.radius
        if sf.c == 0:
            so = (-1.0 / R**2, 0.0, 0.0)
        else:
            so = (0.0, float(cn(sf.c, R) / sn(sf.c, R) ** 2), 0.0)
    elif isinstance(support, SlabGeometry):
        if sf.c != 0:
            raise GeometryError("slab supports are defined in R^3 only")
        so = (0.0, 0.0, 0.0)
    else:
        raise GeometryError("admissible families are built for ball and slab supports")
    if var.tangential is not None:
        raise VariationError("admissible families are built from normal variations")
    out = replace(var, second_order=so, support_geometry=support)
    if volume_preserving:
        sampler = _Sampler(out)
        sigma = orientation_sign(out, sampler)
        h = 1e-4
        vd = (sampler.w @ sampler.interior(h)["volume_density"] - sampler.w @ sampler.interior(-h)["volume_density"]) / (
            2.0 * h
        )
        _, area = support_integral(out, sampler)
        g0 = -sigma * float(vd) / area
        out = replace(out, second_order=(so[0], so[1], g0))
    return out


def functional_value(var: VariationSpec, cfg: AssemblyConfig, t: float, sampler: _Sampler | None = None) -> dict:
    """F_{1,theta}[Sigma_t] with its interior and boundary parts."""
    sampler = sampler or _Sampler(var)
    it = sampler.interior(t)
    interior = -float(sampler.w @ (it["H2"] * it["support"] * it["area_density"]))
    bd = sampler.boundary(t, cfg)
    boundary = float(bd["weights"] @ bd["integrand"])
    return dict(F=interior + boundary, interior=interior, boundary=boundary, deviation=float(np.max(bd["deviation"])))


def functional_trace(var: VariationSpec, cfg: AssemblyConfig, t_grid=None, sample_points=None) -> FunctionalTrace:
    """F, V and H2 samples along the variation, ordered by t."""
    ts = np.sort(np.asarray(t_grid if t_grid is not None else var.times, dtype=float))
    sampler = _Sampler(var)
    if sample_points is None:
        sample_points = np.zeros((1, 2))
    sp_pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    sp_inp = _inputs(var, sp_pts)
    Fs, Vs, H2s, devs = [], [], [], []
    for t in ts:
        val = functional_value(var, cfg, t, sampler)
        Fs.append(val["F"])
        devs.append(val["deviation"])
        Vs.append(enclosed_volume(var, t, sampler=sampler))
        n = len(sp_pts)
        H2s.append(_VARIATION(_geo(var, n), _rows(var.second_order, n), np.full(n, t), *sp_inp)["H2"])
    return FunctionalTrace(t=ts, F=np.array(Fs), H2=np.array(H2s), V=np.array(Vs), boundary_deviation=np.array(devs))


def second_variation_audit(var: VariationSpec, ops: AssembledOperators, h: float = 1e-3) -> SecondVariationAudit:
    """Central difference of F_{1,theta} at t = 0 against I(f, f).

    The variation should come from :func:`admissible_variation` with a
    mean-zero support function; the boundary deviation from the support
    and V''(0) are reported so that this can be checked.
    """
    cfg = ops.config
    sup = cfg.support
    if not isinstance(sup, (BallGeometry, SlabGeometry)):
        raise GeometryError("the second-variation formula needs a totally umbilical support (ball or slab)")
    sampler = _Sampler(var)
    fp = functional_value(var, cfg, h, sampler)
    fm = functional_value(var, cfg, -h, sampler)
    f0 = functional_value(var, cfg, 0.0, sampler)
    fd = (fp["F"] - fm["F"]) / (2.0 * h)
    fv = var.support_values(ops.mesh.params)
    if not np.any(fv):
        return SecondVariationAudit(fd, 0.0, abs(fd), f0["F"], 0.0, 0.0, h)
    iv = index_form(ops, fv, fv)
    hv = 1e-4
    vpp = (enclosed_volume(var, hv, sampler=sampler) + enclosed_volume(var, -hv, sampler=sampler)) / hv**2
    rel = abs(fd - iv) / max(abs(iv), 1e-300)
    return SecondVariationAudit(
        finite_difference=float(fd),
        index_value=float(iv),
        relative_error=float(rel),
        F0=float(f0["F"]),
        volume_second_derivative=float(vpp),
        boundary_deviation=max(fp["deviation"], fm["deviation"]),
        step=h,
    )


def export_trace_csv(trace: FunctionalTrace, path) -> None:
    trace.to_csv(path)


__all__ = [
    "FunctionalTrace",
    "SecondVariationAudit",
    "VariationError",
    "VariationSpec",
    "admissible_variation",
    "enclosed_volume",
    "export_trace_csv",
    "functional_trace",
    "functional_value",
    "h2_derivative_audit",
    "h2_derivative_detail",
    "mean_zero",
    "orientation_sign",
    "polynomial_coefficients",
    "polynomial_support",
    "polynomial_variation",
    "second_variation_audit",
    "support_integral",
    "volume_derivative_audit",
]

