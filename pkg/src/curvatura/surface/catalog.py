"""Built-in patch families.

Caps of geodesic spheres use a stereographic direction chart over the unit
disk: the parameter origin is the point of the cap closest to the ball
centre and the unit circle is the boundary curve.
"""

from __future__ import annotations

import math

import jax.numpy as jnp
import numpy as np

from curvatura.spaceform import GeometryError, SpaceForm, ambient_inner, ball_geometry, cn, sn
from curvatura.surface.domains import Annulus, Disk, Domain, Rectangle, StarDomain, WavyDisk
from curvatura.surface.patch import ParametricPatch


def _axes(sf: SpaceForm):
    """Unit spatial directions (e_hat, a, b) at the origin of the model."""
    D = sf.model_dim
    ehat = np.zeros(D)
    ehat[2] = 1.0
    a = np.zeros(D)
    a[0] = 1.0
    b = np.zeros(D)
    b[1] = 1.0
    return ehat, a, b


def _sphere_cap(sf, q, e, a, b, r, theta_max, domain, name, params):
    """Geodesic sphere S(q, r) restricted to directions within theta_max of e."""
    tau = math.tan(0.5 * theta_max)
    cr, sr = float(cn(sf.c, r)), float(sn(sf.c, r))
    q, e, a, b = (jnp.asarray(v) for v in (q, e, a, b))

    def position(uv):
        s2 = tau * tau * (uv[0] ** 2 + uv[1] ** 2)
        w = ((1.0 - s2) * e + 2.0 * tau * (uv[0] * a + uv[1] * b)) / (1.0 + s2)
        return cr * q + sr * w

    patch = ParametricPatch(sf=sf, domain=domain, position=position, name=name, params=params)
    return _orient_at_pole(patch)


def _orient_at_pole(patch: ParametricPatch) -> ParametricPatch:
    from curvatura.surface.jets import evaluate_jet

    jet = evaluate_jet(patch, np.zeros(2))
    if jet.kappa2 < 0 and jet.kappa1 <= 0:
        return patch.flipped()
    return patch


def cap_center_distance(sf: SpaceForm, R: float, r: float, theta: float = math.pi / 2) -> float:
    """Distance from the ball centre to the centre of a sphere of radius r meeting
    the ball boundary at contact angle theta (cos theta = <eta, eta_bar>, eta inward)."""
    c = sf.c
    if c == 0:
        d2 = R * R + r * r + 2.0 * R * r * math.cos(theta)
        if d2 <= 0:
            raise GeometryError("no sphere with these radii meets the ball at this angle")
        return math.sqrt(d2)
    val = float(cn(c, R) * cn(c, r) - c * sn(c, R) * sn(c, r) * math.cos(theta))
    if c > 0:
        if not -1.0 < val < 1.0:
            raise GeometryError("inadmissible cap data on the sphere")
        return math.acos(val) / math.sqrt(c)
    if val <= 1.0:
        raise GeometryError("inadmissible cap data in hyperbolic space")
    return math.acosh(val) / math.sqrt(-c)


def cap_opening_angle(sf: SpaceForm, R: float, r: float, d: float) -> float:
    """Angle at the sphere centre between the direction to the ball centre and the
    boundary circle of the cap."""
    c = sf.c
    if c == 0:
        val = (d * d + r * r - R * R) / (2.0 * d * r)
    else:
        val = float((cn(c, R) - cn(c, d) * cn(c, r)) / (c * sn(c, d) * sn(c, r)))
    if not -1.0 < val < 1.0:
        raise GeometryError(f"sphere of radius {r} does not cross the ball boundary (cos = {val:.6g})")
    return math.acos(val)


def cap_in_ball(sf: SpaceForm, R: float, r: float, theta: float = math.pi / 2) -> ParametricPatch:
    """Piece of a geodesic sphere of radius ``r`` inside the ball ``B_R``.

    With the default ``theta = pi/2`` the sphere meets the ball boundary
    orthogonally (free boundary); other values give capillary caps.
    """
    R, r, theta = float(R), float(r), float(theta)
    ball_geometry(sf, R)
    if not r > 0:
        raise GeometryError("cap radius must be positive")
    if not 0.0 < theta < math.pi:
        raise GeometryError("contact angle must lie in (0, pi)")
    if sf.c > 0 and r >= math.pi / math.sqrt(sf.c):
        raise GeometryError("cap radius exceeds the sphere's diameter")
    d = cap_center_distance(sf, R, r, theta)
    if d <= 1e-12:
        raise GeometryError("concentric cap: the sphere does not cross the ball boundary")
    theta_max = cap_opening_angle(sf, R, r, d)
    ehat, a, b = _axes(sf)
    o = sf.origin()
    if sf.c == 0:
        q = d * ehat
        e = -ehat
    else:
        q = float(cn(sf.c, d)) * o + float(sn(sf.c, d)) * ehat
        e = -(-sf.c * float(sn(sf.c, d)) * o + float(cn(sf.c, d)) * ehat)
    params = dict(R=R, r=r, theta=theta, center_distance=d, opening_angle=theta_max, center=q.tolist())
    return _sphere_cap(sf, q, e, a, b, r, theta_max, Disk(1.0), "cap_in_ball", params)


def spherical_cap(sf: SpaceForm, r: float, opening_angle: float, domain: Domain | None = None) -> ParametricPatch:
    """Cap of the geodesic sphere of radius r about the model origin.

    Its boundary circle is cut out by a totally umbilical surface meeting the
    sphere at a constant angle (a plane in the Euclidean case).
    """
    ehat, a, b = _axes(sf)
    o = sf.origin()
    if not 0 < opening_angle < math.pi:
        raise GeometryError("opening angle must lie in (0, pi)")
    e = -ehat
    dom = domain if domain is not None else Disk(1.0)
    params = dict(r=float(r), opening_angle=float(opening_angle))
    return _sphere_cap(sf, o, e, a, b, float(r), float(opening_angle), dom, "spherical_cap", params)


def ellipsoid(axes=(2.0, 1.5, 1.0), sf: SpaceForm | None = None, margin: float = 0.25) -> ParametricPatch:
    """Ellipsoid (a sin u cos v, b cos u, c sin u sin v) on a rectangle avoiding u = 0, pi.

    For ``c != 0`` the Euclidean ellipsoid is pushed into the model through the
    exponential map at the origin (a geodesic ellipsoid).
    """
    sf = sf or SpaceForm(0.0)
    a1, a2, a3 = (float(x) for x in axes)
    if min(a1, a2, a3) <= 0:
        raise GeometryError("ellipsoid axes must be positive")
    if sf.c > 0 and max(a1, a2, a3) >= sf.convexity_radius:
        raise GeometryError("geodesic ellipsoid must stay inside the convexity radius")
    o = jnp.asarray(sf.origin())
    D = sf.model_dim

    def euclid(uv):
        su = jnp.sin(uv[0])
        return jnp.stack([a1 * su * jnp.cos(uv[1]), a2 * jnp.cos(uv[0]), a3 * su * jnp.sin(uv[1])])

    if sf.c == 0:
        position = euclid
    else:
        c = sf.c

        def position(uv):
            # |v| >= min axis > 0, so exp_o needs no small-norm guard here
            v = euclid(uv)
            n = jnp.sqrt(v @ v)
            return jnp.concatenate([sn(c, n, jnp) / n * v, jnp.zeros(D - 3)]) + cn(c, n, jnp) * o

    dom = Rectangle(margin, math.pi - margin, -math.pi, math.pi)
    # the polar caps cut away by the margin carry no umbilics, so index sums
    # over this chart are compared with chi of the closed ellipsoid
    p = ParametricPatch(
        sf=sf,
        domain=dom,
        position=position,
        name="ellipsoid",
        params=dict(axes=[a1, a2, a3], closed_euler_characteristic=2),
    )
    return _orient_inward_at(p, np.array([0.5 * math.pi, 0.3]))


def _orient_inward_at(patch: ParametricPatch, p) -> ParametricPatch:
    from curvatura.surface.jets import evaluate_jet

    jet = evaluate_jet(patch, p)
    return patch.flipped() if jet.kappa1 <= 0 else patch


def ellipsoid_umbilics(axes) -> np.ndarray:
    """Parameter points of the four umbilics of a triaxial ellipsoid (a > b > c) in
    the chart of :func:`ellipsoid` (closed form)."""
    a1, a2, a3 = (float(x) for x in axes)
    if not a1 > a2 > a3:
        raise ValueError("closed form assumes a > b > c")
    phi = math.acos(math.sqrt((a1**2 - a2**2) / (a1**2 - a3**2)))
    return np.array([[math.pi / 2, s] for s in (phi, math.pi - phi, -phi, -(math.pi - phi))])


def ellipsoid_disk(axes=(2.0, 1.5, 1.0), opening_angle: float = 0.9, domain: Domain | None = None) -> ParametricPatch:
    """Euclidean ellipsoid patch over a disk-like domain around the south pole."""
    a1, a2, a3 = (float(x) for x in axes)
    tau = math.tan(0.5 * opening_angle)
    scale = jnp.asarray([a1, a2, a3])

    def position(uv):
        s2 = tau * tau * (uv[0] ** 2 + uv[1] ** 2)
        w = jnp.stack([2 * tau * uv[0], 2 * tau * uv[1], -(1.0 - s2)]) / (1.0 + s2)
        return scale * w

    dom = domain if domain is not None else Disk(1.0)
    p = ParametricPatch(
        sf=SpaceForm(0.0), domain=dom, position=position, name="ellipsoid_disk", params=dict(axes=[a1, a2, a3])
    )
    return _orient_at_pole(p)


def wavy_ellipsoid(axes=(2.0, 1.5, 1.0), opening_angle: float = 0.9, amplitude: float = 0.15, waves: int = 5):
    """Non-capillary control: ellipsoid patch over a wavy star domain."""
    return ellipsoid_disk(axes, opening_angle, WavyDisk(1.0, amplitude, waves))


def monkey_saddle(radius: float = 1.0) -> ParametricPatch:
    """Graph of Re((x + i y)^3) over a disk; a flat umbilic at the origin."""

    def position(uv):
        x, y = uv[0], uv[1]
        return jnp.stack([x, y, x**3 - 3 * x * y**2])

    return ParametricPatch(sf=SpaceForm(0.0), domain=Disk(radius), position=position, name="monkey_saddle")


def flat_disk(radius: float = 1.0) -> ParametricPatch:
    def position(uv):
        return jnp.stack([uv[0], uv[1], 0.0 * uv[0]])

    return ParametricPatch(sf=SpaceForm(0.0), domain=Disk(radius), position=position, name="flat_disk")


def flat_annulus(r_in: float = 0.5, r_out: float = 1.0) -> ParametricPatch:
    def position(uv):
        return jnp.stack([uv[0], uv[1], 0.0 * uv[0]])

    return ParametricPatch(
        sf=SpaceForm(0.0), domain=Annulus(r_in, r_out), position=position, name="flat_annulus"
    )


_SAFE = {
    name: getattr(jnp, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "arctan", "arctan2", "abs")
}
_SAFE["pi"] = math.pi


def patch_from_expressions(
    sf: SpaceForm, expressions: list[str], domain: Domain, name: str = "custom", autodiff: bool = True
) -> ParametricPatch:
    """Patch whose coordinates are arithmetic expressions in ``u`` and ``v``.

    Only elementary functions are in scope; names outside that list fail.
    """
    if len(expressions) != sf.model_dim:
        raise GeometryError(f"expected {sf.model_dim} coordinate expressions, got {len(expressions)}")
    codes = [compile(str(ex), f"<{name}[{i}]>", "eval") for i, ex in enumerate(expressions)]
    for code in codes:
        bad = [n for n in code.co_names if n not in _SAFE and n not in ("u", "v")]
        if bad:
            raise GeometryError(f"unknown names in patch expression: {bad}")

    def position(uv):
        env = dict(_SAFE, u=uv[0], v=uv[1])
        vals = [eval(code, {"__builtins__": {}}, env) + 0.0 * uv[0] for code in codes]  # noqa: S307
        return jnp.stack(vals)

    patch = ParametricPatch(sf=sf, domain=domain, position=position, name=name, params=dict(expressions=expressions))
    pts, _ = domain.quadrature(6, 12)
    X = patch.evaluate(pts)
    if not sf.on_model(X, tol=1e-10):
        raise GeometryError("custom patch leaves the space-form model")
    return patch


def check_on_model(patch: ParametricPatch, n: int = 8) -> float:
    """Max deviation |<x,x> - 1/c| over a sample grid (0 in the Euclidean case)."""
    if patch.sf.c == 0:
        return 0.0
    pts, _ = patch.domain.quadrature(n, 2 * n)
    X = patch.evaluate(pts)
    return float(np.max(np.abs(ambient_inner(patch.sf, X, X) - 1.0 / patch.sf.c)))


__all__ = [
    "cap_in_ball",
    "cap_center_distance",
    "cap_opening_angle",
    "spherical_cap",
    "ellipsoid",
    "ellipsoid_umbilics",
    "ellipsoid_disk",
    "wavy_ellipsoid",
    "monkey_saddle",
    "flat_disk",
    "flat_annulus",
    "patch_from_expressions",
    "check_on_model",
    "StarDomain",
]
