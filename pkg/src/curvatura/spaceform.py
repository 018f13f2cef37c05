"""Space-form models M^3(c), the functions sn_c / cn_c, and geodesic-ball data.

The three models live in R^3 (c = 0) or R^4 (c != 0):

* c = 0: Euclidean R^3.
* c > 0: the round sphere ``<x, x> = 1/c`` in Euclidean R^4.
* c < 0: the upper sheet ``<x, x> = 1/c, x_4 > 0`` of the hyperboloid in
  Minkowski space R^4_1 with signature (+, +, +, -).

Every routine accepts an ``xp`` array namespace so the same formulas can be
traced by jax (used for exact derivatives) or run on plain numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SMALL_CURVATURE = 1e-8


class GeometryError(ValueError):
    """Raised when a geometric configuration is invalid (non-convex ball, ...)."""


@dataclass(frozen=True)
class SpaceForm:
    """The ambient model M^3(c)."""

    c: float = 0.0
    model_dim: int = field(init=False)
    signature: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        c = float(self.c)
        object.__setattr__(self, "c", c)
        if c == 0.0:
            object.__setattr__(self, "model_dim", 3)
            object.__setattr__(self, "signature", (1, 1, 1))
        elif c > 0.0:
            object.__setattr__(self, "model_dim", 4)
            object.__setattr__(self, "signature", (1, 1, 1, 1))
        else:
            object.__setattr__(self, "model_dim", 4)
            object.__setattr__(self, "signature", (1, 1, 1, -1))

    @property
    def convexity_radius(self) -> float:
        """R_c: geodesic balls are convex for radii below this value."""
        if self.c > 0:
            return math.pi / (2.0 * math.sqrt(self.c))
        return math.inf

    def origin(self) -> np.ndarray:
        """The base point used as the centre of geodesic balls."""
        if self.c == 0:
            return np.zeros(3)
        o = np.zeros(4)
        o[3] = 1.0 / math.sqrt(abs(self.c))
        return o

    def on_model(self, x, tol: float = 1e-10) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.model_dim:
            return False
        if self.c == 0:
            return True
        q = ambient_inner(self, x, x)
        ok = np.abs(q - 1.0 / self.c) <= tol * max(1.0, abs(1.0 / self.c))
        if self.c < 0:
            ok = ok & (x[..., 3] > 0)
        return bool(np.all(ok))


def sn(c: float, rho, xp=np):
    """Generalised sine: solution of y'' + c y = 0 with y(0) = 0, y'(0) = 1."""
    c = float(c)
    if abs(c) < SMALL_CURVATURE:
        r2 = rho * rho
        return rho * (1.0 - c * r2 / 6.0 + c * c * r2 * r2 / 120.0 - c**3 * r2**3 / 5040.0)
    if c > 0:
        s = math.sqrt(c)
        return xp.sin(s * rho) / s
    s = math.sqrt(-c)
    return xp.sinh(s * rho) / s


def cn(c: float, rho, xp=np):
    """Generalised cosine, the derivative of :func:`sn` in ``rho``."""
    c = float(c)
    if abs(c) < SMALL_CURVATURE:
        r2 = rho * rho
        return 1.0 - c * r2 / 2.0 + c * c * r2 * r2 / 24.0 - c**3 * r2**3 / 720.0
    if c > 0:
        return xp.cos(math.sqrt(c) * rho)
    return xp.cosh(math.sqrt(-c) * rho)


def ambient_inner(sf: SpaceForm, u, v, xp=np):
    """Signed inner product sum_i s_i u_i v_i over the last axis."""
    if u.shape[-1] != sf.model_dim or v.shape[-1] != sf.model_dim:
        raise ValueError(
            f"expected vectors with {sf.model_dim} components, got {u.shape[-1]} and {v.shape[-1]}"
        )
    prod = u * v
    if sf.c < 0:
        return xp.sum(prod[..., :3], axis=-1) - prod[..., 3]
    return xp.sum(prod, axis=-1)


def _det3(a, b, c):
    return (
        a[..., 0] * (b[..., 1] * c[..., 2] - b[..., 2] * c[..., 1])
        - a[..., 1] * (b[..., 0] * c[..., 2] - b[..., 2] * c[..., 0])
        + a[..., 2] * (b[..., 0] * c[..., 1] - b[..., 1] * c[..., 0])
    )


def cross_product(sf: SpaceForm, vectors, xp=np):
    """Metric-adapted generalised cross product.

    Returns the vector ``w`` with ``ambient_inner(w, z) == det(*vectors, z)``
    for every ``z``.  Two vectors are expected in R^3 and three in R^4; in the
    Minkowski model the last cofactor is sign-flipped (index raised).
    """
    vectors = list(vectors)
    need = sf.model_dim - 1
    if len(vectors) != need:
        raise ValueError(f"cross product in dimension {sf.model_dim} takes {need} vectors, got {len(vectors)}")
    if sf.model_dim == 3:
        a, b = vectors
        return xp.stack(
            [
                a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
                a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
                a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
            ],
            axis=-1,
        )
    a, b, c = vectors
    cols = [[j for j in range(4) if j != i] for i in range(4)]
    cof = []
    for i in range(4):
        sel = cols[i]
        minor = _det3(
            xp.stack([a[..., k] for k in sel], axis=-1),
            xp.stack([b[..., k] for k in sel], axis=-1),
            xp.stack([c[..., k] for k in sel], axis=-1),
        )
        # expansion of det(a, b, c, z) along the last row
        cof.append(((-1) ** (i + 3)) * minor)
    if sf.c < 0:
        cof[3] = -cof[3]
    return xp.stack(cof, axis=-1)


def exp_map(sf: SpaceForm, x, v, xp=np):
    """Geodesic exponential at ``x`` of the tangent vector ``v`` (batched)."""
    if sf.c == 0:
        return x + v
    n2 = ambient_inner(sf, v, v, xp=xp)
    n2 = xp.maximum(n2, 0.0)
    # sn(|v|)/|v| and cn(|v|) are even in |v|; series avoids 0/0 at v = 0
    s = xp.sqrt(n2 + 1e-300)
    small = n2 < 1e-12
    c = sf.c
    ratio = xp.where(small, 1.0 - c * n2 / 6.0 + c * c * n2 * n2 / 120.0, sn(c, s, xp) / s)
    cosine = xp.where(small, 1.0 - c * n2 / 2.0 + c * c * n2 * n2 / 24.0, cn(c, s, xp))
    return cosine[..., None] * x + ratio[..., None] * v


def geodesic_distance(sf: SpaceForm, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if sf.c == 0:
        return np.linalg.norm(x - y, axis=-1)
    k = math.sqrt(abs(sf.c))
    p = sf.c * ambient_inner(sf, x, y)
    if sf.c > 0:
        return np.arccos(np.clip(p, -1.0, 1.0)) / k
    return np.arccosh(np.maximum(p, 1.0)) / k


def distance_to_origin(sf: SpaceForm, x) -> np.ndarray:
    return geodesic_distance(sf, np.asarray(x, dtype=float), sf.origin())


@dataclass(frozen=True)
class BallGeometry:
    """Boundary data of the geodesic ball B_R centred at ``sf.origin()``.

    ``boundary_second_fundamental`` is (II_dB)(nu_bar, nu_bar) with respect to
    the outward normal; ``boundary_geodesic_curvature`` is the curvature of a
    free-boundary curve inside the surface.
    """

    sf: SpaceForm
    radius: float
    boundary_second_fundamental: float
    boundary_geodesic_curvature: float

    def outward_normal(self, x):
        """Outward unit normal of the sphere dB_R at points ``x`` of it."""
        x = np.asarray(x, dtype=float)
        sf = self.sf
        if sf.c == 0:
            return x / np.linalg.norm(x, axis=-1, keepdims=True)
        o = sf.origin()
        # tangential part of -o at x points away from the centre
        proj = -(o - sf.c * ambient_inner(sf, o, x)[..., None] * x)
        n = np.sqrt(ambient_inner(sf, proj, proj))
        return proj / n[..., None]


def ball_geometry(sf: SpaceForm, R: float) -> BallGeometry:
    R = float(R)
    if not (0.0 < R < sf.convexity_radius):
        raise GeometryError(f"ball radius {R} outside the convexity range (0, {sf.convexity_radius})")
    k = float(cn(sf.c, R) / sn(sf.c, R))
    return BallGeometry(sf=sf, radius=R, boundary_second_fundamental=-k, boundary_geodesic_curvature=k)
