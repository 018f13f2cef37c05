"""Rotational surfaces in R^3 with constant H2 > 0.

The meridian (r(s), z(s)) is parametrised by arclength with tangent angle
psi measured from the horizontal.  The parallel curvature is sin(psi)/r and
the meridian curvature is psi', so constant H2 gives

    r' = cos psi,   z' = sin psi,   psi' = H2 r / sin psi.

The quantity sin(psi)^2 - H2 r^2 is a first integral.  Vertical tangents
(psi = +-pi/2) therefore occur only at the single radius where
H2 r^2 = 1 - C, which is also a strict local maximum of r; this is why the
slab shooting problem below never succeeds for H2 > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import jax.numpy as jnp
import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.integrate import solve_ivp

from curvatura.spaceform import GeometryError, SpaceForm
from curvatura.surface.domains import Annulus
from curvatura.surface.patch import ParametricPatch


class ShootingError(RuntimeError):
    """The profile ODE blew up or the shooting iteration did not converge."""


# Tighter than the nominal 1e-9: the patch differentiates the fitted meridian
# twice, and dense-output noise at 1e-9 shows up as ~1e-5 errors in H2.
ODE_ATOL = 1e-12
ODE_RTOL = 1e-12


def profile_rhs(s, y, H2):
    r, _, psi = y
    sp = math.sin(psi)
    return [math.cos(psi), sp, H2 * r / sp]


def _singular(s, y, H2):
    # stop before sin(psi) or r reaches zero (cone point / infinite curvature)
    return min(abs(math.sin(y[2])), y[0]) - 1e-3


_singular.terminal = True


@dataclass(frozen=True)
class RotationalProfile:
    H2: float
    seed_radius: float
    seed_angle: float
    first_integral: float
    s_range: tuple[float, float]
    cheb_r: np.ndarray
    cheb_z: np.ndarray
    patch: ParametricPatch
    max_fit_error: float

    def sample(self, s):
        """Fitted (r, z) at arclength values ``s``."""
        x = self._x(s)
        return C.chebval(x, self.cheb_r), C.chebval(x, self.cheb_z)

    def _x(self, s):
        s0, s1 = self.s_range
        return (2.0 * np.asarray(s, dtype=float) - (s0 + s1)) / (s1 - s0)


def integrate_profile(H2: float, r0: float, psi0: float, s_span: tuple[float, float]):
    """Integrate the meridian from (r0, z=0, psi0) at s=0 over ``s_span``."""
    if not H2 > 0:
        raise GeometryError("rotational profiles are built for H2 > 0 only")
    if not (r0 > 0 and abs(math.sin(psi0)) > 1e-3):
        raise GeometryError("seed needs r0 > 0 and a non-horizontal tangent")
    s0, s1 = s_span
    if not s0 <= 0.0 <= s1 or s0 == s1:
        raise GeometryError("s_span must contain 0")
    pieces = []
    for end in (s0, s1):
        if end == 0.0:
            continue
        sol = solve_ivp(
            profile_rhs,
            (0.0, end),
            [r0, 0.0, psi0],
            method="RK45",
            atol=ODE_ATOL,
            rtol=ODE_RTOL,
            args=(H2,),
            events=_singular,
            dense_output=True,
        )
        if sol.status == 1:
            raise ShootingError(f"profile ODE reached a singular point at s = {sol.t_events[0][0]:.6g}")
        if sol.status != 0:
            raise ShootingError(f"profile ODE failed: {sol.message}")
        pieces.append((end, sol.sol))
    return pieces


def _cheb_nodes(s0, s1, n):
    x = np.cos(np.pi * (np.arange(n) + 0.5) / n)
    return x, 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * x


def rotational_h2_profile(
    sf: SpaceForm,
    H2: float,
    seed: tuple[float, float] = (0.8, 1.2),
    s_span: tuple[float, float] = (-0.4, 0.4),
    degree: int = 30,
) -> RotationalProfile:
    """Surface of revolution about the x3-axis with constant H2.

    ``seed = (r0, psi0)`` fixes the meridian point at s = 0.  The patch lives
    on the annulus 1 <= |p| <= 2: the radius maps linearly to arclength and
    the polar angle is the rotation angle.
    """
    if sf.c != 0:
        raise GeometryError("rotational H2 profiles are implemented for c = 0")
    H2 = float(H2)
    r0, psi0 = (float(x) for x in seed)
    pieces = integrate_profile(H2, r0, psi0, s_span)
    s0, s1 = float(s_span[0]), float(s_span[1])
    x, s = _cheb_nodes(s0, s1, 4 * degree)
    vals = np.empty((s.size, 3))
    for end, sol in pieces:
        mask = (s <= 0) if end < 0 else (s >= 0)
        if np.any(mask):
            vals[mask] = sol(s[mask]).T
    cr = C.chebfit(x, vals[:, 0], degree)
    cz = C.chebfit(x, vals[:, 1], degree)
    err = max(np.max(np.abs(C.chebval(x, cr) - vals[:, 0])), np.max(np.abs(C.chebval(x, cz) - vals[:, 1])))
    cr_j, cz_j = jnp.asarray(cr), jnp.asarray(cz)
    rin, rout = 1.0, 2.0

    def position(uv):
        rho = jnp.sqrt(uv[0] ** 2 + uv[1] ** 2)
        xx = 2.0 * (rho - rin) / (rout - rin) - 1.0
        r = _clenshaw(cr_j, xx)
        z = _clenshaw(cz_j, xx)
        return jnp.stack([r * uv[0] / rho, r * uv[1] / rho, z])

    params = dict(H2=H2, seed=[r0, psi0], s_span=[s0, s1])
    patch = ParametricPatch(sf=sf, domain=Annulus(rin, rout), position=position, name="rotational", params=params)
    from curvatura.surface.jets import orient_for_positivity

    patch = orient_for_positivity(patch)
    return RotationalProfile(
        H2=H2,
        seed_radius=r0,
        seed_angle=psi0,
        first_integral=math.sin(psi0) ** 2 - H2 * r0**2,
        s_range=(s0, s1),
        cheb_r=cr,
        cheb_z=cz,
        patch=patch,
        max_fit_error=float(err),
    )


def _clenshaw(coef, x):
    b1 = 0.0 * x
    b2 = 0.0 * x
    for ck in coef[:0:-1]:
        b1, b2 = 2.0 * x * b1 - b2 + ck, b1
    return x * b1 - b2 + coef[0]


@dataclass(frozen=True)
class ShootingReport:
    converged: bool
    iterations: int
    best_residual: float
    heights: tuple[float, float] | None


def shoot_slab(H2: float, max_iter: int = 40, tol: float = 1e-6) -> ShootingReport:
    """Search for a meridian with vertical tangents at two heights.

    Starting from a vertical tangent at radius r_top (which fixes the first
    integral), the meridian is followed until it becomes singular and the
    smallest |cos psi| after leaving the start is recorded.  r_top is
    scanned over ``max_iter`` values in (0, 1/sqrt(H2)); failure to drive the
    residual below ``tol`` raises :class:`ShootingError`.
    """
    if not H2 > 0:
        raise GeometryError("slab shooting needs H2 > 0")

    def residual(rt):
        # after the vertical start, wait for |cos psi| to grow before scanning
        sol = solve_ivp(
            profile_rhs,
            (0.0, 20.0 / math.sqrt(H2)),
            [rt, 0.0, 0.5 * math.pi],
            method="RK45",
            atol=ODE_ATOL,
            rtol=ODE_RTOL,
            args=(H2,),
            events=_singular,
            dense_output=True,
            max_step=0.01,
        )
        s = sol.t
        cospsi = np.abs(np.cos(sol.y[2]))
        left = np.argmax(cospsi > 1e-3) if np.any(cospsi > 1e-3) else len(s)
        tail = cospsi[left:]
        if tail.size == 0:
            return 1.0, None
        k = int(np.argmin(tail))
        return float(tail[k]), (0.0, float(sol.y[1][left + k]))

    rmax = 1.0 / math.sqrt(H2)
    grid = np.linspace(0.05 * rmax, 0.999 * rmax, max_iter)
    best = (math.inf, None)
    for it, rt in enumerate(grid, start=1):
        res, heights = residual(float(rt))
        if res < best[0]:
            best = (res, heights)
        if res < tol:
            return ShootingReport(True, it, res, heights)
    raise ShootingError(
        f"slab shooting did not converge in {max_iter} iterations (best |cos psi| = {best[0]:.3g}); "
        "for H2 > 0 a meridian has a vertical tangent only where its radius is maximal"
    )
