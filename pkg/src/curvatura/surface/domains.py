"""Planar parameter domains: star-shaped disks, annuli and rectangles.

Each domain knows its boundary curves (positively oriented, domain on the
left), a tensor-product quadrature rule, and a characteristic length used
to scale finite-difference steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class BoundaryCurve:
    """A closed (or open, for rectangles) boundary piece p(t) of a domain."""

    point: Callable  # (t, xp) -> array (..., 2)
    t0: float = 0.0
    t1: float = 2 * math.pi
    closed: bool = True
    label: int = 0


class Domain:
    scale: float = 1.0

    def boundary_curves(self) -> list[BoundaryCurve]:
        raise NotImplementedError

    def quadrature(self, n_radial: int = 48, n_angular: int = 128):
        raise NotImplementedError

    def contains(self, p) -> np.ndarray:
        raise NotImplementedError

    @property
    def has_corners(self) -> bool:
        return False


@dataclass(frozen=True)
class StarDomain(Domain):
    """Domain {rho * (cos t, sin t): 0 <= rho <= radius(t)}.

    ``radius`` takes ``(t, xp)`` and must be smooth and 2*pi periodic.
    """

    radius: Callable
    scale: float = 1.0

    def _radius(self, t, xp=np):
        return self.radius(t, xp)

    def boundary_curves(self) -> list[BoundaryCurve]:
        rad = self.radius

        def point(t, xp=np):
            r = rad(t, xp)
            return xp.stack([r * xp.cos(t), r * xp.sin(t)], axis=-1)

        return [BoundaryCurve(point=point, label=0)]

    def quadrature(self, n_radial: int = 48, n_angular: int = 128):
        s, ws = np.polynomial.legendre.leggauss(n_radial)
        s = 0.5 * (s + 1.0)
        ws = 0.5 * ws
        t = 2 * math.pi * np.arange(n_angular) / n_angular
        wt = np.full(n_angular, 2 * math.pi / n_angular)
        R = np.asarray(self.radius(t, np))
        S, T = np.meshgrid(s, t, indexing="ij")
        RR = np.broadcast_to(R, S.shape)
        pts = np.stack([S * RR * np.cos(T), S * RR * np.sin(T)], axis=-1).reshape(-1, 2)
        w = (ws[:, None] * wt[None, :] * S * RR**2).ravel()
        return pts, w

    def contains(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        rho = np.hypot(p[..., 0], p[..., 1])
        t = np.arctan2(p[..., 1], p[..., 0])
        return rho <= np.asarray(self.radius(t, np)) * (1 + 1e-12)


def Disk(radius: float = 1.0) -> StarDomain:
    r0 = float(radius)

    def rad(t, xp=np):
        return r0 + 0.0 * t

    return StarDomain(radius=rad, scale=2 * r0)


def WavyDisk(radius: float = 1.0, amplitude: float = 0.15, waves: int = 5) -> StarDomain:
    r0, a, k = float(radius), float(amplitude), int(waves)

    def rad(t, xp=np):
        return r0 * (1.0 + a * xp.cos(k * t))

    return StarDomain(radius=rad, scale=2 * r0 * (1 + a))


@dataclass(frozen=True)
class Annulus(Domain):
    r_in: float
    r_out: float

    @property
    def scale(self) -> float:
        return 2 * self.r_out

    def boundary_curves(self) -> list[BoundaryCurve]:
        ro, ri = self.r_out, self.r_in

        def outer(t, xp=np):
            return xp.stack([ro * xp.cos(t), ro * xp.sin(t)], axis=-1)

        def inner(t, xp=np):
            # clockwise so that the annulus stays on the left
            return xp.stack([ri * xp.cos(-t), ri * xp.sin(-t)], axis=-1)

        return [BoundaryCurve(point=outer, label=0), BoundaryCurve(point=inner, label=1)]

    def quadrature(self, n_radial: int = 48, n_angular: int = 128):
        s, ws = np.polynomial.legendre.leggauss(n_radial)
        rho = self.r_in + 0.5 * (s + 1.0) * (self.r_out - self.r_in)
        wr = 0.5 * ws * (self.r_out - self.r_in)
        t = 2 * math.pi * np.arange(n_angular) / n_angular
        wt = np.full(n_angular, 2 * math.pi / n_angular)
        P, T = np.meshgrid(rho, t, indexing="ij")
        pts = np.stack([P * np.cos(T), P * np.sin(T)], axis=-1).reshape(-1, 2)
        w = (wr[:, None] * wt[None, :] * P).ravel()
        return pts, w

    def contains(self, p) -> np.ndarray:
        rho = np.hypot(np.asarray(p)[..., 0], np.asarray(p)[..., 1])
        return (rho >= self.r_in * (1 - 1e-12)) & (rho <= self.r_out * (1 + 1e-12))


@dataclass(frozen=True)
class Rectangle(Domain):
    u0: float
    u1: float
    v0: float
    v1: float

    @property
    def scale(self) -> float:
        return max(self.u1 - self.u0, self.v1 - self.v0)

    @property
    def has_corners(self) -> bool:
        return True

    def boundary_curves(self) -> list[BoundaryCurve]:
        u0, u1, v0, v1 = self.u0, self.u1, self.v0, self.v1
        corners = [(u0, v0), (u1, v0), (u1, v1), (u0, v1)]
        curves = []
        for k in range(4):
            a = corners[k]
            b = corners[(k + 1) % 4]

            def seg(t, xp=np, a=a, b=b):
                return xp.stack([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], axis=-1)

            curves.append(BoundaryCurve(point=seg, t0=0.0, t1=1.0, closed=False, label=0))
        return curves

    def quadrature(self, n_radial: int = 48, n_angular: int = 48):
        x, wx = np.polynomial.legendre.leggauss(n_radial)
        y, wy = np.polynomial.legendre.leggauss(n_angular)
        u = self.u0 + 0.5 * (x + 1) * (self.u1 - self.u0)
        v = self.v0 + 0.5 * (y + 1) * (self.v1 - self.v0)
        wu = 0.5 * wx * (self.u1 - self.u0)
        wv = 0.5 * wy * (self.v1 - self.v0)
        U, V = np.meshgrid(u, v, indexing="ij")
        return np.stack([U, V], axis=-1).reshape(-1, 2), (wu[:, None] * wv[None, :]).ravel()

    def contains(self, p) -> np.ndarray:
        p = np.asarray(p)
        return (p[..., 0] >= self.u0) & (p[..., 0] <= self.u1) & (p[..., 1] >= self.v0) & (p[..., 1] <= self.v1)
