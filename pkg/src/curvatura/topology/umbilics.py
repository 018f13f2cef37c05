"""Umbilic points and indices of the principal line field.

Umbilics are the zeros of the traceless shape operator, written in the
orthonormal frame as the smooth map (S11 - S22, 2 S12).  Candidates come
from local minima of the umbilicity defect on a grid and are polished by a
root finder.  The index of an isolated umbilic is the rotation of the
doubled angle of the kappa_1 line field along a small circle, divided by
4 pi, and snapped to the nearest half-integer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import root

from curvatura.surface.domains import Annulus, Rectangle
from curvatura.surface.jets import evaluate_jets
from curvatura.surface.patch import ParametricPatch, PatchError


class DegenerateLocusError(RuntimeError):
    """The umbilic set is not made of isolated points."""


@dataclass(frozen=True)
class Umbilic:
    point: tuple[float, float]
    index: float  # snapped to a multiple of 1/2
    raw_index: float
    snap_distance: float
    defect: float
    circuit_radius: float


@dataclass(frozen=True)
class UmbilicReport:
    umbilics: list[Umbilic]
    euler_characteristic: int
    totally_umbilical: bool
    curvature_scale: float
    notes: list[str] = field(default_factory=list)

    @property
    def sum_of_indices(self) -> float:
        return float(sum(u.index for u in self.umbilics))

    @property
    def max_snap_distance(self) -> float:
        return max((u.snap_distance for u in self.umbilics), default=0.0)

    def to_json(self) -> dict:
        return {
            "umbilics": [
                {
                    "point": [float(x) for x in u.point],
                    "index": u.index,
                    "raw_index": u.raw_index,
                    "snap_distance": u.snap_distance,
                    "defect": u.defect,
                }
                for u in self.umbilics
            ],
            "euler_characteristic": self.euler_characteristic,
            "sum_of_indices": self.sum_of_indices,
            "totally_umbilical": self.totally_umbilical,
            "notes": list(self.notes),
        }


def patch_euler_characteristic(patch: ParametricPatch) -> int:
    """chi of the surface the audit refers to.

    A ``closed_euler_characteristic`` entry in the patch parameters (set by
    charts that cover a closed surface up to umbilic-free pieces) wins over
    the chi of the parameter domain.
    """
    if "closed_euler_characteristic" in patch.params:
        return int(patch.params["closed_euler_characteristic"])
    return 0 if isinstance(patch.domain, Annulus) else 1


def _bbox(patch: ParametricPatch):
    pts = []
    for curve in patch.domain.boundary_curves():
        t = np.linspace(curve.t0, curve.t1, 257)
        pts.append(np.asarray(curve.point(t, np)))
    P = np.concatenate(pts)
    return P.min(axis=0), P.max(axis=0)


def _traceless(patch: ParametricPatch, pts) -> np.ndarray:
    S = np.asarray(evaluate_jets(patch, pts).shape_orthonormal)
    return np.stack([S[:, 0, 0] - S[:, 1, 1], 2.0 * S[:, 0, 1]], axis=1)


def _inside(patch: ParametricPatch, pts, margin: float) -> np.ndarray:
    """Points whose disk of radius ``margin`` stays in the domain (sampled)."""
    ok = np.asarray(patch.domain.contains(pts))
    for a in np.linspace(0, 2 * math.pi, 16, endpoint=False):
        ok &= np.asarray(patch.domain.contains(pts + margin * np.array([math.cos(a), math.sin(a)])))
    return ok


def _line_field_index(patch: ParametricPatch, p, rho: float, n0: int = 64, nmax: int = 8192) -> float:
    """Rotation of the doubled kappa_1 direction angle along a circle, over 4 pi."""
    n = n0
    while True:
        a = 2 * math.pi * np.arange(n) / n
        pts = p + rho * np.stack([np.cos(a), np.sin(a)], axis=1)
        d = np.asarray(evaluate_jets(patch, pts).principal_dir1)
        psi2 = 2.0 * np.arctan2(d[:, 1], d[:, 0])
        step = np.diff(np.r_[psi2, psi2[0]])
        step = (step + math.pi) % (2 * math.pi) - math.pi
        if np.max(np.abs(step)) < math.pi / 4 or n >= nmax:
            return float(np.sum(step) / (4 * math.pi))
        n *= 2


def umbilic_locus(
    patch: ParametricPatch,
    grid_resolution: int = 48,
    defect_threshold: float = 1e-6,
) -> UmbilicReport:
    """Isolated umbilics of ``patch`` with their line-field indices.

    ``defect_threshold`` is relative to the curvature scale (the mean of
    |kappa_1| + |kappa_2| over the grid).  A surface whose defect stays below
    it on the whole grid is reported as totally umbilical with no points.
    Raises :class:`DegenerateLocusError` when the defect stays small on a
    circle around a candidate (umbilics along a curve).
    """
    lo, hi = _bbox(patch)
    n = int(grid_resolution)
    if n < 8:
        raise ValueError("grid resolution must be at least 8")
    us = np.linspace(lo[0], hi[0], n)
    vs = np.linspace(lo[1], hi[1], n)
    U, V = np.meshgrid(us, vs, indexing="ij")
    grid = np.stack([U.ravel(), V.ravel()], axis=1)
    step = float(min(us[1] - us[0], vs[1] - vs[0]))
    inside = np.asarray(patch.domain.contains(grid))
    jets = evaluate_jets(patch, grid[inside])
    scale = float(np.mean(np.abs(jets.kappa1) + np.abs(jets.kappa2)))
    chi = patch_euler_characteristic(patch)
    if scale == 0.0:
        return UmbilicReport([], chi, True, 0.0, ["flat: every point is umbilic"])
    thr = defect_threshold * scale
    D = np.full(n * n, np.inf)
    D[inside] = np.asarray(jets.umbilicity_defect)
    if np.max(D[inside]) < thr:
        return UmbilicReport([], chi, True, scale, ["defect below threshold on the whole grid"])
    D = D.reshape(n, n)
    # local minima over the 8-neighbourhood (ties allowed: symmetric grids
    # straddle umbilics on symmetry lines; the root finder merges duplicates)
    cands = []
    for i in range(1, n - 1):
        for j in range(1, n - 1):
            blk = D[i - 1 : i + 2, j - 1 : j + 2]
            if not np.all(np.isfinite(blk)):
                continue
            if D[i, j] <= blk.min():
                cands.append((D[i, j], np.array([us[i], vs[j]])))
    cands.sort(key=lambda t: t[0])

    def fun(x):
        return _traceless(patch, x[None, :])[0] / scale

    found: list[np.ndarray] = []
    for _, x0 in cands:
        try:
            sol = root(fun, x0, method="hybr", options=dict(xtol=1e-13))
        except PatchError:
            # the iteration left the chart (flat traceless map): not an isolated root here
            continue
        x = np.asarray(sol.x)
        if not sol.success or np.linalg.norm(x - x0) > 2 * step:
            continue
        if not bool(patch.domain.contains(x[None, :])[0]):
            continue
        if float(np.linalg.norm(fun(x))) > defect_threshold:
            continue
        if any(np.linalg.norm(x - y) < 0.5 * step for y in found):
            continue
        found.append(x)

    umbilics = []
    notes = []
    for k, x in enumerate(found):
        others = [np.linalg.norm(x - y) for j, y in enumerate(found) if j != k]
        rho = 0.5 * step
        if others:
            rho = min(rho, 0.4 * min(others))
        while rho > 1e-6 * step and not _inside(patch, x[None, :], rho)[0]:
            rho *= 0.5
        a = 2 * math.pi * np.arange(32) / 32
        ring = x + rho * np.stack([np.cos(a), np.sin(a)], axis=1)
        ring_defect = np.asarray(evaluate_jets(patch, ring).umbilicity_defect)
        if np.min(ring_defect) < 10 * thr:
            raise DegenerateLocusError(
                f"umbilicity defect stays below threshold around {x.tolist()}: non-isolated umbilic set"
            )
        raw = _line_field_index(patch, x, rho)
        snapped = 0.5 * round(2.0 * raw)
        defect = float(evaluate_jets(patch, x[None, :]).umbilicity_defect[0])
        umbilics.append(
            Umbilic(
                point=(float(x[0]), float(x[1])),
                index=float(snapped),
                raw_index=raw,
                snap_distance=abs(raw - snapped),
                defect=defect,
                circuit_radius=float(rho),
            )
        )
    if isinstance(patch.domain, Rectangle) and "closed_euler_characteristic" in patch.params:
        notes.append("chart covers a closed surface away from umbilic-free pieces")
    umbilics.sort(key=lambda u: u.point)
    return UmbilicReport(umbilics, chi, False, scale, notes)


def export_umbilics_json(report: UmbilicReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
