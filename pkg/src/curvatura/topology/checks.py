"""Boundary principal-direction check and the hypotheses of the ball rigidity theorem."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from curvatura.discretize.mesh import SurfaceMesh
from curvatura.spaceform import SpaceForm, cn, distance_to_origin, sn


def boundary_principal_direction_check(mesh: SurfaceMesh) -> float:
    """max |II(nu, T)| over the smooth boundary vertices.

    Zero exactly when the conormal is a principal direction all along the
    boundary; corners of rectangular domains are skipped.
    """
    if mesh.bjets is None or len(mesh.boundary_vertices) == 0:
        raise ValueError("mesh has no boundary jets")
    vals = np.abs(np.asarray(mesh.bjets.II_nu_T, dtype=float))
    if len(mesh.corner_mask):
        vals = vals[~mesh.corner_mask]
    return float(np.max(vals)) if vals.size else 0.0


@dataclass(frozen=True)
class HypothesisReport:
    c: float
    R: float
    area: float
    boundary_length: float
    ratio: float
    threshold: float | None
    max_center_distance: float
    hemisphere_radius: float | None
    passed: bool
    reason: str

    def to_json(self) -> dict:
        return asdict(self)


def _area_and_length(mesh: SurfaceMesh) -> tuple[float, float]:
    P = mesh.params[mesh.triangles]
    e1, e2 = P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]
    a = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    J = np.asarray(mesh.jets.area_density)[mesh.triangles].mean(axis=1)
    area = float(np.sum(a * J))
    be = mesh.boundary_edges
    d = mesh.params[be[:, 1]] - mesh.params[be[:, 0]]
    g = 0.5 * (np.asarray(mesh.jets.metric)[be[:, 0]] + np.asarray(mesh.jets.metric)[be[:, 1]])
    length = float(np.sum(np.sqrt(np.einsum("ni,nij,nj->n", d, g, d))))
    return area, length


def theorem2_hypothesis_check(mesh: SurfaceMesh, sf: SpaceForm, R: float) -> HypothesisReport:
    """Hypotheses of the ball rigidity statement for a surface in B_R.

    c = 0: none (vacuous pass).  c > 0: the surface lies in the hemisphere,
    max distance to the ball centre <= pi / (2 sqrt c).  c < 0: the ratio
    A / l exceeds -cn(R) / (c sn(R)).
    """
    c = float(sf.c)
    R = float(R)
    area, length = _area_and_length(mesh)
    ratio = area / length if length > 0 else math.inf
    dmax = float(np.max(distance_to_origin(sf, mesh.positions)))
    if c == 0:
        return HypothesisReport(c, R, area, length, ratio, None, dmax, None, True, "no hypothesis for c = 0")
    if c > 0:
        hemi = math.pi / (2.0 * math.sqrt(c))
        ok = dmax <= hemi
        return HypothesisReport(
            c, R, area, length, ratio, None, dmax, hemi, bool(ok), "contained in a hemisphere" if ok else "leaves the hemisphere"
        )
    thr = float(-cn(c, R) / (c * sn(c, R)))
    ok = ratio > thr
    return HypothesisReport(
        c, R, area, length, ratio, thr, dmax, None, bool(ok), "area/length above threshold" if ok else "area/length below threshold"
    )
