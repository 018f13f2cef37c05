"""Parametric patches, pointwise jets and the built-in patch catalog."""

from curvatura.surface.domains import Annulus, BoundaryCurve, Disk, Domain, Rectangle, StarDomain, WavyDisk
from curvatura.surface.patch import ParametricPatch, PatchError
from curvatura.surface.jets import (
    BoundaryJet,
    SurfaceJet,
    evaluate_boundary_jet,
    evaluate_boundary_jets,
    evaluate_jet,
    evaluate_jets,
    gauss_relation_residual,
    intrinsic_curvature,
    lemma_l1_residuals,
    orient_for_positivity,
    verify_newton_identities,
)
from curvatura.surface.catalog import (
    cap_in_ball,
    ellipsoid,
    ellipsoid_disk,
    flat_annulus,
    flat_disk,
    monkey_saddle,
    patch_from_expressions,
    spherical_cap,
    wavy_ellipsoid,
)
