"""Umbilic indices, nodal sets, Gauss-Bonnet audits and rotation test functions."""

from curvatura.topology.checks import HypothesisReport, boundary_principal_direction_check, theorem2_hypothesis_check
from curvatura.topology.gauss_bonnet import GaussBonnetAudit, RegionAudit, export_audit_json, gauss_bonnet_audit
from curvatura.topology.nodal import (
    BalancedCutoff,
    NodalError,
    NodalGraph,
    balanced_cutoff,
    boundary_sign_changes,
    export_graph_json,
    export_polylines_csv,
    nodal_graph,
    zero_tolerance,
)
from curvatura.topology.rotation import PDEResidual, rotation_test_function, test_function_pde_residual
from curvatura.topology.umbilics import (
    DegenerateLocusError,
    Umbilic,
    UmbilicReport,
    export_umbilics_json,
    patch_euler_characteristic,
    umbilic_locus,
)

__all__ = [
    "BalancedCutoff",
    "DegenerateLocusError",
    "GaussBonnetAudit",
    "HypothesisReport",
    "NodalError",
    "NodalGraph",
    "PDEResidual",
    "RegionAudit",
    "Umbilic",
    "UmbilicReport",
    "balanced_cutoff",
    "boundary_principal_direction_check",
    "boundary_sign_changes",
    "export_audit_json",
    "export_graph_json",
    "export_polylines_csv",
    "export_umbilics_json",
    "gauss_bonnet_audit",
    "nodal_graph",
    "patch_euler_characteristic",
    "rotation_test_function",
    "test_function_pde_residual",
    "theorem2_hypothesis_check",
    "umbilic_locus",
    "zero_tolerance",
]
