"""Meshing of parameter domains and finite-element assembly of the index form."""

from curvatura.discretize.assembly import (
    AssembledOperators,
    AssemblyConfig,
    AssemblyError,
    SlabGeometry,
    assemble,
    export_coo,
    index_form,
    robin_coefficient,
    weighted_mass,
)
from curvatura.discretize.mesh import SurfaceMesh, export_off, mesh_patch, read_off

__all__ = [
    "AssembledOperators",
    "AssemblyConfig",
    "AssemblyError",
    "SlabGeometry",
    "SurfaceMesh",
    "assemble",
    "export_coo",
    "export_off",
    "index_form",
    "mesh_patch",
    "read_off",
    "robin_coefficient",
    "weighted_mass",
]
