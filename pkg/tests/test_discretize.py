import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from conftest import cap_ops
from curvatura.discretize import (
    AssemblyConfig,
    AssemblyError,
    SlabGeometry,
    assemble,
    export_coo,
    export_off,
    index_form,
    mesh_patch,
    read_off,
    robin_coefficient,
    weighted_mass,
)
from curvatura.spaceform import GeometryError, SpaceForm, ball_geometry
from curvatura.surface import ellipsoid, flat_annulus, flat_disk, monkey_saddle, spherical_cap
from curvatura.surface.catalog import cap_opening_angle


@pytest.mark.parametrize(
    "patch, chi, comps",
    [(flat_disk(), 1, 1), (flat_annulus(), 0, 2), (ellipsoid(), 1, 1)],
)
def test_mesh_topology(patch, chi, comps):
    mesh = mesh_patch(patch, 8)
    assert mesh.euler_characteristic == chi
    assert mesh.n_boundary_components == comps


def test_mesh_refinement_statistics():
    a, b = mesh_patch(flat_disk(), 8), mesh_patch(flat_disk(), 16)
    assert b.n_triangles / a.n_triangles == pytest.approx(4.0, rel=0.05)
    assert b.max_edge_length / a.max_edge_length == pytest.approx(0.5, rel=0.1)


def test_mesh_rejects_tiny_resolution():
    with pytest.raises(ValueError):
        mesh_patch(flat_disk(), 2)


def test_cap_area_converges_quadratically():
    sf = SpaceForm(0)
    # closed form: spherical cap of radius r with opening angle t has area 2 pi r^2 (1 - cos t)
    t = cap_opening_angle(sf, 1.0, 1.0, math.sqrt(2.0))
    exact = 2 * math.pi * (1 - math.cos(t))
    errs = [abs(cap_ops(0.0, 1.0, 1.0, n).M.sum() - exact) for n in (8, 16)]
    assert errs[1] < 0.35 * errs[0]
    assert errs[1] < 1e-2


def test_operators_are_symmetric(unit_cap_ops):
    for A in (unit_cap_ops.K, unit_cap_ops.M, unit_cap_ops.Q, unit_cap_ops.B):
        assert abs(A - A.T).max() <= 1e-12 * abs(A).max()


def test_stiffness_annihilates_constants(unit_cap_ops):
    assert np.max(np.abs(unit_cap_ops.K @ np.ones(unit_cap_ops.n))) < 1e-12


def test_robin_coefficients():
    assert np.allclose(cap_ops(0.0, 1.0, 1.0, 8).alpha_values, -1.0)
    R = 1.0
    assert np.allclose(cap_ops(-1.0, R, 0.8, 8).alpha_values, -math.cosh(R) / math.sinh(R))
    cfg = AssemblyConfig(support=SlabGeometry(0.0, 1.0))
    bj = mesh_patch(flat_disk(), 4).bjets
    assert np.all(robin_coefficient(cfg, bj) == 0.0)
    with pytest.raises(GeometryError):
        robin_coefficient(AssemblyConfig(), bj)


def test_capillary_robin_coefficient_formula():
    theta = 1.2
    ops = cap_ops(0.0, 1.0, 1.0, 8, theta)
    ii = np.asarray(ops.mesh.bjets.II_nu_nu)
    expected = -1.0 / math.sin(theta) - math.cos(theta) / math.sin(theta) * ii
    np.testing.assert_allclose(ops.alpha_values, expected, rtol=1e-12)


def test_flat_disk_has_zero_newton_tensor():
    mesh = mesh_patch(flat_disk(), 6)
    ops = assemble(mesh, SpaceForm(0), AssemblyConfig(support=ball_geometry(SpaceForm(0), 1.0)))
    assert abs(ops.K).max() == 0.0 and abs(ops.Q).max() == 0.0
    assert not ops.p1_definite


def test_unit_sphere_newton_stiffness_is_laplace_beltrami():
    sf = SpaceForm(0)
    mesh = mesh_patch(spherical_cap(sf, 1.0, 1.0), 8)
    newton = assemble(mesh, sf, AssemblyConfig())
    lb = assemble(mesh, sf, AssemblyConfig(tensor="identity"))
    assert abs(newton.K - lb.K).max() < 1e-12 * abs(lb.K).max()


def test_require_definite():
    mesh = mesh_patch(monkey_saddle(), 4)
    with pytest.raises(AssemblyError):
        assemble(mesh, SpaceForm(0), AssemblyConfig(require_definite=True))


def test_config_validation():
    with pytest.raises(ValueError):
        AssemblyConfig(theta=0.0)
    with pytest.raises(ValueError):
        AssemblyConfig(quadrature_order=7)
    with pytest.raises(ValueError):
        AssemblyConfig(tensor="other")


def test_weighted_mass_of_ones_is_mass(unit_cap_ops):
    W = weighted_mass(unit_cap_ops.mesh, np.ones(unit_cap_ops.n))
    assert abs(W - unit_cap_ops.M).max() < 1e-14


def test_index_form_zero_and_shape(unit_cap_ops):
    z = np.zeros(unit_cap_ops.n)
    assert index_form(unit_cap_ops, z, z) == 0.0
    with pytest.raises(ValueError):
        index_form(unit_cap_ops, np.zeros(3), np.zeros(3))


@given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 1000))
def test_index_form_is_bilinear(unit_cap_ops, a, b, seed):
    rng = np.random.default_rng(seed)
    f1, f2, f3 = rng.standard_normal((3, unit_cap_ops.n))
    lhs = index_form(unit_cap_ops, a * f1 + b * f2, f3)
    rhs = a * index_form(unit_cap_ops, f1, f3) + b * index_form(unit_cap_ops, f2, f3)
    scale = (abs(a) + abs(b) + 1) * np.linalg.norm(f3) * (np.linalg.norm(f1) + np.linalg.norm(f2))
    assert abs(lhs - rhs) <= 1e-12 * scale * abs(unit_cap_ops.index_matrix).max()
    assert index_form(unit_cap_ops, f1, f2) == pytest.approx(index_form(unit_cap_ops, f2, f1), rel=1e-10, abs=1e-9)


def test_exports_round_trip(tmp_path, unit_cap_ops):
    p = tmp_path / "K.coo"
    export_coo(unit_cap_ops.K, p)
    data = np.loadtxt(p)
    A = sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=unit_cap_ops.K.shape)
    assert abs(A - unit_cap_ops.K).max() == 0.0
    q = tmp_path / "m.off"
    export_off(unit_cap_ops.mesh, q)
    verts, faces = read_off(q)
    np.testing.assert_array_equal(verts, unit_cap_ops.mesh.positions)
    np.testing.assert_array_equal(faces, unit_cap_ops.mesh.triangles)


def test_off_rejects_other_formats(tmp_path):
    p = tmp_path / "x.off"
    p.write_text("PLY\n0 0 0\n")
    with pytest.raises(ValueError):
        read_off(p)


def test_potential_scale_multiplies_q():
    ops = cap_ops(0.0, 1.0, 1.0, 8)
    scaled = ops.with_potential_scale(10.0)
    assert abs(scaled.Q - 10.0 * ops.Q).max() < 1e-12
