import json
import math

import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.special import j1, jnp_zeros

from conftest import cap_ops
from curvatura.discretize import mesh_patch
from curvatura.spaceform import GeometryError, SpaceForm, ball_geometry, cn, sn
from curvatura.surface import (
    Disk,
    ParametricPatch,
    cap_in_ball,
    ellipsoid,
    ellipsoid_disk,
    flat_annulus,
    flat_disk,
    monkey_saddle,
    spherical_cap,
    wavy_ellipsoid,
)
from curvatura.surface.catalog import cap_opening_angle, cap_center_distance, ellipsoid_umbilics
from curvatura.surface.rotational import rotational_h2_profile
from curvatura.topology import (
    DegenerateLocusError,
    NodalError,
    balanced_cutoff,
    boundary_principal_direction_check,
    boundary_sign_changes,
    export_audit_json,
    export_graph_json,
    export_polylines_csv,
    export_umbilics_json,
    gauss_bonnet_audit,
    nodal_graph,
    patch_euler_characteristic,
    rotation_test_function,
    test_function_pde_residual,
    theorem2_hypothesis_check,
    umbilic_locus,
    zero_tolerance,
)

SF0 = SpaceForm(0.0)
TILTED = [math.sin(0.7), 0.3, math.cos(0.7)]


@pytest.fixture(scope="module")
def disk_mesh():
    return mesh_patch(flat_disk(), 24)


# --- nodal sets -------------------------------------------------------------------


def test_second_neumann_eigenfunction_of_disk(disk_mesh):
    p = disk_mesh.params
    rho, t = np.hypot(p[:, 0], p[:, 1]), np.arctan2(p[:, 1], p[:, 0])
    f = j1(jnp_zeros(1, 1)[0] * rho) * np.cos(t + 0.3)
    g = nodal_graph(disk_mesh, f)
    assert g.n_domains == 2
    assert len(g.polylines) == 1 and not g.closed[0]
    assert len(g.endpoints) == 2 and len(g.branch_points) == 0
    assert boundary_sign_changes(disk_mesh, f) == [2]
    # the nodal line is the diameter orthogonal to angle -0.3
    pts = g.polylines[0]
    normal = np.array([math.cos(-0.3), math.sin(-0.3)])
    assert np.max(np.abs(pts @ normal)) < 1e-3  # linear interpolation of f: O(h^2)


def test_saddle_has_four_domains_and_a_branch_point(disk_mesh):
    p = disk_mesh.params
    g = nodal_graph(disk_mesh, p[:, 0] ** 2 - p[:, 1] ** 2)
    assert g.n_domains == 4
    assert sorted(g.domain_signs.tolist()) == [-1, -1, 1, 1]
    assert len(g.branch_points) == 1
    assert np.linalg.norm(g.branch_points[0]) < 0.1
    assert len(g.endpoints) == 4


def test_positive_function_has_one_domain(disk_mesh):
    g = nodal_graph(disk_mesh, np.ones(disk_mesh.n_vertices))
    assert g.n_domains == 1 and not g.polylines and len(g.vertices) == 0


def test_zero_function_is_rejected(disk_mesh):
    with pytest.raises(NodalError):
        nodal_graph(disk_mesh, np.zeros(disk_mesh.n_vertices))
    with pytest.raises(ValueError):
        nodal_graph(disk_mesh, np.zeros(3))


def test_degree_two_harmonic_on_cap():
    mesh = cap_ops(0.0, 1.0, 1.0, 16).mesh
    x = mesh.positions
    # x y changes sign across two planes through the cap's symmetry axis: 4 sign regions
    g = nodal_graph(mesh, x[:, 0] * x[:, 1])
    assert g.n_domains == 4
    assert len(g.branch_points) == 1


@given(angle=st.floats(0, 2 * math.pi), shift=st.floats(-0.5, 0.5))
def test_linear_functions_split_the_disk_in_two(disk_mesh, angle, shift):
    p = disk_mesh.params
    f = math.cos(angle) * p[:, 0] + math.sin(angle) * p[:, 1] - shift
    g = nodal_graph(disk_mesh, f)
    assert g.n_domains == 2
    assert len(g.polylines) == 1 and len(g.endpoints) == 2
    assert boundary_sign_changes(disk_mesh, f) == [2]


def test_closed_nodal_loop_on_annulus():
    mesh = mesh_patch(flat_annulus(0.5, 1.0), 12)
    p = mesh.params
    f = np.hypot(p[:, 0], p[:, 1]) - 0.77
    g = nodal_graph(mesh, f)
    assert g.closed == [True] and len(g.endpoints) == 0
    assert g.n_domains == 2
    assert boundary_sign_changes(mesh, f) == [0, 0]


def test_zero_tolerance_scale():
    mesh = cap_ops(0.0, 1.0, 1.0, 8).mesh
    assert zero_tolerance(mesh) == pytest.approx(1e-6 * max(1.0, np.max(np.abs(mesh.positions))))


def test_balanced_cutoff_symmetric_function():
    ops = cap_ops(0.0, 1.0, 1.0, 16)
    f = ops.mesh.params[:, 0]
    g = nodal_graph(ops.mesh, f)
    cut = balanced_cutoff(g, (0, 1), ops.M, ops)
    # exact up to the +tol perturbation of the vertices on u = 0
    assert cut.alpha == pytest.approx(1.0, abs=1e-6)
    assert abs(cut.integral) < 1e-12 * cut.abs_integral
    assert cut.index_value is not None
    # support is exactly the two domains
    outside = g.domain_of_vertex < 0
    assert np.all(cut.values[outside] == 0.0)
    with pytest.raises(NodalError):
        balanced_cutoff(g, (0, 0), ops)


@given(shift=st.floats(-0.4, 0.4))
def test_balanced_cutoff_is_mean_zero(shift):
    ops = cap_ops(0.0, 1.0, 1.0, 16)
    f = ops.mesh.params[:, 1] - shift
    g = nodal_graph(ops.mesh, f)
    cut = balanced_cutoff(g, (0, 1), ops)
    assert abs(cut.integral) <= 1e-12 * cut.abs_integral


def test_graph_exports(tmp_path, disk_mesh):
    p = disk_mesh.params
    g = nodal_graph(disk_mesh, p[:, 0] ** 2 - p[:, 1] ** 2)
    export_graph_json(g, tmp_path / "g.json")
    data = json.loads((tmp_path / "g.json").read_text())
    assert data["n_domains"] == 4 and len(data["branch_points"]) == 1
    export_polylines_csv(g, tmp_path / "p.csv")
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0] == "polyline,point,u,v"
    assert len(rows) - 1 == sum(len(x) for x in g.polylines)


# --- rotation test functions --------------------------------------------------------


@pytest.mark.parametrize("c", [-1.0, 0.0, 1.0])
def test_rotation_about_symmetry_axis_vanishes(c):
    ops = cap_ops(c, 1.0, 0.8, 16)
    f = rotation_test_function(ops.mesh, SpaceForm(c))
    assert np.max(np.abs(f)) < 1e-10
    with pytest.raises(NodalError):
        nodal_graph(ops.mesh, f)
    res = test_function_pde_residual(ops, f)
    assert (res.interior, res.boundary) == (0.0, 0.0)


def test_slab_rotation_vanishes_on_rotational_surface():
    prof = rotational_h2_profile(SF0, 1.0)
    mesh = mesh_patch(prof.patch, 8)
    assert np.max(np.abs(rotation_test_function(mesh, SF0, kind="slab"))) < 1e-10


@given(a=st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_rotation_function_is_linear_in_the_axis(a):
    a = np.array(a)
    assume(np.linalg.norm(a) > 0.1)
    mesh = cap_ops(-1.0, 1.0, 0.8, 8).mesh
    sf = SpaceForm(-1.0)
    f = rotation_test_function(mesh, sf, axis=a)
    basis = [rotation_test_function(mesh, sf, axis=e) for e in np.eye(3)]
    np.testing.assert_allclose(f, sum(w * b for w, b in zip(a / np.linalg.norm(a), basis)), atol=1e-12)


def test_rotation_argument_checks():
    mesh = cap_ops(1.0, 1.0, 0.8, 8).mesh
    with pytest.raises(GeometryError):
        rotation_test_function(mesh, SpaceForm(1.0), kind="slab")
    with pytest.raises(ValueError):
        rotation_test_function(mesh, SpaceForm(1.0), pivot=[0, 0], axis=[0, 0, 1])
    with pytest.raises(ValueError):
        rotation_test_function(mesh, SpaceForm(1.0), kind="cylinder")
    with pytest.raises(ValueError):
        rotation_test_function(mesh, SpaceForm(1.0), axis=[0, 0, 0])


def test_pivot_at_pole_matches_default_axis():
    mesh = cap_ops(0.0, 1.0, 1.0, 8).mesh
    f = rotation_test_function(mesh, SF0, pivot=[0.0, 0.0])
    assert np.max(np.abs(f)) < 1e-12


def test_tilted_rotation_solves_the_jacobi_problem():
    ops = cap_ops(0.0, 1.0, 1.0, 32)
    f = rotation_test_function(ops.mesh, SF0, axis=TILTED)
    res = test_function_pde_residual(ops, f)
    assert res.f_max > 0.1
    assert res.interior < 1e-3 and res.boundary < 1e-3
    assert res.interior_alternative == res.interior
    rng = np.random.default_rng(1)
    noise = test_function_pde_residual(ops, rng.standard_normal(ops.n))
    assert noise.interior > 0.1 and noise.boundary > 1.0


def test_hyperbolic_residuals_are_both_reported():
    ops = cap_ops(-1.0, 1.0, 0.8, 32)
    f = rotation_test_function(ops.mesh, SpaceForm(-1.0), axis=TILTED)
    res = test_function_pde_residual(ops, f)
    assert res.interior < 1e-3
    assert res.interior_alternative > res.interior
    with pytest.raises(ValueError):
        test_function_pde_residual(ops, f, kind="cylinder")


def test_balanced_cutoff_of_tilted_rotation_is_nearly_neutral():
    ops = cap_ops(0.0, 1.0, 1.0, 32)
    f = rotation_test_function(ops.mesh, SF0, axis=TILTED)
    g = nodal_graph(ops.mesh, f)
    assert g.n_domains == 2
    cut = balanced_cutoff(g, (0, 1), ops, ops)
    assert cut.alpha == pytest.approx(1.0, abs=1e-3)
    assert abs(cut.index_value) < 1e-2 * float(cut.values @ (ops.M @ cut.values))


# --- Gauss-Bonnet ---------------------------------------------------------------------


@pytest.mark.parametrize("patch", [flat_disk(), flat_annulus(), ellipsoid_disk()], ids=["disk", "annulus", "ellipsoid"])
def test_single_region_gauss_bonnet(patch):
    audit = gauss_bonnet_audit(mesh_patch(patch, 32))
    assert len(audit.regions) == 1
    assert audit.euler_sum == (0 if patch.name == "flat_annulus" else 1)
    assert abs(audit.global_residual) < 1e-3


def test_flat_disk_terms():
    audit = gauss_bonnet_audit(mesh_patch(flat_disk(), 32))
    assert audit.integral_K == 0.0
    assert audit.boundary_kappa == pytest.approx(2 * math.pi, abs=1e-3)


@pytest.mark.parametrize("c", [-1.0, 0.0])
def test_cap_gauss_bonnet_and_genus_inequality(c):
    ops = cap_ops(c, 1.0, 0.8 if c else 1.0, 32)
    audit = gauss_bonnet_audit(ops.mesh, ball=ops.config.support)
    assert abs(audit.global_residual) < 1e-3
    assert audit.genus_inequality is not None and audit.genus_inequality["holds"]


def test_cap_integral_matches_closed_form():
    ops = cap_ops(0.0, 1.0, 1.0, 32)
    audit = gauss_bonnet_audit(ops.mesh)
    # unit sphere: int K = area = 2 pi (1 - cos t); boundary circle of radius sin t has
    # geodesic curvature cot t in the sphere, length 2 pi sin t
    t = cap_opening_angle(SF0, 1.0, 1.0, cap_center_distance(SF0, 1.0, 1.0))
    assert audit.integral_K == pytest.approx(2 * math.pi * (1 - math.cos(t)), abs=2e-3)
    assert audit.boundary_kappa == pytest.approx(2 * math.pi * math.cos(t), abs=2e-3)


def test_bisected_cap():
    ops = cap_ops(0.0, 1.0, 1.0, 32)
    g = nodal_graph(ops.mesh, ops.mesh.params[:, 0])
    audit = gauss_bonnet_audit(ops.mesh, g)
    assert len(audit.regions) == 2
    for reg in audit.regions:
        assert reg.euler_characteristic == 1
        assert len(reg.external_angles) == 2
        np.testing.assert_allclose(reg.external_angles, math.pi / 2, atol=1e-2)
        assert abs(reg.residual) < 1e-2
    assert abs(audit.global_residual) < 1e-2
    assert abs(audit.nodal_cancellation) < 1e-12


def test_audit_json(tmp_path):
    audit = gauss_bonnet_audit(mesh_patch(flat_disk(), 8))
    export_audit_json(audit, tmp_path / "gb.json")
    data = json.loads((tmp_path / "gb.json").read_text())
    assert data["global_residual"] == pytest.approx(audit.global_residual)


# --- umbilics -------------------------------------------------------------------------


def test_triaxial_ellipsoid_umbilics():
    rep = umbilic_locus(ellipsoid((2.0, 1.5, 1.0)))
    assert len(rep.umbilics) == 4
    pts = np.array(sorted(u.point for u in rep.umbilics))
    np.testing.assert_allclose(pts, np.array(sorted(map(tuple, ellipsoid_umbilics((2.0, 1.5, 1.0))))), atol=1e-8)
    assert all(u.index == 0.5 for u in rep.umbilics)
    assert rep.sum_of_indices == 2 == rep.euler_characteristic
    assert rep.max_snap_distance < 0.1


@pytest.mark.parametrize("c", [-1.0, 1.0])
def test_geodesic_ellipsoid_umbilics(c):
    rep = umbilic_locus(ellipsoid((1.0, 0.8, 0.6), SpaceForm(c)))
    assert len(rep.umbilics) == 4 and rep.sum_of_indices == 2


def test_monkey_saddle_index():
    rep = umbilic_locus(monkey_saddle())
    assert len(rep.umbilics) == 1
    assert rep.umbilics[0].index == -0.5
    assert np.linalg.norm(rep.umbilics[0].point) < 1e-6


@pytest.mark.parametrize("patch", [spherical_cap(SF0, 1.0, 1.0), flat_disk()], ids=["sphere", "plane"])
def test_totally_umbilical(patch):
    rep = umbilic_locus(patch)
    assert rep.totally_umbilical and not rep.umbilics


def test_ellipsoid_disk_has_no_umbilics():
    rep = umbilic_locus(ellipsoid_disk())
    assert not rep.totally_umbilical and not rep.umbilics


def test_half_sphere_umbilic_region_is_degenerate():
    # a unit sphere chart pushed out by a flat bump exp(-1/v) on v > 0: the half v <= 0
    # stays spherical, so its umbilics fill an open set
    def position(uv):
        u, v = uv[0], uv[1]
        s2 = 0.25 * (u * u + v * v)
        w = jnp.stack([u, v, -(1.0 - s2)]) / (1.0 + s2)
        bump = jnp.where(v > 0, jnp.exp(-1.0 / jnp.where(v > 0, v, 1.0)), 0.0)
        return (1.0 + 0.3 * bump) * w

    patch = ParametricPatch(SF0, Disk(1.0), position, name="bumped_sphere")
    with pytest.raises(DegenerateLocusError):
        umbilic_locus(patch)


def test_umbilic_argument_checks_and_json(tmp_path):
    with pytest.raises(ValueError):
        umbilic_locus(monkey_saddle(), grid_resolution=4)
    rep = umbilic_locus(monkey_saddle())
    export_umbilics_json(rep, tmp_path / "u.json")
    data = json.loads((tmp_path / "u.json").read_text())
    assert data["sum_of_indices"] == -0.5


def test_patch_euler_characteristic():
    assert patch_euler_characteristic(flat_disk()) == 1
    assert patch_euler_characteristic(flat_annulus()) == 0
    assert patch_euler_characteristic(ellipsoid()) == 2


# --- boundary and hypothesis checks -----------------------------------------------------


@pytest.mark.parametrize("theta", [math.pi / 2, 1.2])
@pytest.mark.parametrize("c", [-1.0, 0.0, 1.0])
def test_caps_have_principal_conormal(c, theta):
    mesh = mesh_patch(cap_in_ball(SpaceForm(c), 1.0, 0.8, theta), 8)
    assert boundary_principal_direction_check(mesh) < 1e-8


def test_wavy_boundary_is_not_principal():
    assert boundary_principal_direction_check(mesh_patch(wavy_ellipsoid(), 16)) > 1e-2


def test_theorem_hypotheses():
    rep = theorem2_hypothesis_check(cap_ops(0.0, 1.0, 1.0, 16).mesh, SF0, 1.0)
    assert rep.passed and rep.threshold is None
    rep = theorem2_hypothesis_check(cap_ops(1.0, 1.0, 0.8, 16).mesh, SpaceForm(1.0), 1.0)
    assert rep.passed and rep.hemisphere_radius == pytest.approx(math.pi / 2)


def test_hyperbolic_hypothesis_ratio():
    c, R, r = -1.0, 1.0, 0.8
    sf = SpaceForm(c)
    rep = theorem2_hypothesis_check(cap_ops(c, R, r, 32).mesh, sf, R)
    assert rep.threshold == pytest.approx(math.cosh(1) / math.sinh(1))
    # closed form for a geodesic-sphere cap: area 2 pi sn^2 (1 - cos t), boundary 2 pi sn sin t
    t = cap_opening_angle(sf, R, r, cap_center_distance(sf, R, r))
    exact = math.sinh(r) * (1 - math.cos(t)) / math.sin(t)
    assert rep.ratio == pytest.approx(exact, rel=2e-3)
    assert rep.passed == (rep.ratio > rep.threshold)
    thin = theorem2_hypothesis_check(cap_ops(c, R, 0.05, 16).mesh, sf, R)
    assert thin.ratio < rep.ratio and not thin.passed
