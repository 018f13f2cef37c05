import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from curvatura.spaceform import (
    GeometryError,
    SpaceForm,
    ambient_inner,
    ball_geometry,
    cn,
    cross_product,
    distance_to_origin,
    exp_map,
    geodesic_distance,
    sn,
)

curv = st.sampled_from([-1.0, -0.3, 0.0, 0.4, 1.0])
finite = st.floats(-2.0, 2.0, allow_nan=False)


def test_sn_examples():
    assert sn(0.0, 2.0) == 2.0
    assert sn(1.0, math.pi / 2) == pytest.approx(1.0, abs=1e-15)
    assert sn(-1.0, 1.0) == pytest.approx(1.1752012, abs=1e-7)


def test_cn_examples():
    assert cn(0.0, 7.3) == 1.0
    assert cn(1.0, 0.0) == 1.0


@pytest.mark.parametrize("c", [-1.0, 0.0, 1.0])
@pytest.mark.parametrize("rho", [0.5, 1.0])
def test_cn_is_derivative_of_sn(c, rho):
    errs = []
    for h in (1e-2, 5e-3):
        fd = (sn(c, rho + h) - sn(c, rho - h)) / (2 * h)
        errs.append(abs(cn(c, rho) - fd))
    # O(h^2): halving h divides the error by about 4
    assert errs[1] < 0.3 * errs[0] + 1e-12  # c = 0: sn is linear, the difference is exact
    assert errs[0] < 1e-4


@pytest.mark.parametrize("c", [-1.0, 0.5, 1.0])
def test_sn_solves_the_jacobi_ode(c):
    # independent oracle: integrate y'' + c y = 0 numerically
    sol = solve_ivp(lambda t, y: [y[1], -c * y[0]], (0, 1.3), [0.0, 1.0], rtol=1e-12, atol=1e-13, dense_output=True)
    t = np.linspace(0, 1.3, 7)
    np.testing.assert_allclose(sn(c, t), sol.sol(t)[0], atol=1e-10)
    np.testing.assert_allclose(cn(c, t), sol.sol(t)[1], atol=1e-10)


@given(c=curv, rho=st.floats(0.0, 1.5))
def test_pythagorean_identity(c, rho):
    assert cn(c, rho) ** 2 + c * sn(c, rho) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_small_curvature_series_is_continuous():
    for rho in (0.3, 1.2):
        assert sn(1e-9, rho) == pytest.approx(sn(1e-6, rho), abs=1e-6)
        assert cn(-1e-9, rho) == pytest.approx(cn(-1e-6, rho), abs=1e-6)


def test_ambient_inner_examples():
    assert ambient_inner(SpaceForm(0), np.array([1.0, 0, 0]), np.array([0, 1.0, 0])) == 0.0
    e4 = np.array([0, 0, 0, 1.0])
    assert ambient_inner(SpaceForm(-1), e4, e4) == -1.0
    u = np.array([1 / math.sqrt(2), 1 / math.sqrt(2), 0, 0])
    assert ambient_inner(SpaceForm(1), u, u) == pytest.approx(1.0)


def test_ambient_inner_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        ambient_inner(SpaceForm(1), np.zeros(3), np.zeros(3))


def test_cross_product_examples():
    sf = SpaceForm(0)
    np.testing.assert_array_equal(cross_product(sf, [np.array([1.0, 0, 0]), np.array([0, 1.0, 0])]), [0, 0, 1])
    u = np.array([0.3, -1.2, 0.7])
    np.testing.assert_array_equal(cross_product(sf, [u, u]), np.zeros(3))


@pytest.mark.parametrize("c", [-1.0, 1.0])
@given(data=st.lists(finite, min_size=16, max_size=16))
def test_cross_product_represents_determinant(c, data):
    sf = SpaceForm(c)
    a, b, d, z = np.array(data).reshape(4, 4)
    w = cross_product(sf, [a, b, d])
    det = np.linalg.det(np.stack([a, b, d, z]))
    assert ambient_inner(sf, w, z) == pytest.approx(det, abs=1e-9)
    for v in (a, b, d):
        assert ambient_inner(sf, w, v) == pytest.approx(0.0, abs=1e-9)


def test_cross_product_arity():
    with pytest.raises(ValueError):
        cross_product(SpaceForm(1), [np.zeros(4), np.zeros(4)])


def _tangent_at_origin(sf, v3):
    v = np.zeros(sf.model_dim)
    v[:3] = v3
    return v


@pytest.mark.parametrize("c", [-1.0, 1.0])
@given(v=st.lists(st.floats(-0.7, 0.7), min_size=3, max_size=3))
def test_exp_map_stays_on_model_and_has_unit_speed(c, v):
    sf = SpaceForm(c)
    o = sf.origin()
    t = _tangent_at_origin(sf, v)
    x = exp_map(sf, o[None, :], t[None, :])[0]
    assert sf.on_model(x, tol=1e-10)
    assert distance_to_origin(sf, x) == pytest.approx(np.linalg.norm(v), abs=1e-7)


def test_geodesic_distance_symmetric():
    sf = SpaceForm(-1)
    o = sf.origin()
    x = exp_map(sf, o, np.array([0.3, 0.1, 0.0, 0.0]))
    y = exp_map(sf, o, np.array([-0.2, 0.5, 0.4, 0.0]))
    assert geodesic_distance(sf, x, y) == pytest.approx(geodesic_distance(sf, y, x))


def test_ball_geometry_examples():
    g = ball_geometry(SpaceForm(0), 1.0)
    assert g.boundary_second_fundamental == pytest.approx(-1.0)
    g = ball_geometry(SpaceForm(-1), 1.0)
    assert g.boundary_geodesic_curvature == pytest.approx(1.3130353, abs=1e-7)
    with pytest.raises(GeometryError):
        ball_geometry(SpaceForm(1), math.pi / 2)
    with pytest.raises(GeometryError):
        ball_geometry(SpaceForm(0), -1.0)


@pytest.mark.parametrize("c", [-1.0, 0.0, 1.0])
def test_ball_outward_normal(c):
    sf = SpaceForm(c)
    R = 0.8
    g = ball_geometry(sf, R)
    d = np.zeros(sf.model_dim)
    d[:3] = [0.6, 0.0, 0.8]
    x = exp_map(sf, sf.origin(), R * d) if c != 0 else R * d
    n = g.outward_normal(x)
    assert ambient_inner(sf, n, n) == pytest.approx(1.0)
    if c != 0:
        assert ambient_inner(sf, n, x) == pytest.approx(0.0, abs=1e-12)
    # moving along the normal increases the distance to the centre
    step = exp_map(sf, x, 1e-4 * n) if c != 0 else x + 1e-4 * n
    assert distance_to_origin(sf, step) > R


def test_space_form_models():
    assert SpaceForm(0).model_dim == 3
    assert SpaceForm(1).signature == (1, 1, 1, 1)
    assert SpaceForm(-1).signature == (1, 1, 1, -1)
    assert SpaceForm(1).convexity_radius == pytest.approx(math.pi / 2)
    assert SpaceForm(-1).on_model(SpaceForm(-1).origin())
    assert not SpaceForm(-1).on_model(-SpaceForm(-1).origin())
