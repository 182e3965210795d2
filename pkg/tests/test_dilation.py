import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from parabolic_lp import check_norm_properties, dilate, rho, validate_matrix
from parabolic_lp.dilation import expm
from parabolic_lp.errors import AdmissibilityError, DimensionError, NonPositiveScale

DEFECTIVE = [[2.0, 1.0], [0.0, 2.0]]

scales = st.floats(min_value=1e-3, max_value=1e3)


def rho_oracle(P, x):
    """Root of ``|exp(-u P) x| = 1`` in ``u = log t``, using scipy's expm."""
    P = np.asarray(P, dtype=np.float64)
    f = lambda u: np.linalg.norm(scipy.linalg.expm(-u * P) @ x) - 1.0
    return math.exp(brentq(f, -40.0, 40.0, xtol=1e-15, rtol=1e-15))


@given(st.lists(st.floats(-3, 3), min_size=9, max_size=9))
def test_expm_matches_scipy(entries):
    M = np.array(entries).reshape(3, 3)
    ref = scipy.linalg.expm(M)
    assert np.allclose(expm(M), ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())


def test_expm_stack_and_zero():
    stack = np.stack([np.zeros((2, 2)), np.diag([1.0, 2.0])])
    out = expm(stack)
    assert np.array_equal(out[0], np.eye(2))
    assert np.allclose(out[1], np.diag([math.e, math.e**2]), rtol=1e-14)


@pytest.mark.parametrize("P", [[[1, 0], [0, 2]], [[1, 1], [-1, 1]], DEFECTIVE, [[1, 0, 0], [0, 1.5, 0.3], [0, -0.3, 2]]])
def test_dilation_matches_scipy_expm(P):
    g = validate_matrix(P)
    ts = np.array([1e-3, 0.37, 1.0, 2.0, 45.0])
    for t, A, As in zip(ts, g.dilate_many(ts), g.dilate_many(ts, adjoint=True)):
        ref = scipy.linalg.expm(math.log(t) * np.asarray(P, dtype=float))
        assert np.allclose(A, ref, rtol=1e-11, atol=1e-13 * np.abs(ref).max())
        assert np.allclose(As, ref.T, rtol=1e-11, atol=1e-13 * np.abs(ref).max())


def test_defective_matrix_uses_taylor_path():
    g = validate_matrix(DEFECTIVE)
    assert not g.diagonalizable
    assert validate_matrix([[1, 0], [0, 2]]).diagonalizable


@given(scales, scales)
def test_group_law(t, s):
    for P in ([[1, 0], [0, 2]], [[1, 1], [-1, 1]], DEFECTIVE):
        g = validate_matrix(P)
        lhs = g.dilate(t) @ g.dilate(s)
        rhs = g.dilate(t * s)
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)
        assert abs(np.linalg.det(g.dilate(t)) - t**g.gamma) <= 1e-10 * t**g.gamma


def test_invariants():
    g = validate_matrix([[1, 1], [-1, 1]])
    assert g.gamma == 2.0 and g.n == 2
    assert g.kappa == 1.0
    assert validate_matrix([[1, 0], [0, 2]]).kappa == 2.0


def test_rho_closed_form_quadratic_root():
    g = validate_matrix([[1, 0], [0, 2]])
    expected = math.sqrt((9 + math.sqrt(145)) / 2)
    assert abs(float(g.rho(np.array([3.0, 4.0]))) - expected) <= 1e-12 * expected


@pytest.mark.parametrize("P", [[[1, 0], [0, 2]], [[1.5, 0.4], [-0.2, 1.2]], DEFECTIVE, [[1, 0, 0], [0, 1.5, 0.3], [0, -0.3, 2]]])
def test_rho_against_root_finding_oracle(P, rng):
    g = validate_matrix(P)
    n = g.n
    pts = rng.standard_normal((25, n)) * 10.0 ** rng.uniform(-2, 2, size=(25, 1))
    got = g.rho(pts)
    ref = np.array([rho_oracle(P, x) for x in pts])
    assert np.allclose(got, ref, rtol=1e-11, atol=0)
    got_dual = g.rho(pts, dual=True)
    ref_dual = np.array([rho_oracle(np.asarray(P, dtype=float).T, x) for x in pts])
    assert np.allclose(got_dual, ref_dual, rtol=1e-11, atol=0)


def test_rho_is_euclidean_for_conformal_groups(rng):
    # A_t = t R(log t) for the rotation generator, so rho(x) = |x|
    pts = rng.standard_normal((200, 2)) * 5
    ref = np.linalg.norm(pts, axis=1)
    for P in ([[1, 0], [0, 1]], [[1, 1], [-1, 1]]):
        g = validate_matrix(P)
        assert np.allclose(g.rho(pts), ref, rtol=1e-12)
        assert np.allclose(g.rho(pts, dual=True), ref, rtol=1e-12)


def test_rho_at_origin_and_shape(diag12):
    out = diag12.rho(np.zeros((3, 4, 2)))
    assert out.shape == (3, 4) and np.all(out == 0)
    with pytest.raises(DimensionError):
        diag12.rho(np.zeros((3, 3)))


@given(st.floats(-5, 5), st.floats(-5, 5), scales)
def test_rho_homogeneity(x1, x2, t):
    x = np.array([x1, x2])
    if np.linalg.norm(x) < 1e-6:
        return
    for P in ([[1, 0], [0, 2]], [[1, 1], [-1, 1]]):
        g = validate_matrix(P)
        r = float(g.rho(x))
        assert abs(float(g.rho(g.apply(t, x))) - t * r) <= 1e-10 * t * r
        rs = float(g.rho(x, dual=True))
        assert abs(float(g.rho(g.apply(t, x, adjoint=True), dual=True)) - t * rs) <= 1e-10 * t * rs


@given(st.floats(0, 2 * math.pi))
def test_unit_sphere_is_unit_norm_sphere(angle):
    x = np.array([math.cos(angle), math.sin(angle)])
    for P in ([[1, 0], [0, 2]], [[1, 1], [-1, 1]], DEFECTIVE):
        g = validate_matrix(P)
        assert abs(float(g.rho(x)) - 1) <= 1e-12
        assert abs(float(g.rho(x, dual=True)) - 1) <= 1e-12


def test_norm_properties_report(group):
    for dual in (False, True):
        rep = check_norm_properties(group, 2000, seed=3, dual=dual)
        assert rep["passed"], rep["slack"]
        assert set(rep["slack"]) == {"P1_triangle", "P2_unit_ball", "P3_small", "P4_large", "P5_expand",
                                     "P6_contract", "homogeneity"}


def test_norm_properties_defective():
    rep = check_norm_properties(validate_matrix(DEFECTIVE), 1000, seed=1)
    assert rep["passed"], rep["slack"]


@pytest.mark.parametrize("P, err", [
    ([[0.5, 0], [0, 1]], AdmissibilityError),
    ([[1, 3], [-3, 0.9]], AdmissibilityError),
    ([[1, 0, 0], [0, 1, 0]], DimensionError),
    ([[1, np.nan], [0, 1]], DimensionError),
    ([], DimensionError),
])
def test_validate_matrix_rejects(P, err):
    with pytest.raises(err):
        validate_matrix(P)


def test_admissibility_boundary_accepted():
    g = validate_matrix([[1, 0.0], [0.0, 1 - 1e-13]])
    assert g.n == 2


def test_validated_matrix_is_immutable(diag12):
    with pytest.raises(ValueError):
        diag12.P[0, 0] = 5.0


@pytest.mark.parametrize("t", [0.0, -1.0, math.inf, math.nan])
def test_nonpositive_scale(diag12, t):
    with pytest.raises(NonPositiveScale):
        dilate(diag12, t)


def test_module_level_helpers(diag12):
    assert np.array_equal(dilate(diag12, 2.0), diag12.dilate(2.0))
    assert np.array_equal(rho(diag12, [[3.0, 4.0]]), diag12.rho([[3.0, 4.0]]))


@pytest.mark.parametrize("P", [[[1, 0], [0, 2]], [[1, 1], [-1, 1]], DEFECTIVE])
def test_dilation_norm_strictly_increasing(P, rng):
    g = validate_matrix(P)
    ts = np.exp(np.linspace(-6, 6, 400))
    A = g.dilate_many(ts)
    x = rng.standard_normal((50, 2))
    norms = np.linalg.norm(np.einsum("kij,mj->mki", A, x), axis=-1)
    assert np.all(np.diff(norms, axis=1) > 0)


def test_rotation_scaling_closed_form():
    g = validate_matrix([[1, 1], [-1, 1]])
    c, s = math.cos(1.0), math.sin(1.0)
    expected = math.e * np.array([[c, s], [-s, c]])
    assert np.abs(g.dilate(math.e) - expected).max() <= 1e-12 * math.e
    assert np.abs(expm(np.array([[1.0, 1.0], [-1.0, 1.0]])) - expected).max() <= 1e-12 * math.e
