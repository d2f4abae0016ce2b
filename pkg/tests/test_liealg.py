import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gstrands import liealg
from gstrands.errors import DimensionMismatchError, UnsupportedAlgebraError

SO3 = liealg.builtin("so3")
SE3 = liealg.builtin("se3")

e1, e2, e3 = np.eye(3)


def coords(st_dim):
    return st.lists(st.floats(-10, 10, allow_nan=False), min_size=st_dim, max_size=st_dim)


def test_so3_bracket_is_cross_product():
    assert np.allclose(liealg.bracket(SO3, e1, e2), e3)
    assert np.allclose(liealg.bracket(SO3, e2, e3), e1)


def test_bracket_of_element_with_itself_vanishes():
    xi = np.array([0.3, -1.2, 0.5])
    assert np.allclose(liealg.bracket(SO3, xi, xi), 0.0)


def test_se3_bracket_rotation_acts_on_translation():
    # [(e3, 0), (0, e1)] = (0, e3 x e1) = (0, e2)
    a = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
    b = np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    out = liealg.bracket(SE3, a, b)
    assert np.allclose(out, [0, 0, 0, 0, 1, 0])


def test_se3_bracket_matches_matrix_commutator():
    # oracle: the 4x4 homogeneous representation
    rng = np.random.default_rng(7)
    for _ in range(100):
        x, y = rng.standard_normal((2, 6))
        lhs = liealg.to_matrix(SE3, liealg.bracket(SE3, x, y))
        xm, ym = liealg.to_matrix(SE3, x), liealg.to_matrix(SE3, y)
        assert np.max(np.abs(lhs - (xm @ ym - ym @ xm))) < 1e-12


def test_ad_star_so3():
    # ad*_{e1} e2 = e2 x e1 = -e3 under the identity pairing
    out = liealg.ad_star(SO3, e1, e2)
    assert np.allclose(out, [0, 0, -1])


def test_ad_star_zero_velocity():
    mu = np.array([1.0, 2.0, 3.0])
    assert np.allclose(liealg.ad_star(SO3, np.zeros(3), mu), 0.0)


def test_ad_star_self_annihilates_for_bi_invariant_pairing():
    mu = np.array([0.4, -1.1, 2.2])
    assert np.max(np.abs(liealg.ad_star(SO3, mu, mu))) < 1e-15


@settings(max_examples=50, deadline=None)
@given(coords(3), coords(3), coords(3))
def test_duality_identity_so3(xi, mu, eta):
    xi, mu, eta = map(np.array, (xi, mu, eta))
    lhs = liealg.pair(SO3, liealg.ad_star(SO3, xi, mu), eta)
    rhs = liealg.pair(SO3, mu, liealg.bracket(SO3, xi, eta))
    assert abs(lhs - rhs) < 1e-10 * (1 + abs(rhs))


@settings(max_examples=30, deadline=None)
@given(coords(6), coords(6), coords(6), st.floats(-3, 3), st.floats(-3, 3))
def test_bracket_bilinear_se3(xi, eta, zeta, a, b):
    xi, eta, zeta = map(np.array, (xi, eta, zeta))
    lhs = liealg.bracket(SE3, a * xi + b * eta, zeta)
    rhs = a * liealg.bracket(SE3, xi, zeta) + b * liealg.bracket(SE3, eta, zeta)
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * (1 + np.max(np.abs(rhs)))


@pytest.mark.parametrize("name", ["so3", "se3", "soN(3)", "soN(4)", "soN(5)", "glN(2)", "glN(3)"])
def test_builtin_jacobi(name):
    spec = liealg.builtin(name)
    assert liealg.jacobi_residual(spec) < 1e-12
    liealg.validate(spec)


def test_builtin_dims():
    assert liealg.builtin("so3").dim == 3
    assert liealg.builtin("soN(4)").dim == 6
    assert liealg.builtin("glN(3)").dim == 9
    assert SE3.dim == 6


def test_duality_identity_all_builtins_random():
    rng = np.random.default_rng(11)
    for name in ("so3", "se3", "soN(4)", "glN(2)"):
        spec = liealg.builtin(name)
        for _ in range(200):
            xi, mu, eta = rng.standard_normal((3, spec.dim))
            lhs = liealg.pair(spec, liealg.ad_star(spec, xi, mu), eta)
            rhs = liealg.pair(spec, mu, liealg.bracket(spec, xi, eta))
            assert abs(lhs - rhs) < 1e-12 * (1 + abs(rhs))


def test_jacobi_residual_of_perturbed_constants():
    rng = np.random.default_rng(1)
    pert = 0.1 * rng.standard_normal((3, 3, 3))
    pert = 0.5 * (pert - np.swapaxes(pert, 1, 2))     # keep antisymmetry exact
    spec = liealg.LieAlgebraSpec(3, SO3.c + pert, np.eye(3), name="broken")
    res = liealg.jacobi_residual(spec)
    assert res > 0.1
    with pytest.raises(DimensionMismatchError):
        liealg.validate(spec)


def test_unsupported_name():
    with pytest.raises(UnsupportedAlgebraError):
        liealg.builtin("sp4")
    with pytest.raises(UnsupportedAlgebraError):
        liealg.builtin("soN(1)")


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        liealg.bracket(SO3, np.zeros(4), np.zeros(3))


def test_antisymmetry_enforced_exactly():
    c = SO3.c.copy()
    c[0, 1, 2] += 1e-14
    with pytest.raises(DimensionMismatchError):
        liealg.LieAlgebraSpec(3, c, np.eye(3))


def test_batched_operations_match_loop():
    rng = np.random.default_rng(5)
    xis = rng.standard_normal((17, 6))
    mus = rng.standard_normal((17, 6))
    batched = liealg.ad_star(SE3, xis, mus)
    for i in range(17):
        assert np.allclose(batched[i], liealg.ad_star(SE3, xis[i], mus[i]))


def test_ad_star_self_annihilates_so_n():
    # bi-invariance of the trace pairing on so(N)
    so4 = liealg.builtin("soN(4)")
    rng = np.random.default_rng(14)
    for _ in range(20):
        mu = rng.standard_normal(so4.dim)
        assert np.max(np.abs(liealg.ad_star(so4, mu, mu))) < 1e-12
