import numpy as np
import pytest

from conftest import series_exp
from reflexia import fixtures
from reflexia.exceptions import OutOfChartDomain
from reflexia.lie import mat_exp
from reflexia.model import (HomogeneousReflexionModel, as_black_box, build_model, coset_normalize,
                            double_reflexion, reflexion, reflexion_at_element,
                            right_invariant_field, translate,
                            verify_axioms)
from reflexia.symmetric import Involution

NAMES = ["so3", "sl2"]


def rand_ball(rng, n, dim, r):
    d = rng.normal(size=(n, dim))
    return d / np.linalg.norm(d, axis=1, keepdims=True) * r * rng.uniform(size=(n, 1))


def chart_oracle(model, G):
    """Chart coordinates of a group element, via coset_normalize."""
    return coset_normalize(model, G)[0]


def test_model_invariants(models):
    for m in models.values():
        basis = np.vstack([m.m_basis, m.k_basis])
        assert np.linalg.matrix_rank(basis) == m.spec.dim
        assert all(v <= 1e-12 for v in m.invariant_residuals().values())
    assert models["so3"].dim == 2 and models["sl2"].dim == 2


def test_chart_axes_are_g_minus(models):
    m = models["so3"]
    np.testing.assert_allclose(np.abs(m.m_basis), np.eye(3)[1:], atol=1e-14)


def test_coset_normalize_identity_and_recovery(models):
    rng = np.random.default_rng(5)
    for m in models.values():
        x, z = coset_normalize(m, np.eye(m.spec.matrix_size))
        np.testing.assert_allclose(x, 0, atol=1e-14)
        np.testing.assert_allclose(z, 0, atol=1e-14)
        for _ in range(20):
            x0 = rand_ball(rng, 1, m.dim, 0.3)[0]
            z0 = rng.uniform(-0.3, 0.3, size=m.k_basis.shape[0])
            G = series_exp(m.spec.matrix(x0 @ m.m_basis)) @ series_exp(m.spec.matrix(z0 @ m.k_basis))
            x, z = coset_normalize(m, G)
            np.testing.assert_allclose(x, x0, atol=1e-10)
            np.testing.assert_allclose(z, z0, atol=1e-10)
            back = mat_exp(m.spec.matrix(x @ m.m_basis)) @ mat_exp(m.spec.matrix(z @ m.k_basis))
            assert np.linalg.norm(back - G) <= 1e-10


def test_coset_normalize_rejects_far_elements(models):
    with pytest.raises(OutOfChartDomain):
        coset_normalize(models["so3"], np.diag([1.0, -1.0, -1.0]))


def test_reflexion_fixes_base_and_negates_minus(models):
    rng = np.random.default_rng(6)
    for m in models.values():
        y = rand_ball(rng, 30, m.dim, 0.29)
        np.testing.assert_allclose(reflexion(m, y, y), y, atol=1e-12)
        # chart axes are g^- and Ad(h) = -1 there
        np.testing.assert_allclose(reflexion(m, np.zeros(m.dim), y), -y, atol=1e-12)


def test_reflexion_matches_matrix_oracle(models):
    """S_{exp(X)K} exp(Y)K = exp(X) h exp(-X) exp(Y) K, built from explicit matrices."""
    rng = np.random.default_rng(8)
    for m in models.values():
        h = m.h_matrix
        for _ in range(10):
            x, y = rand_ball(rng, 2, m.dim, 0.2)
            X = m.spec.matrix(m.to_algebra(x))
            Y = m.spec.matrix(m.to_algebra(y))
            G = series_exp(X) @ h @ series_exp(-X) @ series_exp(Y) @ np.linalg.inv(h)
            np.testing.assert_allclose(reflexion(m, x, y), chart_oracle(m, G), atol=1e-10)


def test_reflexion_is_involutive_on_500_pairs(models):
    rng = np.random.default_rng(9)
    for m in models.values():
        x, y = rand_ball(rng, 500, m.dim, 0.29), rand_ball(rng, 500, m.dim, 0.29)
        sxy = m._evaluate(x, y)
        ok = np.all(np.isfinite(sxy), axis=1) & (np.linalg.norm(sxy, axis=1) < m.trust_radius)
        back = m._evaluate(x[ok], sxy[ok])
        assert np.max(np.linalg.norm(back - y[ok], axis=1)) <= 1e-9


def test_coset_independence(models):
    rng = np.random.default_rng(10)
    for m in models.values():
        for _ in range(10):
            x, y = rand_ball(rng, 2, m.dim, 0.2)
            Z = rng.uniform(-0.4, 0.4, size=m.k_basis.shape[0]) @ m.k_basis
            Xf = m.to_algebra(x)
            # representative exp(Y) exp(Z) of the same coset
            Y = m.spec.matrix(m.to_algebra(y))
            G = series_exp(m.spec.matrix(Xf)) @ m.h_matrix @ series_exp(-m.spec.matrix(Xf)) \
                @ series_exp(Y) @ series_exp(m.spec.matrix(Z)) @ np.linalg.inv(m.h_matrix)
            np.testing.assert_allclose(chart_oracle(m, G), reflexion(m, x, y), atol=1e-9)


@pytest.mark.parametrize("name,direction", [("so3", [1.0, 0.0]), ("so3", [0.6, 0.8]),
                                            ("sl2", [1.0, 1.0])])
def test_double_reflexion_oracle(models, name, direction):
    """S_{exp(X)K} S_{eK} gK = exp(2X) gK for X in g^-."""
    m = models[name]
    rng = np.random.default_rng(12)
    u = np.asarray(direction) / np.linalg.norm(direction)
    for t in (0.02, 0.1, 0.14):
        y = rand_ball(rng, 1, m.dim, 0.1)[0]
        X = m.spec.matrix(m.to_algebra(t * u))
        G = series_exp(2 * X) @ series_exp(m.spec.matrix(m.to_algebra(y)))
        assert np.linalg.norm(double_reflexion(m, t * u, y) - chart_oracle(m, G)) <= 1e-8


def test_double_reflexion_at_zero_is_identity(models):
    y = np.array([0.1, -0.05])
    np.testing.assert_allclose(double_reflexion(models["sl2"], np.zeros(2), y), y, atol=1e-14)


def test_right_invariant_field(models):
    rng = np.random.default_rng(13)
    for m in models.values():
        y = rand_ball(rng, 1, m.dim, 0.2)[0]
        np.testing.assert_allclose(right_invariant_field(m, np.zeros(3), y), 0, atol=1e-14)
        X = rng.normal(size=3)
        # at the base point: the m-component of X along k
        coef = np.linalg.solve(np.vstack([m.m_basis, m.k_basis]).T, X)
        np.testing.assert_allclose(right_invariant_field(m, X, np.zeros(m.dim)), coef[:m.dim],
                                   atol=1e-8)
        # central difference of the chart of exp(tX) exp(Y) K
        h = 1e-5
        fd = (translate(m, mat_exp(h * m.spec.matrix(X)), y)
              - translate(m, mat_exp(-h * m.spec.matrix(X)), y)) / (2 * h)
        np.testing.assert_allclose(right_invariant_field(m, X, y), fd, atol=1e-7)


def test_double_reflexion_derivative_identity(models):
    """d/dt|0 S_{exp(tX)K} S_{eK} y = R_X(y) - R_{Ad(h)X}(y)."""
    rng = np.random.default_rng(14)
    h = 1e-5
    for m in models.values():
        for _ in range(5):
            X = rng.normal(size=3)
            y = rand_ball(rng, 1, m.dim, 0.15)[0]
            s0y = reflexion(m, np.zeros(m.dim), y)
            d = (reflexion_at_element(m, h * X, s0y) - reflexion_at_element(m, -h * X, s0y)) / (2 * h)
            rhs = right_invariant_field(m, X, y) - right_invariant_field(m, m.sigma @ X, y)
            assert np.linalg.norm(d - rhs) <= 1e-6


def test_left_translation_equivariance(models):
    rng = np.random.default_rng(15)
    for m in models.values():
        for _ in range(5):
            x, y = rand_ball(rng, 2, m.dim, 0.1)
            t = mat_exp(m.spec.matrix(rng.normal(size=3) * 0.05))
            tx, ty = translate(m, t, x), translate(m, t, y)
            np.testing.assert_allclose(reflexion(m, tx, ty), translate(m, t, reflexion(m, x, y)),
                                       atol=1e-9)


def test_trust_radius_enforced(models):
    m = models["so3"]
    with pytest.raises(OutOfChartDomain):
        reflexion(m, np.array([0.31, 0.0]), np.zeros(2))
    S = as_black_box(m)
    assert S.dim == 2
    with pytest.raises(OutOfChartDomain):
        S(np.array([0.3, 0.0]), np.zeros(2))
    x, y = np.array([0.1, 0.05]), np.array([-0.02, 0.2])
    np.testing.assert_array_equal(S(x, y), reflexion(m, x, y))


@pytest.mark.parametrize("name", NAMES)
def test_verify_axioms_positive(models, name):
    rep = verify_axioms(models[name], n_samples=1000, seed=42)
    assert rep.a1 <= 1e-9 and rep.a2 <= 1e-9 and rep.a3 <= 1e-9
    assert rep.passed and rep.skip_rate == 0.0


def test_verify_axioms_corrupted_h():
    spec, h, k = fixtures.so3_pair()
    inv = Involution.from_group_element(spec, h)
    with pytest.raises(ValueError):
        HomogeneousReflexionModel(spec, inv, k, h_matrix=fixtures.corrupted_so3_h())
    bad = HomogeneousReflexionModel(spec, inv, k, h_matrix=fixtures.corrupted_so3_h(), check=False)
    rep = verify_axioms(bad, n_samples=1000, seed=42)
    assert rep.a2 > 1e-2 and not rep.passed
    assert bad.invariant_residuals()["h_squared"] > 1e-2


def test_verify_axioms_is_seeded(models):
    a = verify_axioms(models["sl2"], 200, seed=3).as_dict()
    b = verify_axioms(models["sl2"], 200, seed=3).as_dict()
    assert a == b


def test_wide_trust_radius_skips():
    m = build_model(*fixtures.so3_pair(), trust_radius=3.0)
    rep = verify_axioms(m, n_samples=300, seed=1)
    assert rep.skip_rate > 0.5
