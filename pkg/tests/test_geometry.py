import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import logistic_fixture, poisson_fixture, weibull_fixture
from lapcert.errors import CurvatureError, ModeNotFound
from lapcert.geometry import analyze, curvature, curvature_of, find_mode, shifted_pair, spd_summary
from lapcert.model import poisson_gamma_model


def _spd(seed, d, cond=50.0):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    eig = np.exp(rng.uniform(0, np.log(cond), d))
    return (Q * eig) @ Q.T


def test_poisson_curvatures_small_data():
    m = poisson_gamma_model([2, 3, 7], 0.1, 3.0)
    g = analyze(m)
    assert g.curv_mle.J[0, 0] == pytest.approx(0.25, rel=1e-12)
    assert g.curv_map.J[0, 0] == pytest.approx(36 / 33.3, rel=1e-12)
    assert g.mode_gap == pytest.approx(4 - 1.85, rel=1e-12)


def test_identity_summary():
    c = curvature_of(np.eye(3))
    assert (c.lambda_min, c.trace_inv, c.logdet) == (pytest.approx(1.0), pytest.approx(3.0), pytest.approx(0.0))


def test_non_spd_rejected():
    with pytest.raises(CurvatureError):
        curvature_of(np.diag([1.0, -0.5]))


@given(st.integers(1, 10), st.integers(0, 10**6))
def test_spectral_identities(d, seed):
    J = _spd(seed, d)
    c = curvature_of(J)
    # two independent routes: eigensolver vs inverse operator norm
    assert c.lambda_min * np.linalg.norm(np.linalg.inv(J), 2) == pytest.approx(1.0, rel=1e-10)
    assert c.logdet == pytest.approx(np.log(np.prod(np.linalg.eigvalsh(J))), rel=1e-8, abs=1e-12)
    assert c.trace_inv == pytest.approx(np.trace(np.linalg.inv(J)), rel=1e-10)


def test_shifted_pair_examples():
    p = shifted_pair(np.eye(2), 0.3, 1.0)
    np.testing.assert_allclose(p.J_plus, 1.1 * np.eye(2))
    np.testing.assert_allclose(p.J_minus, 0.9 * np.eye(2))
    assert (p.lambda_plus_min, p.lambda_minus_min) == (pytest.approx(1.1), pytest.approx(0.9))
    p = shifted_pair(np.diag([2.0, 5.0]), 3.0, 1.0)
    np.testing.assert_allclose(p.J_minus, np.diag([1.0, 4.0]))
    assert p.lambda_minus_min == pytest.approx(1.0)
    J = _spd(1, 3)
    p = shifted_pair(J, 0.7, 0.0)
    np.testing.assert_array_equal(p.J_plus, J)
    np.testing.assert_array_equal(p.J_minus, J)


@given(st.integers(1, 6), st.floats(1e-6, 3.0), st.floats(0.0, 5.0), st.integers(0, 10**6))
def test_shifted_pair_difference(d, radius, M, seed):
    J = _spd(seed, d)
    p = shifted_pair(J, radius, M)
    diff = p.J_plus - p.J_minus
    assert np.max(np.abs(diff - 2 * radius * M / 3 * np.eye(d))) <= 1e-12 * max(1.0, np.abs(J).max())


@pytest.mark.parametrize("objective", ["likelihood", "posterior"])
def test_concave_mode_is_init_independent(objective):
    m = logistic_fixture(400, 3, family="logistic_gaussian")
    rng = np.random.default_rng(4)
    a = find_mode(m, objective, rng.normal(size=3))
    b = find_mode(m, objective, rng.normal(size=3))
    assert np.linalg.norm(a.theta - b.theta) <= 1e-6
    p = poisson_fixture(300)
    x = find_mode(p, objective, [3.0]).theta
    y = find_mode(p, objective, [30.0]).theta
    assert abs(x[0] - y[0]) <= 1e-6


def test_mode_gradient_small_and_converged():
    for m in (poisson_fixture(500), weibull_fixture(500), logistic_fixture(500, 4)):
        g = analyze(m)
        assert g.mle.converged and g.map.converged
        assert g.mle.grad_norm < 1e-8 and g.map.grad_norm < 1e-8
        assert not g.multimodal_risk


def test_curvature_matches_negative_hessian():
    m = logistic_fixture(300, 2)
    mode = find_mode(m, "posterior")
    c = curvature(m, mode)
    np.testing.assert_allclose(c.J, -m.logpost(mode.theta)[2] / m.n, rtol=1e-12)


def test_invalid_initial_point():
    with pytest.raises(ModeNotFound, match="not finite"):
        find_mode(poisson_fixture(50), "likelihood", [-1.0])


@given(arrays(np.float64, (3,), elements=st.floats(0.1, 10.0)))
def test_spd_summary_diagonal(eigs):
    lam, tr, logdet = spd_summary(np.diag(eigs))
    assert lam == pytest.approx(eigs.min())
    assert tr == pytest.approx(np.sum(1 / eigs))
    assert logdet == pytest.approx(np.sum(np.log(eigs)))
