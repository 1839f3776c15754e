import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import (all_models, fd_gradient, fd_jacobian, logistic_fixture, poisson_fixture, random_points,
                      rel_err, weibull_fixture)
from lapcert.errors import ModeNotFound, OracleUnavailable
from lapcert.geometry import find_mode
from lapcert.model import (build_model, logistic_gaussian_model, logistic_m2, logistic_t_model,
                           poisson_gamma_model, poisson_kappa, weibull_invgamma_model)


# -- closed-form modes ---------------------------------------------------------

def test_poisson_modes_small_data():
    m = poisson_gamma_model([2, 3, 7], 0.1, 3.0)
    assert find_mode(m, "likelihood").theta[0] == pytest.approx(4.0, rel=1e-12)
    assert find_mode(m, "posterior").theta[0] == pytest.approx(1.85, rel=1e-12)


def test_weibull_modes_small_data():
    m = weibull_invgamma_model([1, 4, 9], 0.5, 3.0, 10.0)
    assert find_mode(m, "likelihood").theta[0] == pytest.approx(2.0, rel=1e-12)
    assert find_mode(m, "posterior").theta[0] == pytest.approx(16 / 7, rel=1e-12)


def test_weibull_constant_data():
    m = weibull_invgamma_model(np.ones(5), 1.0, 3.0, 10.0)
    assert find_mode(m, "likelihood").theta[0] == pytest.approx(1.0, rel=1e-12)


def test_poisson_kappa_example():
    assert poisson_kappa(0.2, 4.0) == pytest.approx(4 * (0.2 - math.log(1.2)), rel=1e-14)
    assert poisson_kappa(0.2, 4.0) == pytest.approx(0.070714, abs=5e-7)
    m = poisson_gamma_model([2, 3, 7], 0.1, 3.0)
    assert m.optimality_gap_oracle(np.array([4.0]), 0.8) == pytest.approx(poisson_kappa(0.2, 4.0), rel=1e-12)


@pytest.mark.parametrize("family", ["logistic_t", "logistic_gaussian"])
def test_balanced_logistic_modes_at_zero(family):
    table = np.array([[1.0, 1.0], [1.0, -1.0]])
    m = build_model(family, table, {"nu": 4.0} if family == "logistic_t" else {})
    assert abs(find_mode(m, "likelihood").theta[0]) < 1e-10
    assert abs(find_mode(m, "posterior").theta[0]) < 1e-10


def test_logistic_m2_two_rows():
    X = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert logistic_m2(X) == pytest.approx(9 / (12 * math.sqrt(3)), rel=1e-14)
    assert logistic_m2(X) == pytest.approx(0.43301, abs=5e-6)


def test_gaussian_prior_hessian_is_minus_identity():
    m = logistic_fixture(50, 3, family="logistic_gaussian")
    for t in np.random.default_rng(0).normal(size=(5, 3)):
        np.testing.assert_array_equal(m.logprior(t)[2], -np.eye(3))


def test_gaussian_prior_envelope_at_origin():
    m = logistic_fixture(50, 2, family="logistic_gaussian")
    for r in (0.1, 0.5, 2.0):
        assert m.prior_envelope_oracle(np.zeros(2), r)[0] == pytest.approx(r)


# -- input validation ----------------------------------------------------------

def test_poisson_rejects_shape_at_least_one():
    with pytest.raises(ValueError, match="shape < 1"):
        poisson_gamma_model([1.0, 2.0], 1.5, 1.0)


def test_poisson_rejects_zero_data():
    with pytest.raises(ValueError, match="all-zero"):
        poisson_gamma_model([0.0, 0.0], 0.5, 1.0)


def test_logistic_rejects_bad_labels():
    with pytest.raises(ValueError, match="labels"):
        logistic_t_model(np.ones((3, 1)), np.array([0.0, 1.0, 1.0]))


def test_separable_logistic_has_no_mle():
    X = np.array([[1.0], [2.0], [-1.0], [-3.0]])
    m = logistic_gaussian_model(X, np.array([1.0, 1.0, -1.0, -1.0]))
    with pytest.raises(ModeNotFound):
        find_mode(m, "likelihood")


def test_t_prior_tail_moments_need_enough_dof():
    m = logistic_fixture(50, 2, nu=1.5)
    assert math.isfinite(m.prior_tail_moment(np.zeros(2), 0.1, 1))
    with pytest.raises(OracleUnavailable, match="second tail moment infinite"):
        m.prior_tail_moment(np.zeros(2), 0.1, 2)
    m = logistic_fixture(50, 2, nu=0.8)
    with pytest.raises(OracleUnavailable, match="W1 bound infinite"):
        m.prior_tail_moment(np.zeros(2), 0.1, 1)


# -- derivatives ---------------------------------------------------------------

@pytest.mark.parametrize("name", ["poisson_gamma", "weibull_invgamma", "logistic_t", "logistic_gaussian"])
@pytest.mark.parametrize("part", ["loglik", "logprior"])
def test_finite_difference_derivatives(models, name, part):
    model = models[name]
    ev = getattr(model, part)
    rng = np.random.default_rng(11)
    for theta in random_points(model, 20, rng):
        h = 1e-4 * max(1.0, float(np.max(np.abs(theta))))
        v, g, H = ev(theta)
        g_fd = fd_gradient(lambda t: ev(t)[0], theta, h)
        H_fd = fd_jacobian(lambda t: ev(t)[1], theta, h)
        assert rel_err(g, g_fd) <= 1e-5
        assert rel_err(H, H_fd) <= 1e-4


def test_logpost_is_sum(models):
    m = models["logistic_t"]
    t = np.array([0.3, -0.2, 0.9])
    a, b = m.loglik(t), m.logprior(t)
    v, g, H = m.logpost(t)
    assert v == pytest.approx(a[0] + b[0])
    np.testing.assert_allclose(g, a[1] + b[1])


@pytest.mark.parametrize("family", ["logistic_t", "logistic_gaussian"])
def test_batched_log_posterior_matches_pointwise(family):
    m = logistic_fixture(300, 4, family=family)
    T = np.random.default_rng(3).normal(size=(7, 4))
    batch = m.params["logpost_batch"](T)
    np.testing.assert_allclose(batch, [m.logpost(t)[0] for t in T], rtol=1e-12)


@pytest.mark.parametrize("fixture", [poisson_fixture, weibull_fixture])
def test_vector_log_posterior_matches_pointwise(fixture):
    m = fixture(100)
    t = float(m.params["mle"]) * np.array([0.5, 1.0, 1.7])
    np.testing.assert_allclose(m.params["logpost_vec"](t), [m.logpost(np.array([x]))[0] for x in t],
                               rtol=1e-12)
    assert m.params["logpost_vec"](np.array([-1.0]))[0] == -np.inf


def test_third_derivative_matches_hessian_difference():
    m = logistic_fixture(200, 3)
    rng = np.random.default_rng(5)
    for _ in range(5):
        t, u = rng.normal(size=3), rng.normal(size=3)
        fd = fd_gradient(lambda s: u @ m.loglik(t + s[0] * u)[2] @ u, np.zeros(1), 1e-3)[0]
        assert m.third_lik(t[None, :], u[None, :])[0, 0] == pytest.approx(fd, rel=1e-6)
        assert u @ m.third_lik_vec(t, u) == pytest.approx(fd, rel=1e-6)


# -- third-derivative and envelope oracles --------------------------------------

def test_poisson_third_bound_example():
    m = poisson_gamma_model([2, 3, 7], 0.1, 3.0)
    assert m.third_deriv_bound_lik(np.array([4.0]), 0.8) == pytest.approx(2 / (0.8**3 * 16), rel=1e-14)
    assert m.third_deriv_bound_lik(np.array([4.0]), 0.8) == pytest.approx(0.24414, abs=5e-6)


@pytest.mark.parametrize("fixture", [poisson_fixture, weibull_fixture])
def test_scalar_third_bound_dominates_dense_grid(fixture):
    m = fixture(300)
    c = float(m.params["mle"])
    one = np.ones((1, 1))
    for frac in (0.05, 0.2, 0.5):
        r = frac * c
        # interior points: the bounds are attained at the ball boundary
        grid = np.linspace(c - r, c + r, 1002)[1:-1]
        lik3 = m.third_lik(grid[:, None], one)[:, 0]
        prior3 = np.array([fd_gradient(lambda s: m.logprior(s)[2][0, 0], np.array([t]), 1e-4 * t)[0]
                           for t in grid])
        assert m.third_deriv_bound_lik(np.array([c]), r) > np.max(np.abs(lik3)) / m.n
        assert m.third_deriv_bound_post(np.array([c]), r) > np.max(np.abs(lik3 + prior3)) / m.n
        assert m.prior_third_bound(np.array([c]), r) >= np.max(np.abs(prior3)) * (1 - 1e-8)


def test_logistic_third_bound_dominates_grid():
    m = logistic_fixture(400, 4)
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(100, 4))
    dirs = rng.normal(size=(50, 4))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    sup = np.max(np.abs(m.third_lik(pts, dirs))) / m.n
    assert m.third_deriv_bound_lik(np.zeros(4), 1.0) >= sup


@given(st.floats(0.3, 30.0), st.integers(1, 4), st.floats(0.2, 5.0), st.integers(0, 10**6))
def test_t_prior_third_bound_dominates_samples(nu, d, sigma2, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(10, d))
    m = logistic_t_model(X, np.where(rng.random(10) < 0.5, 1.0, -1.0), Sigma=sigma2 * np.eye(d), nu=nu)
    center = rng.normal(size=d) * 2
    radius = float(rng.uniform(0.05, 3.0))
    bound = m.prior_third_bound(center, radius)
    third_at = m.params["prior_third_at"]
    for _ in range(30):
        v = rng.normal(size=d)
        t = center + radius * rng.random() ** (1 / d) * v / np.linalg.norm(v)
        u = rng.normal(size=d)
        u /= np.linalg.norm(u)
        assert abs(third_at(t, u)) <= bound * (1 + 1e-12)


@pytest.mark.parametrize("fixture", [poisson_fixture, weibull_fixture])
def test_prior_envelope_dominates_grid(fixture):
    m = fixture(300)
    c = float(m.params["mle"])
    r = 0.3 * c
    M1, M1t, M1h = m.prior_envelope_oracle(np.array([c]), r)
    grid = np.linspace(c - r, c + r, 2001)
    vals = [m.logprior(np.array([t])) for t in grid]
    assert M1 >= max(abs(v[1][0]) for v in vals)
    assert M1t >= max(math.exp(v[0]) for v in vals) * (1 - 1e-12)
    assert M1h >= max(math.exp(-v[0]) for v in vals) * (1 - 1e-12)


def test_t_prior_envelope_dominates_grid():
    m = logistic_fixture(100, 2)
    center, r = np.array([0.8, -0.4]), 0.7
    M1, M1t, M1h = m.prior_envelope_oracle(center, r)
    a = np.linspace(0, 2 * np.pi, 80)
    rad = np.linspace(0, r, 30)
    for s in rad:
        for t in center + s * np.column_stack([np.cos(a), np.sin(a)]):
            v, g, _ = m.logprior(t)
            assert np.linalg.norm(g) <= M1
            assert math.exp(v) <= M1t * (1 + 1e-12)
            assert math.exp(-v) <= M1h * (1 + 1e-12)


def test_reference_models_exist_for_every_family():
    assert set(all_models()) == {"poisson_gamma", "weibull_invgamma", "logistic_t", "logistic_gaussian"}
