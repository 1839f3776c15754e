import math

import numpy as np
import pytest
from scipy import stats

from conftest import EXP10, POISSON_HYPER, WEIBULL_DATA, WEIBULL_HYPER, logistic_fixture, poisson_fixture, weibull_fixture
from lapcert import oracle
from lapcert.datasets import generate
from lapcert.errors import OracleUnavailable
from lapcert.geometry import analyze
from lapcert.model import ModelDescriptor


def gaussian_model(mu, J, n):
    """Flat prior and a quadratic log-likelihood: the posterior is exactly N(mu, J^-1 / n)."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    J = np.atleast_2d(np.asarray(J, dtype=float))
    d = mu.size

    def loglik(t):
        r = np.asarray(t, dtype=float) - mu
        return -0.5 * n * float(r @ J @ r), -n * (J @ r), -n * J

    def logprior(t):
        return 0.0, np.zeros(d), np.zeros((d, d))

    def batch(T):
        R = np.atleast_2d(T) - mu
        return -0.5 * n * np.einsum("ij,jk,ik->i", R, J, R)

    return ModelDescriptor(d=d, n=n, loglik=loglik, logprior=logprior, params={"logpost_batch": batch})


# -- conjugate closed forms -----------------------------------------------------

def test_conjugate_poisson_example():
    t = oracle.conjugate_truth("poisson_gamma", [2, 3, 7], {"alpha": 0.1, "beta": 3.0})
    assert float(t.mean[0]) == pytest.approx(12.1 / 6, rel=1e-14)
    assert t.variance == pytest.approx(12.1 / 36, rel=1e-14)


def test_conjugate_weibull_matches_inverse_gamma():
    x = generate(WEIBULL_DATA, 200, 0)
    t = oracle.conjugate_truth("weibull_invgamma", x, WEIBULL_HYPER)
    a, b = WEIBULL_HYPER["alpha"] + 200, WEIBULL_HYPER["beta"] + float(np.sum(np.sqrt(x)))
    assert float(t.mean[0]) == pytest.approx(b / (a - 1), rel=1e-13)
    assert t.variance == pytest.approx(b * b / ((a - 1) ** 2 * (a - 2)), rel=1e-12)
    m = weibull_fixture(200)
    assert float(oracle.model_conjugate_truth(m).mean[0]) == pytest.approx(float(t.mean[0]), rel=1e-14)


def test_no_conjugate_form_for_logistic():
    with pytest.raises(OracleUnavailable):
        oracle.conjugate_truth("logistic_t", np.ones((3, 2)), {})
    with pytest.raises(OracleUnavailable):
        oracle.model_conjugate_truth(logistic_fixture(50, 2))


# -- quadrature -----------------------------------------------------------------------

@pytest.mark.parametrize("fixture", [poisson_fixture, weibull_fixture])
@pytest.mark.parametrize("n", [20, 250, 1000, 10000])
def test_quadrature_agrees_with_conjugate(fixture, n):
    m = fixture(n)
    g = analyze(m)
    for center, J in ((g.map.theta, g.curv_map.J), (g.mle.theta, g.curv_mle.J)):
        q = oracle.quadrature_truth_1d(m, float(center[0]), float(J[0, 0]))
        c = oracle.model_conjugate_truth(m)
        assert float(q.mean[0]) == pytest.approx(float(c.mean[0]), rel=1e-8)
        assert q.variance == pytest.approx(c.variance, rel=1e-8)


def test_quadrature_normalizer_matches_marginal_likelihood():
    x = generate(EXP10, 100, 0)
    m = poisson_fixture(100)
    q = oracle.quadrature_truth_1d(m, float(m.params["map"]), 1.0)
    a, b, S, n = POISSON_HYPER["alpha"], POISSON_HYPER["beta"], float(np.sum(x)), 100
    from scipy.special import gammaln
    exact = a * math.log(b) - gammaln(a) + gammaln(a + S) - (a + S) * math.log(b + n) - float(np.sum(gammaln(x + 1)))
    assert q.extra["log_normalizer"] == pytest.approx(exact, rel=1e-10)


def test_identical_distributions_have_zero_distance():
    m = gaussian_model(0.3, 2.0, 400)
    q = oracle.quadrature_truth_1d(m, 0.3, 2.0)
    assert q.tv_vs_laplace == pytest.approx(0.0, abs=1e-10)
    assert q.w1_vs_laplace == pytest.approx(0.0, abs=1e-10)
    assert float(q.mean[0]) == pytest.approx(0.3, rel=1e-12)
    assert q.variance == pytest.approx(1 / 800, rel=1e-10)


@pytest.mark.parametrize("shift", [1.0, -1.0])
def test_unit_translation(shift):
    # rescaled posterior N(shift, 1) against N(0, 1): W1 = 1 and TV = 2 Phi(1/2) - 1, either direction
    n = 100
    m = gaussian_model(0.0, 1.0, n)
    q = oracle.quadrature_truth_1d(m, -shift / math.sqrt(n), 1.0)
    assert q.w1_vs_laplace == pytest.approx(1.0, rel=1e-10)
    assert q.tv_vs_laplace == pytest.approx(2 * stats.norm.cdf(0.5) - 1, rel=1e-10)


def test_scale_mismatch_distances():
    # N(0, 4) against N(0, 1): TV from the two density crossings, W1 = (2 - 1) E|Z|
    m = gaussian_model(0.0, 0.25, 50)
    q = oracle.quadrature_truth_1d(m, 0.0, 1.0)
    x = math.sqrt(8 * math.log(2) / 3)
    tv = 2 * (stats.norm.cdf(x) - stats.norm.cdf(x / 2))
    assert q.tv_vs_laplace == pytest.approx(tv, rel=1e-10)
    assert q.w1_vs_laplace == pytest.approx(math.sqrt(2 / math.pi), rel=1e-9)


def test_expectation_matches_recorded_mean():
    m = poisson_fixture(300)
    g = analyze(m)
    q = oracle.quadrature_truth_1d(m, float(g.map.theta[0]), float(g.curv_map.J[0, 0]))
    e = oracle.expectation_1d(q, m, lambda u: u)
    assert e == pytest.approx(q.extra["rescaled_mean"], rel=1e-10, abs=1e-14)
    assert oracle.expectation_1d(q, m, lambda u: np.ones_like(u)) == pytest.approx(1.0, rel=1e-12)


def test_non_integrable_posterior():
    flat = ModelDescriptor(d=1, n=10, loglik=lambda t: (0.0, np.zeros(1), np.zeros((1, 1))),
                           logprior=lambda t: (0.0, np.zeros(1), np.zeros((1, 1))))
    with pytest.raises(OracleUnavailable, match="tail mass not converging"):
        oracle.quadrature_truth_1d(flat, 0.0, 1.0)


def test_fisher_divergence_zero_for_exact_gaussian():
    m = gaussian_model(1.0, 3.0, 200)
    assert oracle.fisher_divergence_truncated(m, 1.0, 3.0, 0.2) == pytest.approx(0.0, abs=1e-20)
    # a shifted center gives score difference J * shift everywhere
    shift = 0.5
    fd = oracle.fisher_divergence_truncated(m, 1.0 - shift / math.sqrt(200), 3.0, 0.2)
    assert fd == pytest.approx((3.0 * shift) ** 2, rel=1e-10)


# -- importance sampling ------------------------------------------------------------------

def test_importance_target_equals_proposal():
    J = np.array([[2.0, 0.3], [0.3, 1.0]])
    m = gaussian_model([0.5, -0.2], J, 100)
    t = oracle.importance_truth_md(m, [0.5, -0.2], J, samples=5000, seed=3, inflation=1.0)
    assert t.ess == pytest.approx(5000, rel=1e-9)


def test_importance_matches_quadrature_within_three_se():
    m = poisson_fixture(500)
    g = analyze(m)
    c, J = float(g.map.theta[0]), float(g.curv_map.J[0, 0])
    q = oracle.quadrature_truth_1d(m, c, J)
    imp = oracle.importance_truth_md(m, [c], [[J]], samples=20000, seed=0)
    assert abs(float(imp.mean[0]) - float(q.mean[0])) <= 3 * imp.error_estimate


def test_importance_is_seeded():
    m = logistic_fixture(300, 3)
    g = analyze(m)
    a = oracle.importance_truth_md(m, g.map.theta, g.curv_map.J, samples=4000, seed=9)
    b = oracle.importance_truth_md(m, g.map.theta, g.curv_map.J, samples=4000, seed=9)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.cov, b.cov)


def test_importance_standard_error_shrinks_with_samples():
    # quadrupling the sample size halves the standard error, up to sampling noise
    m = logistic_fixture(400, 2)
    g = analyze(m)
    ratios = []
    for seed in range(5):
        small = oracle.importance_truth_md(m, g.map.theta, g.curv_map.J, samples=4000, seed=seed)
        big = oracle.importance_truth_md(m, g.map.theta, g.curv_map.J, samples=16000, seed=100 + seed)
        ratios.append(small.error_estimate / big.error_estimate)
    assert np.median(ratios) == pytest.approx(2.0, rel=0.15)


def test_importance_proposal_mismatch():
    m = gaussian_model([0.0, 0.0], np.eye(2), 100)
    with pytest.raises(ValueError, match="proposal mismatch"):
        oracle.importance_truth_md(m, [0.0, 0.0], np.eye(2), samples=2000, seed=0, inflation=40.0)


def test_importance_dimension_limit():
    m = gaussian_model(np.zeros(9), np.eye(9), 100)
    with pytest.raises(OracleUnavailable):
        oracle.importance_truth_md(m, np.zeros(9), np.eye(9))


def test_laplace_reference():
    g = analyze(poisson_fixture(100))
    assert oracle.laplace_reference(g, "map")[0] is g.map.theta
    assert oracle.laplace_reference(g, "mle")[1] is g.curv_mle.J
    with pytest.raises(ValueError):
        oracle.laplace_reference(g, "both")
