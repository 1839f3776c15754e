import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import logistic_fixture, poisson_fixture, weibull_fixture
from lapcert import certificates as cert
from lapcert.geometry import analyze
from lapcert.model import ModelDescriptor


@pytest.fixture(scope="module")
def poisson_orc():
    m = poisson_fixture(1000)
    return cert.ConstantOracle(m, analyze(m))


# -- optimality gap ------------------------------------------------------------

def test_concave_gap_quadratic():
    assert cert.concave_gap(1.0, 1.0, 0.0) == pytest.approx(0.5)


def test_concave_gap_logistic_example():
    # exact Taylor remainder: 1/2 * 1 * 0.25 - 0.5 * 0.125 / 6
    k = cert.concave_gap(1.0, 0.5, 0.5)
    assert k == pytest.approx(0.125 - 0.5 * 0.125 / 6, rel=1e-14)
    assert k == pytest.approx(0.114583, abs=5e-7)
    # dominates the cruder surrogate with remainder M2 r^3 / 2
    assert k >= 0.09375


def test_concave_gap_uses_ray_scaling_beyond_peak():
    lam, m = 1.0, 2.0
    s = 1.5 * lam / m
    r = 3.0
    assert cert.concave_gap(lam, r, m) == pytest.approx((r / s) * (0.5 * lam * s**2 - m * s**3 / 6))
    assert cert.concave_gap(lam, r, m) > 0.5 * lam * r**2 - m * r**3 / 6


@given(st.floats(0.01, 10.0), st.floats(0.0, 10.0), st.floats(0.01, 5.0), st.floats(0.01, 5.0))
def test_concave_gap_nondecreasing(lam, m2, r1, r2):
    a, b = sorted((r1, r2))
    assert cert.concave_gap(lam, a, m2) <= cert.concave_gap(lam, b, m2) * (1 + 1e-12) + 1e-15


def test_concave_gap_below_true_drop():
    # quadratic-plus-cubic profile along a ray: the certified drop never exceeds the true drop
    m = logistic_fixture(500, 1, family="logistic_gaussian")
    g = analyze(m)
    lam = g.curv_mle.lambda_min
    m2 = m.third_deriv_bound_lik(g.mle.theta, 1.0)
    base = m.loglik(g.mle.theta)[0]
    for r in (0.1, 0.3, 0.6, 1.0, 2.0):
        k = cert.concave_gap(lam, r, m2)
        for s in (r, 1.5 * r, 3 * r):
            for sign in (1, -1):
                drop = -(m.loglik(g.mle.theta + sign * s)[0] - base) / m.n
                assert drop >= k * (1 - 1e-9)


@given(st.floats(0.05, 0.9), st.floats(0.05, 0.9))
def test_poisson_gap_nondecreasing(c1, c2):
    m = poisson_fixture(200)
    mle = np.array([m.params["mle"]])
    a, b = sorted((c1, c2))
    ka = m.optimality_gap_oracle(mle, a * mle[0])
    kb = m.optimality_gap_oracle(mle, b * mle[0])
    assert ka <= kb * (1 + 1e-12)


def test_optimality_gap_needs_positive_radius():
    m = poisson_fixture(100)
    g = analyze(m)
    with pytest.raises(cert.AssumptionViolation):
        cert.optimality_gap(m, g.mle, -0.1, "map")


# -- feasible interval -----------------------------------------------------------

def test_radius_interval_examples():
    lo, hi = cert.radius_interval(1.0, 100, 1.0, 1.0)
    assert lo == pytest.approx(0.1)
    assert hi == pytest.approx(1.0, rel=1e-10)
    lo, hi = cert.radius_interval(1.0, 100, 1.0, 0.0)
    assert lo == pytest.approx(0.1) and hi == math.inf


def test_radius_interval_empty():
    assert cert.radius_interval(1.0, 1, 1.0, 2.0) is None


# minimum sample sizes of the seeded Exp(10) Poisson-gamma stream, found by bisection
POISSON_MIN_N = {"map": 14, "mle": 5}


@pytest.mark.parametrize("centric", ["map", "mle"])
def test_poisson_feasibility_threshold(centric):
    from lapcert.compare import minimum_n
    from lapcert.pipeline import is_certifiable
    n0 = minimum_n(poisson_fixture, centric)
    assert n0 == POISSON_MIN_N[centric]
    assert is_certifiable(poisson_fixture(n0), centric)
    assert not is_certifiable(poisson_fixture(n0 - 1), centric)
    m = poisson_fixture(2)
    assert cert.feasible_radius_interval(cert.ConstantOracle(m, analyze(m)), "map") is None


@pytest.mark.parametrize("centric", ["map", "mle"])
def test_flags_hold_inside_and_fail_outside(poisson_orc, centric):
    lo, hi = cert.feasible_radius_interval(poisson_orc, centric)
    m, g = poisson_orc.model, poisson_orc.geometry
    for r in np.exp(np.linspace(np.log(lo), np.log(hi), 12)[1:-1]):
        cs = cert.constants_at(poisson_orc, centric, float(r))
        assert cert.verify_assumptions(m, g, cs).holds(centric)
    for r in (lo * (1 - 1e-6), hi * (1 + 1e-6)):
        try:
            cs = cert.constants_at(poisson_orc, centric, float(r))
        except Exception:
            continue  # the constants themselves are unavailable outside the interval
        assert not cert.verify_assumptions(m, g, cs).holds(centric)


# -- radius optimization ------------------------------------------------------------

def test_minimize_log_radius_flat_returns_midpoint():
    assert cert.minimize_log_radius(lambda r: 1.0, 0.1, 0.5) == pytest.approx(0.3)


def test_minimize_log_radius_quadratic():
    r = cert.minimize_log_radius(lambda x: (math.log(x) - math.log(0.37)) ** 2, 0.01, 10.0)
    assert r == pytest.approx(0.37, rel=1e-6)


@pytest.mark.parametrize("target", ["tv", "w1", "cov"])
def test_optimize_radii_poisson(poisson_orc, target):
    lo, hi = cert.feasible_radius_interval(poisson_orc, "map")
    r, cs = cert.optimize_radii(poisson_orc, target, "map")
    assert lo < r < hi
    f = lambda x: cert.bound_at(poisson_orc, target, "map", x)
    best = f(r)
    assert best <= f(lo * (1 + 1e-6)) and best <= f(hi * (1 - 1e-6))
    scan = np.exp(np.linspace(np.log(lo), np.log(hi), 202)[1:-1])
    vals = [f(x) for x in scan]
    assert best <= min(vals) * (1 + 1e-9)
    assert abs(np.log(scan[int(np.argmin(vals))] / r)) <= np.log(hi / lo) / 200 + 0.01
    # local fixed point
    r2 = cert.minimize_log_radius(f, r * (1 - 1e-3), r * (1 + 1e-3))
    assert f(r2) >= best * (1 - 1e-12)


def test_optimize_radii_beats_midpoint_logistic():
    m = logistic_fixture(40000, 5)
    orc = cert.ConstantOracle(m, analyze(m))
    lo, hi = cert.feasible_radius_interval(orc, "map")
    r, _ = cert.optimize_radii(orc, "w1", "map")
    assert cert.bound_at(orc, "w1", "map", r) <= cert.bound_at(orc, "w1", "map", 0.5 * (lo + hi))
    assert math.isfinite(cert.bound_at(orc, "w1", "map", r))


# -- assumption report ---------------------------------------------------------------

def test_poisson_fixture_all_flags(poisson_orc):
    for centric in ("map", "mle"):
        _, cs = cert.optimize_radii(poisson_orc, "tv", centric)
        rep = cert.verify_assumptions(poisson_orc.model, poisson_orc.geometry, cs)
        assert rep.holds(centric)
        assert all(c.holds for c in rep.checks.values())


def test_size_flags_fail_at_tiny_n(poisson_orc):
    _, cs = cert.optimize_radii(poisson_orc, "tv", "map")
    rep = cert.verify_assumptions(poisson_orc.model, poisson_orc.geometry, cs, n=2)
    assert not rep.checks["A7"].holds
    assert not rep.checks["A4"].holds


def test_inflated_m2_bar_breaks_a5(poisson_orc):
    _, cs = cert.optimize_radii(poisson_orc, "tv", "map")
    bad = dataclasses.replace(cs, M2_bar=cs.M2_bar * 1e6)
    rep = cert.verify_assumptions(poisson_orc.model, poisson_orc.geometry, bad)
    assert not rep.checks["A5"].holds
    assert rep.failed("map") == ["A5"]


# -- third-derivative search ---------------------------------------------------------

def test_grid_estimate_not_below_its_samples():
    m = logistic_fixture(500, 3)
    opts = cert.GridOptions(points=200, directions=8)
    c = np.array([0.9, 1.1, 1.0])
    est = cert.grid_third_sup(m, c, 0.4, opts)
    pts = c + 0.4 * cert.ball_design(3, opts.points, opts.seed)
    dirs = cert._directions(3, opts.directions, opts.seed)
    assert est >= np.max(np.abs(m.third_lik(pts, dirs))) / m.n
    assert est <= m.third_deriv_bound_lik(c, 0.4)


def test_grid_ball_design_inside_unit_ball():
    for d in (1, 2, 5):
        pts = cert.ball_design(d, 300, 0)
        assert pts.shape == (300, d)
        assert np.all(np.linalg.norm(pts, axis=1) <= 1 + 1e-12)


def test_grid_method_flagged_uncertified():
    m = logistic_fixture(300, 2)
    orc = cert.ConstantOracle(m, analyze(m), method="grid")
    assert not orc.certified
    assert cert.ConstantOracle(m, analyze(m)).certified


def test_missing_third_derivative_oracle():
    m = poisson_fixture(50)
    bare = dataclasses.replace(m, third_lik=None)
    with pytest.raises(cert.OracleUnavailable):
        cert.grid_third_sup(bare, np.array([1.0]), 0.1)


def test_ladder_rounds_up(poisson_orc):
    m = poisson_orc.model
    orc = cert.ConstantOracle(m, poisson_orc.geometry, method="grid")
    r = 0.123
    rung = orc._ladder(r, orc.radius_cap_mle)
    assert r <= rung < r * cert.LADDER_RATIO * (1 + 1e-12)


def test_weibull_fixture_certifiable():
    m = weibull_fixture(5000)
    orc = cert.ConstantOracle(m, analyze(m))
    for centric in ("map", "mle"):
        _, cs = cert.optimize_radii(orc, "tv", centric)
        assert cert.verify_assumptions(m, orc.geometry, cs).holds(centric)
