import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lapcert.bounds import synthetic_geometry
from lapcert.certificates import ConstantSet
from lapcert.datasets import DataRecipe, generate
from lapcert.model import build_model

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

POISSON_HYPER = {"alpha": 0.1, "beta": 3.0}
WEIBULL_HYPER = {"k": 0.5, "alpha": 3.0, "beta": 10.0}
EXP10 = DataRecipe("exponential", {"scale": 10.0})
WEIBULL_DATA = DataRecipe("weibull", {"shape": 0.5, "scale": 1.0})


def poisson_fixture(n, seed=0):
    return build_model("poisson_gamma", generate(EXP10, n, seed), POISSON_HYPER)


def weibull_fixture(n, seed=0):
    return build_model("weibull_invgamma", generate(WEIBULL_DATA, n, seed), WEIBULL_HYPER)


def logistic_fixture(n, d, family="logistic_t", seed=0, **hyper):
    table = generate(DataRecipe("logistic", {"theta": [1.0] * d}), n, seed)
    return build_model(family, table, hyper or ({"nu": 4.0} if family == "logistic_t" else {}))


def fd_gradient(f, x, h):
    """Five-point central difference of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
    return g


def fd_jacobian(F, x, h):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((-F(x + 2 * e) + 8 * F(x + e) - 8 * F(x - e) + F(x - 2 * e)) / (12 * h))
    return np.column_stack(cols)


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def random_points(model, k, rng):
    """Points where the evaluators are finite, spread around the likelihood mode."""
    if model.family in ("poisson_gamma", "weibull_invgamma"):
        m = float(model.params["mle"])
        return [np.array([v]) for v in rng.uniform(0.3 * m, 3.0 * m, k)]
    return [rng.normal(0.0, 1.0, model.d) for _ in range(k)]


def random_spd(rng, d, lo=0.5, hi=5.0):
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    return (Q * rng.uniform(lo, hi, d)) @ Q.T


def synthetic_constants(d, n, seed=0, M1_hat=1e3, spread=3.0):
    """A feasible constant set on random SPD curvatures, radii a fixed multiple of the Gaussian scale."""
    rng = np.random.default_rng(seed)
    J = random_spd(rng, d)
    geo = synthetic_geometry(J, J + 0.01 * np.eye(d))
    cm, cb = geo.curv_mle, geo.curv_map
    delta = spread * math.sqrt(cm.trace_inv / n)
    delta_bar = spread * math.sqrt(cb.trace_inv / n)
    M2 = 0.25 * cm.lambda_min / delta
    M2_bar = 0.25 * cb.lambda_min / delta_bar
    c = ConstantSet(centric="map", delta=delta, M1=2.0, M1_tilde=1.5, M1_hat=M1_hat, M2=M2,
                    kappa=0.1 * cm.lambda_min * delta**2, delta_bar=delta_bar, M2_bar=M2_bar,
                    kappa_bar=0.1 * cb.lambda_min * delta_bar**2)
    return c, geo


def all_models():
    return {
        "poisson_gamma": poisson_fixture(200),
        "weibull_invgamma": weibull_fixture(200),
        "logistic_t": logistic_fixture(200, 3),
        "logistic_gaussian": logistic_fixture(200, 3, family="logistic_gaussian"),
    }


@pytest.fixture(scope="session")
def models():
    return all_models()


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
