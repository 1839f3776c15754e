"""Independent ground truth for posterior moments and distances to the Laplace Gaussian.

Three routes are provided: closed-form conjugate posteriors, adaptive
Gauss-Legendre quadrature for one-dimensional posteriors, and self-normalized
importance sampling for small ``d``. None of them uses the bound machinery.

Distances are reported for the rescaled variable ``u = sqrt(n) (theta - c)``
against ``N(0, J^{-1})``, the scale on which the certified bounds are stated.
Total variation is scale invariant; the 1-Wasserstein distance in ``theta``
units is ``w1_vs_laplace / sqrt(n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special, stats

from .errors import OracleUnavailable
from .model import ModelDescriptor

GL_NODES = 24


@dataclass
class PosteriorTruth:
    """Posterior summaries with an error estimate.

    ``mean`` and ``cov`` are in parameter units. ``tv_vs_laplace`` and
    ``w1_vs_laplace`` are ``None`` when no Laplace reference was supplied.
    """

    mean: np.ndarray
    cov: np.ndarray
    method: str
    error_estimate: float = 0.0
    tv_vs_laplace: Optional[float] = None
    w1_vs_laplace: Optional[float] = None
    ess: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @property
    def variance(self) -> float:
        return float(np.atleast_2d(self.cov)[0, 0])

    @property
    def mean_norm(self) -> float:
        return float(np.linalg.norm(np.atleast_1d(self.mean)))

    @property
    def cov_norm(self) -> float:
        return float(np.linalg.norm(np.atleast_2d(self.cov), 2))

    def to_dict(self) -> dict:
        return {"mean": np.atleast_1d(self.mean).tolist(), "cov": np.atleast_2d(self.cov).tolist(),
                "method": self.method, "error_estimate": self.error_estimate,
                "tv_vs_laplace": self.tv_vs_laplace, "w1_vs_laplace": self.w1_vs_laplace,
                "ess": self.ess}


# ---------------------------------------------------------------------------
# conjugate closed forms
# ---------------------------------------------------------------------------

def conjugate_posterior(family: str, data, hyper: dict):
    """Frozen scipy distribution of the conjugate posterior."""
    x = np.asarray(data, dtype=float).reshape(-1)
    n = x.size
    if family == "poisson_gamma":
        a, b = hyper["alpha"] + x.sum(), hyper["beta"] + n
        return stats.gamma(a, scale=1.0 / b)
    if family == "weibull_invgamma":
        a, b = hyper["alpha"] + n, hyper["beta"] + float(np.sum(x ** hyper["k"]))
        return stats.invgamma(a, scale=b)
    raise OracleUnavailable(f"no conjugate form for {family!r}; use quadrature")


def conjugate_truth(family: str, data, hyper: dict) -> PosteriorTruth:
    """Exact posterior mean and variance for a conjugate family.

    Examples
    --------
    >>> t = conjugate_truth("poisson_gamma", [2, 3, 7], {"alpha": 0.1, "beta": 3.0})
    >>> round(float(t.mean[0]) * 6, 12), round(t.variance * 36, 12)
    (12.1, 12.1)
    """
    post = conjugate_posterior(family, data, hyper)
    mean, var = post.stats(moments="mv")
    return PosteriorTruth(mean=np.array([float(mean)]), cov=np.array([[float(var)]]),
                          method="conjugate", extra={"posterior": post})


def model_conjugate_truth(model: ModelDescriptor) -> PosteriorTruth:
    """Exact mean and variance from the posterior parameters a conjugate model records."""
    spec = model.params.get("posterior")
    if spec is None:
        raise OracleUnavailable(f"no conjugate form for {model.family!r}; use quadrature")
    kind, a, b = spec
    post = stats.gamma(a, scale=1.0 / b) if kind == "gamma" else stats.invgamma(a, scale=b)
    mean, var = post.stats(moments="mv")
    return PosteriorTruth(mean=np.array([float(mean)]), cov=np.array([[float(var)]]),
                          method="conjugate", extra={"posterior": post})


# ---------------------------------------------------------------------------
# one-dimensional quadrature
# ---------------------------------------------------------------------------

_X, _W = np.polynomial.legendre.leggauss(GL_NODES)
_Xh, _Wh = np.polynomial.legendre.leggauss(GL_NODES // 2)


def _vector_logdens(model: ModelDescriptor) -> Callable[[np.ndarray], np.ndarray]:
    vec = model.params.get("logpost_vec")
    if vec is not None:
        return vec
    return np.vectorize(lambda t: model.logpost(np.array([t]))[0], otypes=[float])


def _panel(f, a, b, x=_X, w=_W):
    half = 0.5 * (b - a)
    nodes = a + half * (x + 1.0)
    return half * (f(nodes) @ w)


class _Panels:
    """Adaptive composite Gauss-Legendre rule for vector-valued integrands."""

    def __init__(self, f, edges, tol, max_panels=20000):
        self.f = f
        stack = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
        self.parts = []
        self.err = 0.0
        while stack:
            a, b = stack.pop()
            full = _panel(f, a, b)
            coarse = _panel(f, a, b, _Xh, _Wh)
            e = float(np.max(np.abs(full - coarse)))
            if e > tol and (b - a) > 1e-9 * max(1.0, abs(a)) and len(self.parts) + len(stack) < max_panels:
                m = 0.5 * (a + b)
                stack.extend([(m, b), (a, m)])
                continue
            self.parts.append((a, b, full))
            self.err += e
        self.parts.sort(key=lambda p: p[0])

    @property
    def total(self):
        return sum(p[2] for p in self.parts)

    @property
    def edges(self):
        return [self.parts[0][0]] + [p[1] for p in self.parts]


def _support(model, center, n, J):
    """Integration range in the rescaled variable with tail extension."""
    sigma = 1.0 / math.sqrt(J)
    lower_theta = center - float(model.max_radius(np.array([center])))
    lo_u = -math.inf if not math.isfinite(lower_theta) else (lower_theta - center) * math.sqrt(n)
    return sigma, lo_u


def _extend(logp, start, step, direction, stop_u, peak_log):
    """Extend outward in panels of growing width until the mass increment is negligible."""
    edges = [start]
    width = step
    for _ in range(400):
        a = edges[-1]
        b = a + direction * width
        if direction < 0 and b <= stop_u:
            edges.append(stop_u)
            return edges
        mass = abs(_panel(lambda u: np.exp(logp(u) - peak_log), min(a, b), max(a, b)))
        edges.append(b)
        if mass < 1e-16 and abs(b - start) > 10 * step:
            return edges
        width *= 1.25
    raise OracleUnavailable("tail mass not converging")


def quadrature_truth_1d(model: ModelDescriptor, center: float, J: float, tol: float = 1e-13) -> PosteriorTruth:
    """Posterior moments and distances to ``N(0, 1/J)`` for ``u = sqrt(n)(theta - center)``.

    Panels are centered at ``center``, refined adaptively, and extended into
    the tails until the mass increment drops below ``1e-16`` of the peak
    scale. Total variation splits panels at the density crossings; the
    1-Wasserstein distance integrates ``|F_p - F_q|`` between CDF crossings
    by parts.

    Raises
    ------
    OracleUnavailable
        If the tails do not decay ("tail mass not converging").
    """
    if model.d != 1:
        raise ValueError("quadrature truth requires d = 1")
    n = model.n
    rn = math.sqrt(n)
    center = float(center)
    J = float(J)
    if not J > 0:
        raise ValueError("J must be positive")
    logpost = _vector_logdens(model)
    ref = float(logpost(np.array([center]))[0])
    if not np.isfinite(ref):
        raise ValueError("center outside the posterior support")

    def logp(u):
        return logpost(center + np.asarray(u, dtype=float) / rn) - ref

    sigma, lo_u = _support(model, center, n, J)
    grid = np.linspace(-12 * sigma, 12 * sigma, 1201)
    grid = grid[grid > lo_u]
    peak = float(np.max(logp(grid)))
    core_lo = max(-8 * sigma, lo_u)
    core = list(np.linspace(core_lo, 8 * sigma, 33))
    left = _extend(logp, core_lo, sigma, -1, lo_u, peak) if core_lo > lo_u else [core_lo]
    right = _extend(logp, 8 * sigma, sigma, 1, lo_u, peak)
    edges = sorted(set(left[::-1] + core + right))

    def dens(u):
        return np.exp(logp(u) - peak)

    def moments(u):
        p = dens(u)
        return np.stack([p, u * p, u * u * p])

    mom = _Panels(moments, edges, tol)
    Z, m1, m2 = mom.total
    if not (Z > 0 and np.isfinite(Z)):
        raise OracleUnavailable("tail mass not converging")
    mean_u = m1 / Z
    var_u = m2 / Z - mean_u**2
    log_norm = peak + math.log(Z)
    err_rel = mom.err / Z

    def p_norm(u):
        return np.exp(logp(u) - log_norm)

    def q(u):
        return stats.norm.pdf(u, scale=sigma)

    # total variation: split at the crossings of p and q
    fine = np.array(sorted(set(np.concatenate([np.linspace(a, b, 9) for a, b in zip(mom.edges[:-1], mom.edges[1:])]))))
    diff = p_norm(fine) - q(fine)
    roots = []
    for i in np.nonzero(np.sign(diff[:-1]) * np.sign(diff[1:]) < 0)[0]:
        roots.append(optimize.brentq(lambda u: p_norm(u) - q(u), fine[i], fine[i + 1], xtol=1e-14))
    tv_edges = sorted(set(mom.edges + roots))
    tvp = _Panels(lambda u: np.atleast_2d(np.abs(p_norm(u) - q(u))), tv_edges, tol)
    tv = 0.5 * float(tvp.total[0])

    # 1-Wasserstein: integrate F_p - F_q between its sign changes by parts
    parts = _Panels(lambda u: np.stack([p_norm(u), u * p_norm(u)]), tv_edges, tol).parts
    Fp = np.concatenate([[0.0], np.cumsum([p[2][0] for p in parts])])
    starts = np.array([p[0] for p in parts] + [parts[-1][1]])

    def F_p(x):
        i = int(np.clip(np.searchsorted(starts, x, side="right") - 1, 0, len(parts) - 1))
        a = starts[i]
        return Fp[i] + (float(_panel(p_norm, a, x)) if x > a else 0.0)

    def F_q(x):
        return float(stats.norm.cdf(x, scale=sigma))

    def partial_first(x0, x1):
        return float(_Panels(lambda u: np.atleast_2d(u * (p_norm(u) - q(u))), _breaks(x0, x1, starts), tol).total[0])

    G = Fp - stats.norm.cdf(starts, scale=sigma)
    cross = []
    for i in np.nonzero(np.sign(G[:-1]) * np.sign(G[1:]) < 0)[0]:
        cross.append(optimize.brentq(lambda x: F_p(x) - F_q(x), starts[i], starts[i + 1], xtol=1e-14))
    lo_end, hi_end = starts[0], starts[-1]
    pts = [lo_end] + cross + [hi_end]
    w1 = 0.0
    for x0, x1 in zip(pts[:-1], pts[1:]):
        g0 = -F_q(x0) if x0 == lo_end else F_p(x0) - F_q(x0)
        g1 = F_p(x1) - F_q(x1)
        w1 += abs(x1 * g1 - x0 * g0 - partial_first(x0, x1))
    # the Gaussian CDF outside the integration range, where the posterior has no mass
    zl, zh = lo_end / sigma, hi_end / sigma
    w1 += sigma * (zl * stats.norm.cdf(zl) + stats.norm.pdf(zl))
    w1 += sigma * (stats.norm.pdf(zh) - zh * stats.norm.sf(zh))

    mean = center + mean_u / rn
    var = var_u / n
    err = max(err_rel * (abs(mean) + var), tvp.err)
    return PosteriorTruth(mean=np.array([mean]), cov=np.array([[var]]), method="quadrature",
                          error_estimate=float(err), tv_vs_laplace=tv, w1_vs_laplace=w1,
                          extra={"log_normalizer": log_norm - 0.5 * math.log(n) + ref,
                                 "rescaled_mean": mean_u, "rescaled_var": var_u,
                                 "edges": tv_edges, "center": center, "J": J})


def _breaks(x0, x1, starts):
    inner = [s for s in starts if x0 < s < x1]
    return [x0] + inner + [x1]


def fisher_divergence_truncated(model: ModelDescriptor, center: float, J: float, radius: float,
                                tol: float = 1e-13) -> float:
    """``E_q ||s_p - s_q||^2`` for the rescaled posterior and ``N(0, 1/J)`` truncated to ``|u| <= radius sqrt(n)``.

    The expectation is under the truncated Gaussian. Truncation does not change
    the scores inside the ball, so ``s_p(u) = (L + log pi)'(center + u/sqrt(n)) / sqrt(n)``.
    """
    if model.d != 1:
        raise ValueError("d = 1 required")
    n = model.n
    rn = math.sqrt(n)
    R = radius * rn
    sigma = 1.0 / math.sqrt(J)

    def score(u):
        return np.array([model.logpost(np.array([center + x / rn]))[1][0] / rn for x in np.atleast_1d(u)])

    def integrand(u):
        return np.atleast_2d((score(u) + J * u) ** 2 * stats.norm.pdf(u, scale=sigma))

    edges = list(np.linspace(-R, R, 17))
    val = float(_Panels(integrand, edges, tol).total[0])
    mass = float(stats.norm.cdf(R, scale=sigma) - stats.norm.cdf(-R, scale=sigma))
    return val / mass


def expectation_1d(truth: PosteriorTruth, model: ModelDescriptor, g: Callable, tol: float = 1e-13) -> float:
    """``E g(u)`` under the rescaled posterior recorded in a quadrature truth."""
    ex = truth.extra
    rn = math.sqrt(model.n)
    logpost = _vector_logdens(model)
    center = ex["center"]
    log_norm_u = ex["log_normalizer"] + 0.5 * math.log(model.n)

    def f(u):
        return np.atleast_2d(g(u) * np.exp(logpost(center + u / rn) - log_norm_u))

    return float(_Panels(f, ex["edges"], tol).total[0])


def laplace_reference(geometry, centric: str) -> tuple:
    """``(center, J)`` of the Laplace Gaussian for a centric."""
    if centric == "map":
        return geometry.map.theta, geometry.curv_map.J
    if centric == "mle":
        return geometry.mle.theta, geometry.curv_mle.J
    raise ValueError(f"unknown centric {centric!r}")


# ---------------------------------------------------------------------------
# importance sampling
# ---------------------------------------------------------------------------

def importance_truth_md(model: ModelDescriptor, center, J, samples: int = 20000, seed: int = 0,
                        inflation: float = 2.0, min_ess_fraction: float = 0.05) -> PosteriorTruth:
    """Self-normalized importance estimates of the posterior mean and covariance.

    The proposal is the Laplace Gaussian ``N(center, J^{-1}/n)`` with its scale
    multiplied by ``inflation``.

    Raises
    ------
    ValueError
        If the effective sample size falls below ``min_ess_fraction * samples``.
    """
    d = model.d
    if d > 8:
        raise OracleUnavailable("importance oracle limited to d <= 8")
    batch = model.params.get("logpost_batch")
    if batch is None:
        batch = lambda T: np.array([model.logpost(t)[0] for t in T])
    center = np.asarray(center, dtype=float).reshape(d)
    cov = inflation**2 * np.linalg.inv(np.atleast_2d(J)) / model.n
    cov = 0.5 * (cov + cov.T)
    rng = np.random.default_rng(seed)
    prop = stats.multivariate_normal(mean=center, cov=cov)
    T = prop.rvs(size=samples, random_state=rng).reshape(samples, d)
    logw = batch(T) - prop.logpdf(T).reshape(samples)
    logw -= special.logsumexp(logw)
    w = np.exp(logw)
    ess = 1.0 / float(np.sum(w * w))
    if ess < min_ess_fraction * samples:
        raise ValueError("proposal mismatch; increase inflation")
    mean = w @ T
    R = T - mean
    C = (R * w[:, None]).T @ R
    # delta-method standard error of each mean coordinate
    se = np.sqrt(np.sum((w[:, None] * R) ** 2, axis=0))
    return PosteriorTruth(mean=mean, cov=C, method="importance", error_estimate=float(np.max(se)),
                          ess=ess, extra={"samples": samples, "seed": seed, "se": se})
