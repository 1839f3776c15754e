"""Model descriptors for generalized posteriors and the built-in model families.

A model is described by its log-likelihood ``L_n`` and log-prior ``log pi``
(with first and second derivatives) together with optional analytic oracles
for the constants the certificates need: third-derivative bounds on balls,
prior envelopes, prior tail moments and likelihood optimality gaps.

Four families are provided with closed-form oracles:

* Poisson likelihood with a gamma prior (shape < 1),
* Weibull likelihood with known shape and an inverse-gamma prior on the scale,
* logistic regression with a multivariate Student's t prior,
* logistic regression with a standard Gaussian prior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special

from .errors import ModeNotFound, OracleUnavailable

Evaluator = Callable[[np.ndarray], tuple]
RadiusOracle = Callable[[np.ndarray, float], float]

# max over z of |rho'''(z)| for rho(z) = log(1 + e^{-z}), attained at z = log(2 +- sqrt 3)
LOGISTIC_THIRD_MAX = 1.0 / (6.0 * math.sqrt(3.0))
# max over z of |rho''''(z)|, attained at z = 0
LOGISTIC_FOURTH_MAX = 0.125


@dataclass(frozen=True)
class ModelDescriptor:
    """Evaluators and constant oracles for a generalized posterior.

    Parameters
    ----------
    d, n : int
        Parameter dimension and number of observations.
    loglik : callable
        ``theta -> (value, gradient, hessian)`` of ``L_n``. Returns a value of
        ``-inf`` outside the parameter support.
    logprior : callable
        ``theta -> (value, gradient, hessian)`` of ``log pi``.
    third_deriv_bound_lik, third_deriv_bound_post : callable, optional
        ``(center, radius) -> M`` with ``sup ||L'''||* / n <= M`` over the
        closed ball, for the likelihood and the log-posterior respectively.
    prior_envelope_oracle : callable, optional
        ``(center, radius) -> (M1, M1_tilde, M1_hat)``.
    prior_tail_moment : callable, optional
        ``(center, exclusion_radius, p) -> bound`` on the prior integral of
        ``||v - center||^p`` outside the ball.
    optimality_gap_oracle : callable, optional
        ``(mle, exclusion_radius) -> kappa`` with
        ``sup_{||t - mle|| > r} (L_n(t) - L_n(mle)) / n <= -kappa``.
    third_lik : callable, optional
        ``(thetas (P, d), dirs (K, d)) -> (P, K)`` array of ``L_n'''(theta)[u, u, u]``.
    third_lik_vec : callable, optional
        ``(theta, u) -> L_n'''(theta)[u, u, .]`` as a length-``d`` vector.
    prior_third_bound : callable, optional
        ``(center, radius) -> sup ||(log pi)'''||*`` over the ball (not scaled by ``n``).
    fourth_lik_bound : float, optional
        Global bound on ``||L_n''''||* / n``; used as a Lipschitz slack by the
        grid third-derivative search.
    likelihood_concave : bool
        Whether ``L_n`` is concave on its whole domain.
    max_radius : callable
        ``center -> radius`` beyond which balls leave the parameter support.
    init : ndarray, optional
        Default starting point for mode searches.
    mle_check : callable, optional
        Raises :class:`ModeNotFound` when no maximum likelihood estimate exists.
    """

    d: int
    n: int
    loglik: Evaluator
    logprior: Evaluator
    third_deriv_bound_lik: Optional[RadiusOracle] = None
    third_deriv_bound_post: Optional[RadiusOracle] = None
    prior_envelope_oracle: Optional[Callable] = None
    prior_tail_moment: Optional[Callable] = None
    optimality_gap_oracle: Optional[Callable] = None
    third_lik: Optional[Callable] = None
    third_lik_vec: Optional[Callable] = None
    prior_third_bound: Optional[RadiusOracle] = None
    fourth_lik_bound: Optional[float] = None
    likelihood_concave: bool = False
    max_radius: Callable[[np.ndarray], float] = field(default=lambda c: math.inf)
    init: Optional[np.ndarray] = None
    mle_check: Optional[Callable[[], None]] = None
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.d) < 1 or int(self.d) != self.d:
            raise ValueError("d must be a positive integer")
        if int(self.n) < 1 or int(self.n) != self.n:
            raise ValueError("n must be a positive integer")

    def logpost(self, theta):
        """Value, gradient and Hessian of ``L_n + log pi``."""
        v1, g1, h1 = self.loglik(theta)
        if not np.isfinite(v1):
            return -math.inf, g1, h1
        v2, g2, h2 = self.logprior(theta)
        return v1 + v2, g1 + g2, h1 + h2

    def objective(self, which: str):
        if which == "likelihood":
            return self.loglik
        if which == "posterior":
            return self.logpost
        raise ValueError(f"unknown objective {which!r}")

    def default_init(self) -> np.ndarray:
        if self.init is not None:
            return np.array(self.init, dtype=float)
        return np.zeros(self.d)


def _as1(theta) -> float:
    return float(np.asarray(theta, dtype=float).reshape(-1)[0])


def _scalar_eval(f0, f1, f2, lower=0.0):
    """Wrap scalar value/derivative functions on ``(lower, inf)`` as an evaluator."""

    def ev(theta):
        t = _as1(theta)
        if not t > lower:
            return -math.inf, np.full(1, np.nan), np.full((1, 1), np.nan)
        return float(f0(t)), np.array([f1(t)]), np.array([[f2(t)]])

    return ev


def _positive_vec(f):
    """Vectorize ``f`` on ``t > 0`` with ``-inf`` elsewhere."""

    def vec(t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, -np.inf)
        ok = t > 0
        out[ok] = f(t[ok])
        return out

    return vec


def _interval(center, radius):
    c = _as1(center)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    a, b = c - radius, c + radius
    if a <= 0:
        raise OracleUnavailable(
            f"ball [{a:.6g}, {b:.6g}] leaves the positive half-line; radius must be < center")
    return a, b


def _max_abs_on_interval(f, a, b, critical=()):
    """max |f| over [a, b] given the interior critical points of f."""
    pts = [a, b] + [t for t in critical if a < t < b]
    return max(abs(f(t)) for t in pts)


def _unimodal_gap(loglik, n, lower=0.0):
    """Optimality gap of a unimodal 1-D log-likelihood by two-endpoint evaluation.

    For unimodal ``L_n`` the sup outside ``[m - r, m + r]`` is attained at an
    endpoint, so ``kappa = -max_{+-} (L_n(m +- r) - L_n(m)) / n``.
    """

    def gap(mle, radius):
        m = _as1(mle)
        if radius <= 0:
            raise ValueError("exclusion radius must be positive")
        base = loglik(np.array([m]))[0]
        vals = [loglik(np.array([m + radius]))[0]]
        if m - radius > lower:
            vals.append(loglik(np.array([m - radius]))[0])
        return -max(v - base for v in vals) / n

    return gap


def _scalar_third(fun):
    def third(thetas, dirs):
        t = np.asarray(thetas, dtype=float)[:, 0]
        u = np.asarray(dirs, dtype=float)[:, 0]
        return fun(t)[:, None] * u[None, :] ** 3

    def third_vec(theta, u):
        return np.array([fun(np.array([_as1(theta)]))[0] * _as1(u) ** 2])

    return third, third_vec


def _clean_1d(data, name):
    x = np.asarray(data, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError(f"{name}: empty data")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name}: data must be finite")
    if np.any(x < 0):
        raise ValueError(f"{name}: data must be nonnegative")
    return x


# ---------------------------------------------------------------------------
# gamma / inverse-gamma helpers
# ---------------------------------------------------------------------------

def gamma_logpdf(t, shape, rate):
    return shape * math.log(rate) - special.gammaln(shape) + (shape - 1) * math.log(t) - rate * t


def invgamma_logpdf(t, shape, scale):
    return shape * math.log(scale) - special.gammaln(shape) - (shape + 1) * math.log(t) - scale / t


def gamma_moment(shape, rate, center, p):
    """Full-space moment E|v - center|^p for v ~ Gamma(shape, rate)."""
    mean = shape / rate
    if p == 2:
        return shape / rate**2 + (mean - center) ** 2
    if p == 1:
        if center <= 0:
            return mean - center
        below = center * special.gammainc(shape, rate * center) - mean * special.gammainc(
            shape + 1, rate * center)
        return (mean - center) + 2.0 * max(below, 0.0)
    raise ValueError("p must be 1 or 2")


def invgamma_moment(shape, scale, center, p):
    """Full-space moment E|v - center|^p for v ~ InvGamma(shape, scale)."""
    if shape <= p:
        raise OracleUnavailable(
            "second tail moment infinite" if p == 2 else "W1 bound infinite: prior mean does not exist")
    mean = scale / (shape - 1)
    if p == 2:
        return mean**2 / (shape - 2) + (mean - center) ** 2
    if center <= 0:
        return mean - center
    # P(v <= c) for InvGamma(a, b) is Q(a, b / c); E[v 1{v <= c}] = mean * P_{a-1}(v <= c)
    below = center * special.gammaincc(shape, scale / center) - mean * special.gammaincc(
        shape - 1, scale / center)
    return (mean - center) + 2.0 * max(below, 0.0)


# ---------------------------------------------------------------------------
# Poisson likelihood, gamma prior
# ---------------------------------------------------------------------------

def poisson_gamma_model(data, alpha: float, beta: float) -> ModelDescriptor:
    """Poisson likelihood with a Gamma(alpha, rate beta) prior, ``alpha < 1``.

    ``L_n(t) = -n t + S log t - sum log Gamma(X_i + 1)`` with ``S = sum X_i``.
    The MLE is the sample mean and the MAP is ``(S + alpha - 1) / (n + beta)``.

    Examples
    --------
    >>> m = poisson_gamma_model([2, 3, 7], 0.1, 3.0)
    >>> m.params["mle"], round(m.params["map"], 6)
    (4.0, 1.85)
    """
    x = _clean_1d(data, "poisson_gamma")
    if not alpha > 0 or not beta > 0:
        raise ValueError("alpha and beta must be positive")
    if alpha >= 1:
        raise ValueError("analytic envelope valid only for shape < 1")
    S = float(x.sum())
    if S <= 0:
        raise ValueError("poisson_gamma: all-zero data (no interior MLE)")
    n = x.size
    const = -float(special.gammaln(x + 1).sum())
    log_norm = alpha * math.log(beta) - special.gammaln(alpha)

    loglik = _scalar_eval(lambda t: -n * t + S * math.log(t) + const,
                          lambda t: -n + S / t,
                          lambda t: -S / t**2)
    logprior = _scalar_eval(lambda t: log_norm + (alpha - 1) * math.log(t) - beta * t,
                            lambda t: (alpha - 1) / t - beta,
                            lambda t: -(alpha - 1) / t**2)

    # L''' = 2S/t^3 and L''' + (log pi)''' = 2(S + alpha - 1)/t^3 are monotone in t
    def m2_lik(center, radius):
        a, _ = _interval(center, radius)
        return 2.0 * S / (n * a**3)

    def m2_post(center, radius):
        a, b = _interval(center, radius)
        k = 2.0 * (S + alpha - 1)
        return max(abs(k) / a**3, abs(k) / b**3) / n

    def prior_third(center, radius):
        a, _ = _interval(center, radius)
        return 2.0 * abs(alpha - 1) / a**3

    def envelope(center, radius):
        # both terms of |pi'| = K t^{alpha-2} e^{-beta t}[(1-alpha) + beta t] decrease in t
        a, b = _interval(center, radius)
        log_pi_a = gamma_logpdf(a, alpha, beta)
        log_pi_b = gamma_logpdf(b, alpha, beta)
        log_dpi_a = log_pi_a - math.log(a) + math.log((1 - alpha) + beta * a)
        M1_hat = math.exp(-log_pi_b)
        M1_tilde = math.exp(log_pi_a)
        M1 = math.exp(log_dpi_a - log_pi_b)
        return M1, M1_tilde, M1_hat

    def tail_moment(center, radius, p):
        return gamma_moment(alpha, beta, _as1(center), p)

    third, third_vec = _scalar_third(lambda t: 2.0 * S / t**3)
    xbar = S / n
    return ModelDescriptor(
        d=1, n=n, loglik=loglik, logprior=logprior,
        third_deriv_bound_lik=m2_lik, third_deriv_bound_post=m2_post,
        prior_envelope_oracle=envelope, prior_tail_moment=tail_moment,
        optimality_gap_oracle=_unimodal_gap(loglik, n),
        third_lik=third, third_lik_vec=third_vec, prior_third_bound=prior_third,
        likelihood_concave=True, max_radius=lambda c: _as1(c),
        init=np.array([xbar]), family="poisson_gamma",
        params={"alpha": alpha, "beta": beta, "S": S, "mle": xbar,
                "map": (S + alpha - 1) / (n + beta),
                "posterior": ("gamma", alpha + S, beta + n),
                "logprior_vec": _positive_vec(lambda t: log_norm + (alpha - 1) * np.log(t) - beta * t),
                "logpost_vec": _positive_vec(lambda t: -(n + beta) * t + (S + alpha - 1) * np.log(t)
                                             + const + log_norm)},
    )


def poisson_kappa(c: float, xbar: float) -> float:
    """Closed-form Poisson optimality gap ``[c - log(1 + c)] * xbar`` at ``delta = c * xbar``."""
    return (c - math.log1p(c)) * xbar


# ---------------------------------------------------------------------------
# Weibull likelihood with known shape, inverse-gamma prior on the scale
# ---------------------------------------------------------------------------

def weibull_invgamma_model(data, k: float, alpha: float, beta: float) -> ModelDescriptor:
    """Weibull likelihood with known shape ``k`` and an InvGamma(alpha, beta) prior.

    The scale parameter ``t`` enters as ``f(x) = (k/t) x^{k-1} exp(-x^k / t)``, so
    ``L_n(t) = n log k - n log t + (k - 1) sum log X_i - S / t`` with
    ``S = sum X_i^k``. The additive constant is dropped when a datum is zero.
    """
    x = _clean_1d(data, "weibull_invgamma")
    if not (k > 0 and alpha > 0 and beta > 0):
        raise ValueError("k, alpha and beta must be positive")
    xk = x**k
    S = float(xk.sum())
    if S <= 0:
        raise ValueError("weibull_invgamma: sum of data^k must be positive")
    n = x.size
    with np.errstate(divide="ignore"):
        const = n * math.log(k) + (k - 1) * float(np.log(x).sum())
    if not np.isfinite(const):
        const = 0.0
    log_norm = alpha * math.log(beta) - special.gammaln(alpha)

    loglik = _scalar_eval(lambda t: const - n * math.log(t) - S / t,
                          lambda t: -n / t + S / t**2,
                          lambda t: n / t**2 - 2 * S / t**3)
    logprior = _scalar_eval(lambda t: log_norm - (alpha + 1) * math.log(t) - beta / t,
                            lambda t: -(alpha + 1) / t + beta / t**2,
                            lambda t: (alpha + 1) / t**2 - 2 * beta / t**3)

    def third_fn(nn, ss):
        return lambda t: -2.0 * nn / t**3 + 6.0 * ss / t**4

    lik3 = third_fn(n, S)
    post3 = third_fn(n + alpha + 1, S + beta)
    prior3 = third_fn(alpha + 1, beta)

    # the fourth derivative of each vanishes only at 4 * ss / nn
    def m2_lik(center, radius):
        a, b = _interval(center, radius)
        return _max_abs_on_interval(lik3, a, b, [4 * S / n]) / n

    def m2_post(center, radius):
        a, b = _interval(center, radius)
        return _max_abs_on_interval(post3, a, b, [4 * (S + beta) / (n + alpha + 1)]) / n

    def prior_third(center, radius):
        a, b = _interval(center, radius)
        return _max_abs_on_interval(prior3, a, b, [4 * beta / (alpha + 1)])

    def envelope(center, radius):
        a, b = _interval(center, radius)
        mode = beta / (alpha + 1)
        M1_hat = math.exp(-min(invgamma_logpdf(a, alpha, beta), invgamma_logpdf(b, alpha, beta)))
        M1_tilde = math.exp(invgamma_logpdf(min(max(mode, a), b), alpha, beta))
        # (log pi)' = beta/t^2 - (alpha+1)/t has its extremum at 2 beta / (alpha + 1)
        score = lambda t: beta / t**2 - (alpha + 1) / t
        M1 = _max_abs_on_interval(score, a, b, [2 * beta / (alpha + 1)])
        return M1, M1_tilde, M1_hat

    def tail_moment(center, radius, p):
        return invgamma_moment(alpha, beta, _as1(center), p)

    third, third_vec = _scalar_third(lik3)
    mle = S / n
    return ModelDescriptor(
        d=1, n=n, loglik=loglik, logprior=logprior,
        third_deriv_bound_lik=m2_lik, third_deriv_bound_post=m2_post,
        prior_envelope_oracle=envelope, prior_tail_moment=tail_moment,
        optimality_gap_oracle=_unimodal_gap(loglik, n),
        third_lik=third, third_lik_vec=third_vec, prior_third_bound=prior_third,
        likelihood_concave=False, max_radius=lambda c: _as1(c),
        init=np.array([mle]), family="weibull_invgamma",
        params={"k": k, "alpha": alpha, "beta": beta, "S": S, "mle": mle,
                "map": (beta + S) / (n + alpha + 1),
                "posterior": ("invgamma", alpha + n, beta + S),
                "logprior_vec": _positive_vec(lambda t: log_norm - (alpha + 1) * np.log(t) - beta / t),
                "logpost_vec": _positive_vec(lambda t: const + log_norm - (n + alpha + 1) * np.log(t)
                                             - (S + beta) / t)},
    )


# ---------------------------------------------------------------------------
# logistic regression
# ---------------------------------------------------------------------------

def _check_logistic_data(X, Y):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if X.shape[0] != Y.size or X.shape[0] == 0:
        raise ValueError("logistic: X and Y must have the same positive number of rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("logistic: data must be finite")
    if not np.all(np.isin(Y, (-1.0, 1.0))):
        raise ValueError("logistic: labels must be -1 or +1")
    return X, Y


def _sigmoid(z):
    return special.expit(z)


def logistic_loglik(X, Y):
    """Evaluator of ``L_n(t) = -sum log(1 + exp(-Y_i X_i't))``."""
    Z = X * Y[:, None]

    def ev(theta):
        z = Z @ np.asarray(theta, dtype=float)
        value = -float(np.logaddexp(0.0, -z).sum())
        s_neg = _sigmoid(-z)
        grad = Z.T @ s_neg
        w = s_neg * _sigmoid(z)
        hess = -(X.T * w) @ X
        return value, grad, 0.5 * (hess + hess.T)

    return ev


def logistic_third(X, Y):
    """Directional third derivatives of the logistic log-likelihood."""
    Z = X * Y[:, None]

    def coef(theta_rows):
        # L'''[u,u,u] = -sum rho'''(z_i) y_i (x_i'u)^3 with
        # rho''' = s(z)s(-z)(s(-z) - s(z)) = -(1 - t^2) t / 4, t = tanh(z / 2)
        t = theta_rows @ Z.T  # (P, n)
        t *= 0.5
        np.tanh(t, out=t)
        c = t * t
        np.subtract(1.0, c, out=c)
        c *= t
        c *= 0.25 * Y[None, :]
        return c

    def third(thetas, dirs, rows: int = 64):
        thetas = np.atleast_2d(thetas)
        proj3 = (X @ np.atleast_2d(dirs).T) ** 3  # (n, K)
        out = np.empty((thetas.shape[0], proj3.shape[1]))
        for i in range(0, thetas.shape[0], rows):
            out[i:i + rows] = coef(thetas[i:i + rows]) @ proj3
        return out

    last = {}

    def third_vec(theta, u):
        key = np.asarray(theta, dtype=float).tobytes()
        if last.get("key") != key:
            # power iterations revisit the same point with new directions
            last["key"], last["c"] = key, coef(np.atleast_2d(theta))[0]
        proj = X @ np.asarray(u, dtype=float)
        return X.T @ (last["c"] * proj**2)

    return third, third_vec


def logistic_m2(X) -> float:
    """Global bound ``(1 / (6 sqrt 3 n)) sum ||X_k||^3`` on ``||L_n'''||* / n``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    norms = np.linalg.norm(X, axis=1)
    return LOGISTIC_THIRD_MAX * float(np.sum(norms**3)) / X.shape[0]


def logistic_loglik_batch(X, Y, chunk_cells: int = 4_000_000):
    """``thetas (S, d) -> (S,)`` log-likelihood values, chunked over ``S``."""
    Z = X * Y[:, None]

    def batch(thetas):
        T = np.atleast_2d(np.asarray(thetas, dtype=float))
        out = np.empty(T.shape[0])
        step = max(1, chunk_cells // Z.shape[0])
        for i in range(0, T.shape[0], step):
            out[i:i + step] = -np.logaddexp(0.0, -(T[i:i + step] @ Z.T)).sum(axis=1)
        return out

    return batch


def _separability_check(X, Y):
    """Raise when the data are linearly separable (no finite MLE)."""

    def check():
        Z = X * Y[:, None]
        n, d = Z.shape
        # separable (weakly) iff some t != 0 has Z t >= 0; search t with Z t >= 1 first
        res = optimize.linprog(np.zeros(d), A_ub=-Z, b_ub=-np.ones(n),
                               bounds=[(None, None)] * d, method="highs")
        if res.status == 0:
            raise ModeNotFound("MLE does not exist (separable data)")

    return check


def _logistic_common(X, Y):
    X, Y = _check_logistic_data(X, Y)
    n, d = X.shape
    third, third_vec = logistic_third(X, Y)
    m2 = logistic_m2(X)
    fourth = LOGISTIC_FOURTH_MAX * float(np.sum(np.linalg.norm(X, axis=1) ** 4)) / n
    return X, Y, n, d, third, third_vec, m2, fourth


def student_t_lognorm(nu, Sigma):
    d = Sigma.shape[0]
    _, logdet = np.linalg.slogdet(Sigma)
    return (special.gammaln((nu + d) / 2) - special.gammaln(nu / 2)
            - 0.5 * d * math.log(nu * math.pi) - 0.5 * logdet)


def logistic_t_model(X, Y, mu=None, Sigma=None, nu: float = 4.0) -> ModelDescriptor:
    """Logistic regression with a multivariate Student's t prior.

    ``pi(t) = C (1 + (t - mu)' Sigma^{-1} (t - mu) / nu)^{-(nu + d)/2}``.
    """
    X, Y, n, d, third, third_vec, m2, fourth = _logistic_common(X, Y)
    mu = np.zeros(d) if mu is None else np.asarray(mu, dtype=float).reshape(d)
    Sigma = np.eye(d) if Sigma is None else np.asarray(Sigma, dtype=float).reshape(d, d)
    if not nu > 0:
        raise ValueError("nu must be positive")
    if not np.allclose(Sigma, Sigma.T):
        raise ValueError("Sigma must be symmetric")
    sig_eigs = np.linalg.eigvalsh(Sigma)
    if sig_eigs[0] <= 0:
        raise ValueError("Sigma must be positive definite")
    A = np.linalg.inv(Sigma)
    A = 0.5 * (A + A.T)
    lam_sigma = float(sig_eigs[0])
    # operator norm of the matrix G = 2 Sigma^{-1}
    g_norm = 2.0 / lam_sigma
    log_norm = student_t_lognorm(nu, Sigma)
    loglik = logistic_loglik(X, Y)
    lik_batch = logistic_loglik_batch(X, Y)

    def prior_batch(T):
        R = np.atleast_2d(T) - mu
        return log_norm - 0.5 * (nu + d) * np.log1p(np.einsum("ij,jk,ik->i", R, A, R) / nu)

    def logprior(theta):
        r = np.asarray(theta, dtype=float) - mu
        Ar = A @ r
        s = nu + r @ Ar
        value = log_norm - 0.5 * (nu + d) * math.log(s / nu)
        grad = -(nu + d) * Ar / s
        hess = -(nu + d) * (A / s - 2.0 * np.outer(Ar, Ar) / s**2)
        return value, grad, 0.5 * (hess + hess.T)

    def prior_third_at(theta, u):
        r = np.asarray(theta, dtype=float) - mu
        s = nu + r @ A @ r
        a = 2.0 * r @ A @ u
        b = u @ A @ u
        return (nu + d) * (3 * a * b / s**2 - a**3 / s**3)

    # whitened: |third| <= (nu + d) lam_sigma^{-3/2} [6x/(nu + x^2)^2 + 8x^3/(nu + x^2)^3],
    # whose two terms peak at x^2 = nu/3 and x^2 = nu
    global_third = (nu + d) * lam_sigma**-1.5 * (27.0 / 8.0 * math.sqrt(nu / 3.0) / nu**2 + nu**-1.5)

    def prior_third(center, radius):
        rho = max(1.0, radius) + float(np.linalg.norm(np.asarray(center) - mu))
        local = (nu + d) * (3 * g_norm**2 * rho / nu**2 + 2 * g_norm**3 * rho**3 / nu**3)
        return min(local, global_third)

    def m2_lik(center, radius):
        return m2

    def m2_post(center, radius):
        return m2 + prior_third(center, radius) / n

    def envelope(center, radius):
        dist = float(np.linalg.norm(np.asarray(center) - mu))
        M1 = (nu + d) * (radius + dist) / (nu * lam_sigma)
        M1_tilde = math.exp(log_norm)
        M1_hat = math.exp(-log_norm + 0.5 * (nu + d) * math.log1p(
            (radius + dist) ** 2 / (nu * lam_sigma)))
        return M1, M1_tilde, M1_hat

    def tail_moment(center, radius, p):
        dist = float(np.linalg.norm(np.asarray(center) - mu))
        tr = float(np.trace(Sigma))
        if p == 1:
            if nu <= 1:
                raise OracleUnavailable("W1 bound infinite: t prior needs nu > 1")
            scale = math.exp(0.5 * math.log(nu / 2) + special.gammaln((nu - 1) / 2)
                             - special.gammaln(nu / 2))
            return dist + math.sqrt(tr) * scale
        if p == 2:
            if nu <= 2:
                raise OracleUnavailable("second tail moment infinite: t prior needs nu > 2")
            return tr * nu / (nu - 2) + dist**2
        raise ValueError("p must be 1 or 2")

    return ModelDescriptor(
        d=d, n=n, loglik=loglik, logprior=logprior,
        third_deriv_bound_lik=m2_lik, third_deriv_bound_post=m2_post,
        prior_envelope_oracle=envelope, prior_tail_moment=tail_moment,
        optimality_gap_oracle=None, third_lik=third, third_lik_vec=third_vec,
        prior_third_bound=prior_third, fourth_lik_bound=fourth,
        likelihood_concave=True, init=np.zeros(d), mle_check=_separability_check(X, Y),
        family="logistic_t",
        params={"nu": nu, "mu": mu, "Sigma": Sigma, "prior_third_at": prior_third_at,
                "loglik_batch": lik_batch, "logpost_batch": lambda T: lik_batch(T) + prior_batch(T)},
    )


def logistic_gaussian_model(X, Y) -> ModelDescriptor:
    """Logistic regression with the standard Gaussian prior ``N(0, I)``."""
    X, Y, n, d, third, third_vec, m2, fourth = _logistic_common(X, Y)
    loglik = logistic_loglik(X, Y)
    lik_batch = logistic_loglik_batch(X, Y)
    log_norm = -0.5 * d * math.log(2 * math.pi)

    def logprior(theta):
        t = np.asarray(theta, dtype=float)
        return log_norm - 0.5 * float(t @ t), -t.copy(), -np.eye(d)

    def envelope(center, radius):
        c = float(np.linalg.norm(center))
        M1 = c + radius
        M1_tilde = math.exp(log_norm - 0.5 * max(0.0, c - radius) ** 2)
        M1_hat = math.exp(-log_norm + 0.5 * (c + radius) ** 2)
        return M1, M1_tilde, M1_hat

    def tail_moment(center, radius, p):
        c = float(np.linalg.norm(center))
        if p == 2:
            return d + c**2
        if p == 1:
            return c + math.sqrt(2.0) * math.exp(special.gammaln((d + 1) / 2) - special.gammaln(d / 2))
        raise ValueError("p must be 1 or 2")

    return ModelDescriptor(
        d=d, n=n, loglik=loglik, logprior=logprior,
        third_deriv_bound_lik=lambda c, r: m2, third_deriv_bound_post=lambda c, r: m2,
        prior_envelope_oracle=envelope, prior_tail_moment=tail_moment,
        third_lik=third, third_lik_vec=third_vec, prior_third_bound=lambda c, r: 0.0,
        fourth_lik_bound=fourth, likelihood_concave=True, init=np.zeros(d),
        mle_check=_separability_check(X, Y), family="logistic_gaussian",
        params={"loglik_batch": lik_batch,
                "logpost_batch": lambda T: lik_batch(T) + log_norm - 0.5 * np.sum(np.atleast_2d(T) ** 2, axis=1)},
    )


FAMILIES = ("poisson_gamma", "weibull_invgamma", "logistic_t", "logistic_gaussian")


def build_model(family: str, data, hyper: dict) -> ModelDescriptor:
    """Instantiate a built-in family from a data table and hyperparameters.

    For the 1-D families ``data`` is a vector; for logistic families it is a
    table whose last column holds the labels.
    """
    hyper = dict(hyper or {})
    if family == "poisson_gamma":
        return poisson_gamma_model(np.asarray(data).reshape(-1), hyper["alpha"], hyper["beta"])
    if family == "weibull_invgamma":
        return weibull_invgamma_model(np.asarray(data).reshape(-1), hyper["k"], hyper["alpha"],
                                      hyper["beta"])
    table = np.atleast_2d(np.asarray(data, dtype=float))
    X, Y = table[:, :-1], table[:, -1]
    if family == "logistic_t":
        d = X.shape[1]
        Sigma = hyper.get("Sigma")
        if Sigma is None:
            Sigma = np.eye(d) * float(hyper.get("sigma2", 1.0))
        return logistic_t_model(X, Y, mu=hyper.get("mu"), Sigma=Sigma, nu=float(hyper.get("nu", 4.0)))
    if family == "logistic_gaussian":
        return logistic_gaussian_model(X, Y)
    raise ValueError(f"unknown model family {family!r}; expected one of {FAMILIES}")
