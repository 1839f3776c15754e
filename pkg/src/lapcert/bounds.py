"""Closed-form error bounds for the Laplace approximation.

Every bound is the sum of an inner term (log-Sobolev / transport control of
the posterior restricted to the certification ball) and outer terms (Gaussian
mass outside the ball, posterior mass outside the ball, and the normalizer
mismatch). Products of the form ``n^{d/2} e^{-n kappa} sqrt(det J^+) M1_hat``
are evaluated as the exponential of a summed logarithm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, stats

from .errors import AssumptionViolation
from .geometry import CurvatureSummary, curvature_of, shifted_pair

ONE_MINUS = 1e-12
LOG_2PI = math.log(2.0 * math.pi)
FULL_SPACE = "full-space prior moment (upper bound on the tail integral)"


def _exp(x: float) -> float:
    if x > 709.0:
        return math.inf
    return math.exp(x)


def spd_terms(M) -> tuple[float, float, float]:
    """(lambda_min, trace of inverse, log determinant) of a symmetric matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    eig = np.linalg.eigvalsh(0.5 * (M + M.T))
    lam = float(eig[0])
    if lam <= 0:
        return lam, math.inf, math.nan
    return lam, float(np.sum(1.0 / eig)), float(np.sum(np.log(eig)))


def log_decay(trace_inv: float, lambda_min: float, radius: float, n: float) -> Optional[float]:
    """``log D = -(radius sqrt(n) - sqrt(trace_inv))^2 lambda_min / 2``.

    Returns ``None`` when ``radius sqrt(n) <= sqrt(trace_inv)``, where the
    concentration inequality behind ``D`` does not apply.
    """
    gap = radius * math.sqrt(n) - math.sqrt(trace_inv)
    if not gap > 0:
        return None
    return -0.5 * gap * gap * lambda_min


@dataclass
class DecaySet:
    """Gaussian tail quantities ``D_bar, D_bar^p, D_hat, D_hat^p`` (``None`` if not applicable)."""

    D_map: Optional[float] = None
    D_map_plus: Optional[float] = None
    D_mle: Optional[float] = None
    D_mle_plus: Optional[float] = None
    log: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"D_map": self.D_map, "D_map_plus": self.D_map_plus,
                "D_mle": self.D_mle, "D_mle_plus": self.D_mle_plus}


def decay_terms(curv_map: Optional[CurvatureSummary], curv_mle: CurvatureSummary, pair_map, pair_mle,
                delta_bar: Optional[float], delta: float, n: float, centric: str = "map") -> DecaySet:
    """The four decay quantities, evaluated in log space.

    Quantities required by ``centric`` raise :class:`AssumptionViolation`
    naming the failed inequality; the others are ``None`` when undefined.
    """
    out = DecaySet()
    specs = []
    if curv_map is not None and delta_bar is not None:
        specs.append(("D_map", curv_map.trace_inv, curv_map.lambda_min, delta_bar,
                      "delta_bar*sqrt(n) > sqrt(Tr(J_bar^-1))", centric == "map"))
        if pair_map is not None:
            lam, tr, _ = spd_terms(pair_map.J_plus)
            specs.append(("D_map_plus", tr, lam, delta_bar,
                          "delta_bar*sqrt(n) > sqrt(Tr((J_bar^p)^-1))", False))
    specs.append(("D_mle", curv_mle.trace_inv, curv_mle.lambda_min, delta,
                  "delta*sqrt(n) > sqrt(Tr(J_hat^-1))", centric == "mle"))
    if pair_mle is not None:
        lam, tr, _ = spd_terms(pair_mle.J_plus)
        specs.append(("D_mle_plus", tr, lam, delta, "delta*sqrt(n) > sqrt(Tr((J_hat^p)^-1))", True))
    for name, tr, lam, radius, ineq, required in specs:
        ld = log_decay(tr, lam, radius, n)
        if ld is None:
            if required:
                raise AssumptionViolation(f"size condition violated: {ineq}")
            continue
        out.log[name] = ld
        setattr(out, name, math.exp(ld))
    return out


@dataclass
class BoundValue:
    """A bound with its itemized nonnegative components."""

    total: float
    components: dict
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"total": self.total, "components": dict(self.components), "notes": list(self.notes)}


class _Saturated(Exception):
    pass


def _one_minus(D: Optional[float], name: str) -> float:
    if D is None:
        raise _Saturated(f"{name} undefined")
    if D >= 1.0 - ONE_MINUS:
        raise _Saturated(f"{name} >= 1 - 1e-12")
    return 1.0 - D


def _finish(components: dict, notes=()) -> BoundValue:
    for k, v in components.items():
        if not v >= 0:
            raise ValueError(f"component {k} is negative or NaN: {v}")
    total = math.fsum(components.values())
    return BoundValue(total=total, components=components, notes=list(notes))


def _infinite(reason: str) -> BoundValue:
    return BoundValue(total=math.inf, components={}, notes=[f"infinite: {reason}"])


def log_posterior_tail(d: int, n: float, kappa: float, logdet_plus: float, M1_hat: float,
                       D_plus: float) -> float:
    """``log[n^{d/2} e^{-n kappa} M1_hat sqrt(det J^p) / ((2 pi)^{d/2} (1 - D^p))]``."""
    return (0.5 * d * math.log(n) - n * kappa + 0.5 * logdet_plus + math.log(M1_hat)
            - 0.5 * d * LOG_2PI - math.log1p(-D_plus))


def gaussian_sq_tail_factor(trace_inv: float, lambda_min: float) -> float:
    """Factor ``F`` with ``int_{t > r^2} exp(-(sqrt t - sqrt Tr)^2 lambda / 2) dt <= F D``.

    Substituting ``t = s^2`` gives ``2/lambda + sqrt(Tr) sqrt(2 pi / lambda)``.
    """
    return 2.0 / lambda_min + math.sqrt(trace_inv) * math.sqrt(2.0 * math.pi / lambda_min)


def _require_kappa(kappa, label):
    if kappa is None or not kappa > 0:
        raise AssumptionViolation(f"{label} violated: optimality gap must be positive")


def _margin(lam, radius, M, label):
    margin = lam - radius * M
    if not margin > 0:
        raise AssumptionViolation(f"{label} violated: lambda_min <= radius * M2")
    return margin


def _d(geometry) -> int:
    return geometry.curv_mle.d


# ---------------------------------------------------------------------------
# MAP-centric bounds
# ---------------------------------------------------------------------------

def _map_common(c, geometry, decay, n):
    cb, cm = geometry.curv_map, geometry.curv_mle
    margin = _margin(cb.lambda_min, c.delta_bar, c.M2_bar, "A5")
    _require_kappa(c.kappa_bar, "A6")
    one_D = _one_minus(decay.D_map, "D_map")
    one_Dp = _one_minus(decay.D_mle_plus, "D_mle_plus")
    _, _, logdet_p = spd_terms(shifted_pair(cm.J, c.delta, c.M2).J_plus)
    log_tail = log_posterior_tail(_d(geometry), n, c.kappa_bar, logdet_p, c.M1_hat, 1.0 - one_Dp)
    return cb, margin, one_D, log_tail


def _map_normalizer(c, geometry, decay, log_tail, power):
    """det(J_bar^p)^{1/2} det(J_bar^m)^{-1/2} Tr((J_bar^m)^-1)^{power} / (1 - D_bar^p) * (D_bar + tail)."""
    pair = shifted_pair(geometry.curv_map.J, c.delta_bar, c.M2_bar)
    _, _, logdet_p = spd_terms(pair.J_plus)
    lam_m, tr_m, logdet_m = spd_terms(pair.J_minus)
    if not lam_m > 0:
        raise AssumptionViolation("A5 violated: J_bar^m not positive definite")
    one_Dp = _one_minus(decay.D_map_plus, "D_map_plus")
    log_front = 0.5 * logdet_p - 0.5 * logdet_m + power * math.log(tr_m) - math.log(one_Dp)
    return _exp(log_front + np.logaddexp(math.log(decay.D_map), log_tail))


def tv_bound_map(constants, geometry, decay: DecaySet, n: float) -> BoundValue:
    """MAP-centric total-variation bound."""
    c = constants
    try:
        cb, margin, one_D, log_tail = _map_common(c, geometry, decay, n)
    except _Saturated as e:
        return _infinite(str(e))
    i1 = math.sqrt(3.0) * cb.trace_inv * c.M2_bar / (4.0 * math.sqrt(n * margin * one_D))
    return _finish({"i1_log_sobolev": i1,
                    "i2_gaussian_tail": 2.0 * decay.D_map,
                    "i2_posterior_tail": 2.0 * _exp(log_tail)})


def w2_inner_map(constants, geometry, decay: DecaySet, n: float) -> float:
    """Wasserstein-2 bound between the truncated rescaled posterior and truncated Gaussian (MAP)."""
    c, cb = constants, geometry.curv_map
    margin = _margin(cb.lambda_min, c.delta_bar, c.M2_bar, "A5")
    one_D = _one_minus(decay.D_map, "D_map")
    return math.sqrt(3.0) * cb.trace_inv * c.M2_bar / (2.0 * margin * math.sqrt(n * one_D))


def w1_bound_map(constants, geometry, decay: DecaySet, moment1: float, n: float) -> BoundValue:
    """MAP-centric 1-Wasserstein bound; ``moment1`` bounds the prior tail integral of ``||v - map||``."""
    c = constants
    if not np.isfinite(moment1):
        raise AssumptionViolation("W1 bound infinite: prior first moment does not exist")
    try:
        cb, margin, one_D, log_tail = _map_common(c, geometry, decay, n)
        i1 = w2_inner_map(c, geometry, decay, n)
        i22 = _map_normalizer(c, geometry, decay, log_tail, 0.5)
    except _Saturated as e:
        return _infinite(str(e))
    gauss = (c.delta_bar * math.sqrt(n) + math.sqrt(2.0 * math.pi / cb.lambda_min)) * decay.D_map
    prior = _exp(log_tail + 0.5 * math.log(n) + math.log(moment1)) if moment1 > 0 else 0.0
    return _finish({"i1_log_sobolev_transport": i1, "i21_gaussian_tail": gauss,
                    "i21_prior_moment_tail": prior, "i22_normalizer": i22}, [FULL_SPACE])


def cov_ipm_bound_map(constants, geometry, decay: DecaySet, moment2: float, n: float) -> BoundValue:
    """MAP-centric covariance-IPM bound; ``moment2`` bounds the prior tail integral of ``||v - map||^2``."""
    c = constants
    if not np.isfinite(moment2):
        raise AssumptionViolation("second tail moment infinite")
    try:
        cb, margin, one_D, log_tail = _map_common(c, geometry, decay, n)
        w2 = w2_inner_map(c, geometry, decay, n)
        i22 = _map_normalizer(c, geometry, decay, log_tail, 1.0)
    except _Saturated as e:
        return _infinite(str(e))
    i1 = w2 * w2 + 2.0 * w2 * math.sqrt(cb.trace_inv / one_D)
    gauss = (c.delta_bar**2 * n + gaussian_sq_tail_factor(cb.trace_inv, cb.lambda_min)) * decay.D_map
    prior = _exp(log_tail + math.log(n) + math.log(moment2)) if moment2 > 0 else 0.0
    return _finish({"i1_w2_transport": i1, "i21_gaussian_tail": gauss,
                    "i21_prior_moment_tail": prior, "i22_normalizer": i22}, [FULL_SPACE])


# ---------------------------------------------------------------------------
# MLE-centric bounds
# ---------------------------------------------------------------------------

def _mle_common(c, geometry, decay, n):
    cm = geometry.curv_mle
    margin = _margin(cm.lambda_min, c.delta, c.M2, "A8")
    _require_kappa(c.kappa, "A9")
    one_D = _one_minus(decay.D_mle, "D_mle")
    one_Dp = _one_minus(decay.D_mle_plus, "D_mle_plus")
    pair = shifted_pair(cm.J, c.delta, c.M2)
    _, _, logdet_p = spd_terms(pair.J_plus)
    log_tail = log_posterior_tail(cm.d, n, c.kappa, logdet_p, c.M1_hat, 1.0 - one_Dp)
    return cm, margin, one_D, one_Dp, pair, log_tail


def _mle_normalizer(c, decay, pair, one_Dp, log_tail, power):
    _, _, logdet_p = spd_terms(pair.J_plus)
    lam_m, tr_m, logdet_m = spd_terms(pair.J_minus)
    if not lam_m > 0:
        raise AssumptionViolation("A8 violated: J_hat^m not positive definite")
    log_front = (math.log(c.M1_hat) + math.log(c.M1_tilde) + 0.5 * logdet_p - 0.5 * logdet_m
                 + power * math.log(tr_m) - math.log(one_Dp))
    return _exp(log_front + np.logaddexp(math.log(decay.D_mle), log_tail))


def tv_bound_mle(constants, geometry, decay: DecaySet, n: float) -> BoundValue:
    """MLE-centric total-variation bound (carries the prior oscillation factor)."""
    c = constants
    try:
        cm, margin, one_D, one_Dp, pair, log_tail = _mle_common(c, geometry, decay, n)
    except _Saturated as e:
        return _infinite(str(e))
    osc = math.sqrt(c.M1_tilde * c.M1_hat)
    curv = math.sqrt(3.0) * cm.trace_inv * osc * c.M2 / (4.0 * math.sqrt(n * margin * one_D))
    score = c.M1 * osc / (2.0 * math.sqrt(n * margin))
    return _finish({"i1_curvature": curv, "i1_prior_score": score,
                    "i2_gaussian_tail": 2.0 * decay.D_mle,
                    "i2_posterior_tail": 2.0 * _exp(log_tail)})


def w2_inner_mle(constants, geometry, decay: DecaySet, n: float) -> tuple[float, float]:
    """The two summands of the MLE-centric truncated Wasserstein-2 bound."""
    c, cm = constants, geometry.curv_mle
    margin = _margin(cm.lambda_min, c.delta, c.M2, "A8")
    one_D = _one_minus(decay.D_mle, "D_mle")
    osc = c.M1_tilde * c.M1_hat
    curv = math.sqrt(3.0) * cm.trace_inv * osc * c.M2 / (2.0 * margin * math.sqrt(n * one_D))
    score = c.M1 * osc / (math.sqrt(n) * margin)
    return curv, score


def w1_bound_mle(constants, geometry, decay: DecaySet, moment1: float, n: float) -> BoundValue:
    """MLE-centric 1-Wasserstein bound; ``moment1`` bounds the prior tail integral of ``||v - mle||``."""
    c = constants
    if not np.isfinite(moment1):
        raise AssumptionViolation("W1 bound infinite: prior first moment does not exist")
    try:
        cm, margin, one_D, one_Dp, pair, log_tail = _mle_common(c, geometry, decay, n)
        curv, score = w2_inner_mle(c, geometry, decay, n)
        i22 = _mle_normalizer(c, decay, pair, one_Dp, log_tail, 0.5)
    except _Saturated as e:
        return _infinite(str(e))
    gauss = (c.delta * math.sqrt(n) + math.sqrt(2.0 * math.pi / cm.lambda_min)) * decay.D_mle
    prior = _exp(log_tail + 0.5 * math.log(n) + math.log(moment1)) if moment1 > 0 else 0.0
    return _finish({"i1_curvature": curv, "i1_prior_score": score, "i21_gaussian_tail": gauss,
                    "i21_prior_moment_tail": prior, "i22_normalizer": i22}, [FULL_SPACE])


def cov_ipm_bound_mle(constants, geometry, decay: DecaySet, moment2: float, n: float) -> BoundValue:
    """MLE-centric covariance-IPM bound."""
    c = constants
    if not np.isfinite(moment2):
        raise AssumptionViolation("second tail moment infinite")
    try:
        cm, margin, one_D, one_Dp, pair, log_tail = _mle_common(c, geometry, decay, n)
        curv, score = w2_inner_mle(c, geometry, decay, n)
        i22 = _mle_normalizer(c, decay, pair, one_Dp, log_tail, 1.0)
    except _Saturated as e:
        return _infinite(str(e))
    w2 = curv + score
    i1 = w2 * w2 + 2.0 * math.sqrt(cm.trace_inv / one_D) * w2
    gauss = (c.delta**2 * n + gaussian_sq_tail_factor(cm.trace_inv, cm.lambda_min)) * decay.D_mle
    prior = _exp(log_tail + math.log(n) + math.log(moment2)) if moment2 > 0 else 0.0
    return _finish({"i1_w2_transport": i1, "i21_gaussian_tail": gauss,
                    "i21_prior_moment_tail": prior, "i22_normalizer": i22}, [FULL_SPACE])


# ---------------------------------------------------------------------------
# dispatch and reports
# ---------------------------------------------------------------------------

def decay_for(constants, geometry, n: float) -> DecaySet:
    """Decay terms for a constant set, with the shifted pairs it implies."""
    c = constants
    pair_mle = shifted_pair(geometry.curv_mle.J, c.delta, c.M2)
    if c.centric == "map":
        pair_map = shifted_pair(geometry.curv_map.J, c.delta_bar, c.M2_bar)
        return decay_terms(geometry.curv_map, geometry.curv_mle, pair_map, pair_mle, c.delta_bar,
                           c.delta, n, "map")
    return decay_terms(None, geometry.curv_mle, None, pair_mle, None, c.delta, n, "mle")


def evaluate_bound(target: str, centric: str, constants, geometry, n: float,
                   moment: Callable[[int], float] | None = None) -> BoundValue:
    """Evaluate ``target`` in {tv, w1, cov} for the given centric."""
    decay = decay_for(constants, geometry, n)
    if target == "tv":
        return (tv_bound_map if centric == "map" else tv_bound_mle)(constants, geometry, decay, n)
    if moment is None:
        raise ValueError("prior tail moment required for w1/cov bounds")
    if target == "w1":
        fn = w1_bound_map if centric == "map" else w1_bound_mle
        return fn(constants, geometry, decay, moment(1), n)
    if target == "cov":
        fn = cov_ipm_bound_map if centric == "map" else cov_ipm_bound_mle
        return fn(constants, geometry, decay, moment(2), n)
    raise ValueError(f"unknown bound {target!r}")


@dataclass
class BoundReport:
    """Bounds for one centric, each possibly at its own optimized radii."""

    centric: str
    n: int
    tv: Optional[BoundValue] = None
    w1: Optional[BoundValue] = None
    cov_ipm: Optional[BoundValue] = None
    radii: dict = field(default_factory=dict)

    @property
    def mean_error(self) -> Optional[float]:
        return None if self.w1 is None else self.w1.total / math.sqrt(self.n)

    @property
    def cov_error(self) -> Optional[float]:
        if self.w1 is None or self.cov_ipm is None:
            return None
        return (self.w1.total**2 + self.cov_ipm.total) / self.n

    def to_dict(self) -> dict:
        out = {"centric": self.centric, "n": self.n, "radii": dict(self.radii)}
        for name in ("tv", "w1", "cov_ipm"):
            v = getattr(self, name)
            out[name] = None if v is None else v.to_dict()
        out["mean_error"] = self.mean_error
        out["cov_error"] = self.cov_error
        return out


# ---------------------------------------------------------------------------
# corollaries
# ---------------------------------------------------------------------------

def credible_adjust(alpha: float, tv_bound: float, curv_map: CurvatureSummary, n: int,
                    mc_budget: int = 200_000, rng: np.random.Generator | None = None) -> float:
    """Radius ``b`` with ``P(||Z|| <= b) = 1 - alpha + tv_bound``, ``Z ~ N(0, J_bar^-1)``.

    The ball ``{t : sqrt(n) ||t - map|| <= b}`` then has posterior mass at least
    ``1 - alpha``. Exact for ``d = 1``; a seeded Monte Carlo quantile otherwise.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if tv_bound >= alpha:
        raise ValueError("certificate too weak for this level")
    level = 1.0 - alpha + tv_bound
    J = np.atleast_2d(curv_map.J)
    if J.shape[0] == 1:
        sigma = 1.0 / math.sqrt(float(J[0, 0]))
        return sigma * float(stats.norm.ppf(0.5 * (1.0 + level)))
    if rng is None:
        raise ValueError("a seeded generator is required for d > 1")
    cov = np.linalg.inv(J)
    chol = np.linalg.cholesky(0.5 * (cov + cov.T))
    z = rng.standard_normal((mc_budget, J.shape[0])) @ chol.T
    return float(np.quantile(np.linalg.norm(z, axis=1), level))


def fisher_cap(curv_map: CurvatureSummary, M2_bar: float, n: float) -> float:
    """``3 (Tr(J_bar^-1) M2_bar)^2 / (4 n)``."""
    return 3.0 * (curv_map.trace_inv * M2_bar) ** 2 / (4.0 * n)


def effective_dimension(curv_map: CurvatureSummary, d: int, n: float, prior_hessian) -> tuple[float, float]:
    """Exact ``Tr((J_bar + H_prior / n) J_bar^-1)`` and the lower bound ``d (1 - 1/(n lambda_min))``."""
    J = np.atleast_2d(curv_map.J)
    H = np.atleast_2d(np.asarray(prior_hessian, dtype=float))
    exact = float(np.trace(np.linalg.solve(J.T, (J + H / n).T).T))
    lower = d * (1.0 - 1.0 / (n * curv_map.lambda_min))
    return exact, lower


def _quad(f, a, b):
    val, _ = integrate.quad(f, a, b, limit=400, epsabs=1e-14, epsrel=1e-11)
    return val


def univariate_stein_bound(model, constants, sigma2: float, n: int, g: Callable[[float], float],
                           theta_hat: float, g_bound: float | None = None) -> BoundValue:
    """Stein-method bound on ``|E g(sqrt(n)(theta - mle)) - E g(Z)|``, ``Z ~ N(0, sigma2)``, ``d = 1``.

    ``constants`` supplies ``delta, M1, M1_tilde, M1_hat, M2, kappa`` for the
    MLE ball. With ``g_bound = U`` (``|g| <= U``) the normalizer term uses the
    simplified ``U``-form.
    """
    if model.d != 1:
        raise ValueError("univariate bound requires d = 1")
    c = constants
    delta, M1, M1t, M1h, M2, kappa = c.delta, c.M1, c.M1_tilde, c.M1_hat, c.M2, c.kappa
    half = 1.0 / (2.0 * sigma2)
    a = half - delta * M2 / 3.0
    b = half - delta * M2 / 6.0
    cp = half + delta * M2 / 6.0
    if not a > 0:
        raise ValueError("shifted precision non-positive")
    A = delta * math.sqrt(n)
    sigma = math.sqrt(sigma2)
    fac = M1 + 3.0 / delta
    den = 1.0 - 2.0 * math.exp(-delta**2 * n * cp)
    if not den > 0:
        return _infinite("1 - 2 exp(-delta^2 n c) <= 0")

    first = 2.0 * M1t * M1h / math.sqrt(2.0 * math.pi * sigma2 * n) * _quad(
        lambda u: abs(u * g(u)) * (fac * math.exp(-a * u * u) - 3.0 / delta * math.exp(-b * u * u)), -A, A)
    int_g_b = _quad(lambda u: abs(g(u)) * math.exp(-b * u * u), -A, A)
    # the displayed coefficient carries 2 (M1 + 3/delta) / a; never use less than 1
    coef = max(1.0, 2.0 * fac / a)
    second = (coef * math.sqrt(cp) * (M1t * M1h) ** 2 * int_g_b
              / (math.pi * sigma * den * math.sqrt(n))) * (fac / a - 3.0 / (delta * b))

    prec_p = 1.0 / sigma2 + delta * M2 / 3.0
    prec_m = 1.0 / sigma2 - delta * M2 / 3.0
    den2 = 1.0 - 2.0 * math.exp(-0.5 * prec_p * delta**2 * n)
    if not den2 > 0:
        return _infinite("1 - 2 exp(-(1/sigma^2 + delta M2/3) delta^2 n / 2) <= 0")
    phi = lambda u: math.exp(-u * u / (2 * sigma2)) / math.sqrt(2 * math.pi * sigma2)
    gauss_tail = abs(_quad(lambda u: g(u) * phi(u), A, math.inf) + _quad(lambda u: g(u) * phi(u), -math.inf, -A))

    vec = model.params.get("logprior_vec")

    def prior(t):
        v = float(vec(np.array([t]))[0]) if vec is not None else model.logprior(np.array([t]))[0]
        return math.exp(v) if np.isfinite(v) else 0.0

    upper_prior = _quad(lambda u: abs(g(u * math.sqrt(n))) * prior(u + theta_hat), delta, math.inf)
    if model.max_radius(np.array([theta_hat])) == math.inf:
        lower_prior = _quad(lambda u: abs(g(u * math.sqrt(n))) * prior(u + theta_hat), -math.inf, -delta)
    elif theta_hat > delta:
        # positive support: theta = e^y removes the endpoint singularity of the prior at 0
        def lower(y):
            t = math.exp(y)
            return abs(g((t - theta_hat) * math.sqrt(n))) * prior(t) * t if t > 0 else 0.0

        lower_prior = _quad(lower, -math.inf, math.log(theta_hat - delta))
    else:
        lower_prior = 0.0
    tail_unit = _exp(0.5 * math.log(n) - n * kappa + math.log(M1h) + 0.5 * math.log(prec_p)
                     - 0.5 * LOG_2PI - math.log(den2))
    prior_tail = tail_unit * (upper_prior + lower_prior)
    bracket = 2.0 * math.exp(-delta**2 * n / (2 * sigma2)) + tail_unit
    if g_bound is not None:
        normalizer = g_bound * bracket
    else:
        int_g_m = _quad(lambda t: abs(g(t)) * math.exp(-0.5 * prec_m * t * t), -A, A)
        normalizer = M1h * M1t * math.sqrt(prec_p) * int_g_m / (math.sqrt(2 * math.pi) * den2) * bracket
    return _finish({"i1_stein_test_function": first, "i1_stein_normalizer": second,
                    "i2_gaussian_tail": gauss_tail, "i2_prior_tail": prior_tail,
                    "i2_normalizer": normalizer})


def synthetic_geometry(J_map, J_mle, mode_gap: float = 0.0):
    """Lightweight geometry holder for evaluating bounds on supplied matrices."""
    from types import SimpleNamespace

    return SimpleNamespace(curv_map=curvature_of(J_map), curv_mle=curvature_of(J_mle), mode_gap=mode_gap)
