"""Certified constants, feasible radii and assumption checks.

The certificate for a posterior consists of a ball radius around each mode
together with the constants that control the third derivatives, the prior and
the likelihood drop outside the ball. Radius-dependent constants are exposed
through :class:`ConstantOracle`; :func:`optimize_radii` searches the feasible
radii for the smallest bound.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import spatial, stats
from scipy.stats import qmc

from . import bounds as bnd
from .errors import AssumptionViolation, InfeasibleRadius, OracleUnavailable
from .geometry import Geometry, ModeSolve, shifted_pair
from .model import ModelDescriptor

SLACK = 1e-12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
LADDER_RATIO = 1.05


@dataclass
class ConstantSet:
    """Constants certified at a particular choice of radii.

    Fields not used by a centric are ``None``: the MLE-centric set has no
    ``delta_bar``, ``M2_bar`` or ``kappa_bar``.
    """

    centric: str
    delta: float
    M1: float
    M1_tilde: float
    M1_hat: float
    M2: float
    kappa: Optional[float] = None
    delta_bar: Optional[float] = None
    M2_bar: Optional[float] = None
    kappa_bar: Optional[float] = None
    certified: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AssumptionCheck:
    holds: bool
    witness: float
    description: str
    parts: dict = field(default_factory=dict)


MAP_REQUIRED = ("A1", "A2", "A3", "A4", "A5", "A6")
MLE_REQUIRED = ("A1", "A2", "A7", "A8", "A9", "A10")

DESCRIPTIONS = {
    "A1": "third derivative of L_n bounded by n*M2 on the delta-ball around the MLE",
    "A2": "1/prior bounded by M1_hat on the delta-ball around the MLE",
    "A3": "third derivative of L_n + log prior bounded by n*M2_bar on the delta_bar-ball around the MAP",
    "A4": "mode gap and Gaussian scales smaller than the radii",
    "A5": "lambda_min(J_bar) > delta_bar * M2_bar",
    "A6": "likelihood drop kappa_bar > 0 outside radius delta_bar - |mle - map|",
    "A7": "sqrt(Tr(J_hat^-1)/n) < delta",
    "A8": "lambda_min(J_hat) > delta * M2",
    "A9": "likelihood drop kappa > 0 outside radius delta",
    "A10": "prior score and density bounded (M1, M1_tilde) on the delta-ball",
}


@dataclass
class AssumptionReport:
    """Flags and numeric witnesses, keyed ``A1`` ... ``A10``."""

    checks: dict

    def holds(self, centric: str) -> bool:
        keys = MAP_REQUIRED if centric == "map" else MLE_REQUIRED
        return all(k in self.checks and self.checks[k].holds for k in keys)

    def failed(self, centric: str) -> list:
        keys = MAP_REQUIRED if centric == "map" else MLE_REQUIRED
        return [k for k in keys if k not in self.checks or not self.checks[k].holds]

    def to_dict(self) -> dict:
        out = {}
        for k, c in self.checks.items():
            out[f"{k}.flag"] = bool(c.holds)
            out[f"{k}.witness"] = float(c.witness)
            for name, v in c.parts.items():
                out[f"{k}.{name}"] = float(v)
        return out


def _strict(lhs: float, rhs: float) -> tuple[bool, float]:
    """Return (lhs < rhs with relative slack, rhs - lhs)."""
    w = rhs - lhs
    if np.isnan(w):
        return False, w
    if not (np.isfinite(lhs) and np.isfinite(rhs)):
        return bool(w > 0), w
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return bool(w > SLACK * scale), w


# ---------------------------------------------------------------------------
# third-derivative bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridOptions:
    """Settings for the numeric third-derivative search.

    The estimate maximizes ``|T(theta)[u, u, u]| / n`` over low-discrepancy
    ball points and random unit directions, refining the best candidates by
    tensor power iteration. It is a heuristic lower estimate of the supremum
    unless ``lipschitz_slack`` is set and the model supplies a fourth-derivative
    bound, in which case the covering radius of the design times that bound
    is added.
    """

    points: int = 1000
    directions: int = 10
    refine: int = 8
    refine_iters: int = 30
    seed: int = 0
    lipschitz_slack: bool = False
    ladder: bool = True


@lru_cache(maxsize=16)
def ball_design(d: int, points: int, seed: int) -> np.ndarray:
    """Scrambled Sobol points in the unit ball: the center, half on the sphere, the rest inside."""
    m = max(1, int(math.ceil(math.log2(max(points, 2)))))
    raw = qmc.Sobol(d + 1, scramble=True, seed=seed).random(2**m)[:points]
    raw = np.clip(raw, 1e-12, 1 - 1e-12)
    dirs = stats.norm.ppf(raw[:, :d])
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = raw[:, d] ** (1.0 / d)
    radii[1: 1 + points // 2] = 1.0
    pts = dirs * radii[:, None]
    pts[0] = 0.0
    pts.setflags(write=False)
    return pts


@lru_cache(maxsize=16)
def _directions(d: int, k: int, seed: int) -> np.ndarray:
    if d == 1:
        return np.ones((1, 1))
    u = np.random.default_rng(seed + 1).standard_normal((k, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    u.setflags(write=False)
    return u


@lru_cache(maxsize=16)
def _covering_radius(d: int, points: int, seed: int) -> float:
    design = ball_design(d, points, seed)
    rng = np.random.default_rng(seed + 2)
    probe = rng.standard_normal((4000, d))
    probe /= np.linalg.norm(probe, axis=1, keepdims=True)
    probe *= rng.random((4000, 1)) ** (1.0 / d)
    dist, _ = spatial.cKDTree(design).query(probe)
    return float(dist.max())


def grid_third_sup(model: ModelDescriptor, center, radius: float, opts: GridOptions = GridOptions()) -> float:
    """Numeric estimate of ``sup ||L_n'''||* / n`` over a ball (not certified)."""
    if model.third_lik is None:
        raise OracleUnavailable("third derivative bound unavailable: model has no third-derivative evaluator")
    center = np.asarray(center, dtype=float).reshape(model.d)
    pts = center + radius * ball_design(model.d, opts.points, opts.seed)
    dirs = _directions(model.d, opts.directions, opts.seed)
    vals = np.abs(model.third_lik(pts, dirs)) / model.n
    best = float(vals.max())
    if model.d > 1 and model.third_lik_vec is not None and opts.refine > 0:
        top = np.argsort(vals.max(axis=1))[::-1][: opts.refine]
        for p in top:
            u = np.array(dirs[int(np.argmax(vals[p]))])
            for _ in range(opts.refine_iters):
                v = model.third_lik_vec(pts[p], u)
                val = float(u @ v)
                best = max(best, abs(val) / model.n)
                w = math.copysign(1.0, val) * v
                nrm = float(np.linalg.norm(w))
                if nrm == 0:
                    break
                nxt = w / nrm
                if np.linalg.norm(nxt - u) < 1e-10:
                    break
                u = nxt
            best = max(best, abs(float(u @ model.third_lik_vec(pts[p], u))) / model.n)
    if opts.lipschitz_slack and model.fourth_lik_bound is not None:
        best += model.fourth_lik_bound * radius * _covering_radius(model.d, opts.points, opts.seed)
    return best


def third_derivative_bound(model: ModelDescriptor, center, radius: float, method: str = "analytic",
                           target: str = "lik", grid: GridOptions = GridOptions()) -> float:
    """Bound on ``sup ||f'''||* / n`` over the ball, ``f = L_n`` or ``L_n + log pi``.

    ``method="analytic"`` uses the model oracle and is certified;
    ``method="grid"`` uses :func:`grid_third_sup` (plus the analytic prior
    part for the posterior) and is heuristic.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if method == "analytic":
        oracle = model.third_deriv_bound_lik if target == "lik" else model.third_deriv_bound_post
        if oracle is None:
            raise OracleUnavailable("third derivative bound unavailable: no analytic oracle")
        return float(oracle(np.asarray(center, dtype=float), radius))
    if method == "grid":
        value = grid_third_sup(model, center, radius, grid)
        if target == "post":
            if model.prior_third_bound is None:
                raise OracleUnavailable("third derivative bound unavailable: no prior third-derivative bound")
            value += float(model.prior_third_bound(np.asarray(center, dtype=float), radius)) / model.n
        return value
    raise ValueError(f"unknown method {method!r}")


def prior_envelope(model: ModelDescriptor, center, radius: float) -> tuple[float, float, float]:
    """``(M1, M1_tilde, M1_hat)`` bounding ``|pi'/pi|``, ``pi`` and ``1/pi`` on the ball."""
    if model.prior_envelope_oracle is None:
        raise OracleUnavailable("prior envelope unavailable: no analytic oracle")
    M1, M1t, M1h = model.prior_envelope_oracle(np.asarray(center, dtype=float), radius)
    if not (np.isfinite(M1h) and M1h > 0 and np.isfinite(M1t) and M1t > 0):
        raise AssumptionViolation("A2/A10 violated: prior vanishes or is unbounded on the ball")
    return float(M1), float(M1t), float(M1h)


def concave_gap(lambda_min: float, radius: float, m2: Callable[[float], float] | float) -> float:
    """Certified drop for concave ``L_n`` outside radius ``r``.

    Taylor's theorem gives a drop of at least ``lambda s^2 / 2 - M2(s) s^3 / 6``
    at distance ``s``. Along any ray from the mode a concave function with zero
    slope satisfies ``g(r) <= (r / s) g(s)`` for ``s <= r`` and keeps
    decreasing beyond ``r``, so the drop outside ``r`` is at least
    ``max_{s <= r} (r / s) (lambda s^2 / 2 - M2(s) s^3 / 6)``. The inner
    maximum is taken over ``s = r`` and the stationary point
    ``s* = 3 lambda / (2 M2(r))`` of the constant-``M2`` surrogate.
    """
    m2f = m2 if callable(m2) else (lambda r, _v=float(m2): _v)

    def drop(s):
        return (radius / s) * (0.5 * lambda_min * s**2 - m2f(s) * s**3 / 6.0)

    best = drop(radius)
    m = m2f(radius)
    if m > 0:
        s_star = 1.5 * lambda_min / m
        if s_star < radius:
            best = max(best, drop(s_star))
    return best


def optimality_gap(model: ModelDescriptor, mode: ModeSolve, exclusion_radius: float, centric: str = "mle",
                   lambda_min: float | None = None, m2=None, verify: bool = True) -> float:
    """``kappa`` with ``sup_{||t - mle|| > r} (L_n(t) - L_n(mle)) / n <= -kappa``.

    ``mode`` is the MLE for both centrics; for ``centric="map"`` pass the
    radius ``delta_bar - ||mle - map||``. Uses the model's analytic oracle when
    present, else the concave surrogate (requires ``lambda_min`` of ``J_hat``
    and a third-derivative bound ``m2``), checked on a boundary grid for
    ``d <= 2``.
    """
    if exclusion_radius <= 0:
        raise AssumptionViolation(
            f"exclusion radius must be positive for centric={centric} (need |mle - map| < delta_bar)")
    if model.optimality_gap_oracle is not None:
        return float(model.optimality_gap_oracle(mode.theta, exclusion_radius))
    if not model.likelihood_concave:
        raise OracleUnavailable("kappa unavailable; supply analytic gap oracle")
    if lambda_min is None or m2 is None:
        raise ValueError("concave route needs lambda_min and m2")
    kappa = concave_gap(lambda_min, exclusion_radius, m2)
    if verify and model.d <= 2 and kappa > 0:
        base = model.loglik(mode.theta)[0]
        if model.d == 1:
            dirs = np.array([[1.0], [-1.0]])
        else:
            ang = np.linspace(0, 2 * math.pi, 721)[:-1]
            dirs = np.column_stack([np.cos(ang), np.sin(ang)])
        pts = mode.theta + exclusion_radius * dirs
        batch = model.params.get("loglik_batch")
        vals = batch(pts) if batch is not None else np.array([model.loglik(t)[0] for t in pts])
        worst = float(np.max(vals - base)) / model.n
        if worst > -kappa * (1 - 1e-9):
            raise AssumptionViolation("concave gap surrogate contradicted on the boundary grid")
    return kappa


# ---------------------------------------------------------------------------
# radius-dependent constants
# ---------------------------------------------------------------------------

class ConstantOracle:
    """Radius-dependent constants of one model at fixed modes (memoized).

    Parameters
    ----------
    method : {"analytic", "grid", "auto"}
        Third-derivative route; ``auto`` picks analytic when available.
    """

    def __init__(self, model: ModelDescriptor, geometry: Geometry, method: str = "auto",
                 grid: GridOptions = GridOptions()):
        if method == "auto":
            method = "analytic" if model.third_deriv_bound_lik is not None else "grid"
        self.model = model
        self.geometry = geometry
        self.method = method
        self.grid = grid
        self.n = model.n
        self.theta_hat = geometry.mle.theta
        self.theta_bar = geometry.map.theta
        self.gap = geometry.mode_gap
        self.radius_cap_mle = float(model.max_radius(self.theta_hat))
        self.radius_cap_map = float(model.max_radius(self.theta_bar))
        self._cache: dict = {}

    @property
    def certified(self) -> bool:
        return self.method == "analytic"

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def _ladder(self, radius: float, cap: float) -> float:
        if self.method != "grid" or not self.grid.ladder:
            return radius
        r = LADDER_RATIO ** math.ceil(math.log(radius) / math.log(LADDER_RATIO) - 1e-12)
        return r if r < cap else radius

    def m2(self, delta: float) -> float:
        r = self._ladder(delta, self.radius_cap_mle)
        return self._memo(("m2", r), lambda: third_derivative_bound(
            self.model, self.theta_hat, r, self.method, "lik", self.grid))

    def m2_bar(self, delta_bar: float) -> float:
        r = self._ladder(delta_bar, self.radius_cap_map)
        return self._memo(("m2bar", r), lambda: third_derivative_bound(
            self.model, self.theta_bar, r, self.method, "post", self.grid))

    def envelope(self, delta: float):
        return self._memo(("env", delta), lambda: prior_envelope(self.model, self.theta_hat, delta))

    def kappa(self, radius: float, verify: bool = False) -> float:
        # the boundary-grid sanity check runs only for the radii finally chosen
        lam = self.geometry.curv_mle.lambda_min
        return self._memo(("kappa", radius, verify), lambda: optimality_gap(
            self.model, self.geometry.mle, radius, "mle", lam, self.m2, verify=verify))

    def kappa_bar(self, delta_bar: float) -> float:
        return self.kappa(delta_bar - self.gap)

    def moment(self, centric: str, p: int, radius: float) -> float:
        if self.model.prior_tail_moment is None:
            raise OracleUnavailable("prior tail moment unavailable")
        center = self.theta_bar if centric == "map" else self.theta_hat
        excl = radius - self.gap if centric == "map" else radius
        return self._memo(("mom", centric, p, excl), lambda: float(
            self.model.prior_tail_moment(center, excl, p)))


def _safe(fn, *args):
    try:
        v = fn(*args)
    except (OracleUnavailable, AssumptionViolation, ValueError, OverflowError, ZeroDivisionError):
        return None
    return v if np.isfinite(v) else None


def _boundary_true(pred, lo: float, hi: float) -> float:
    """Largest point of a bisection for ``pred`` true on ``(lo, x*)`` and false after.

    Requires ``pred`` true just above ``lo`` and false at ``hi``.
    """
    a, b = lo, hi
    for _ in range(200):
        m = math.sqrt(a * b) if a > 0 else 0.5 * (a + b)
        if b - a <= 1e-13 * b:
            break
        if pred(m):
            a = m
        else:
            b = m
    return a


def _first_true(pred, lo: float, cap: float) -> Optional[float]:
    """Smallest point above ``lo`` (to 1e-13 relative) where ``pred`` holds.

    Conditions such as a positive optimality gap can be lost to round-off right
    at ``lo`` while holding a little further out, so a geometric ladder of
    offsets is probed before giving up.
    """
    base = lo if lo > 0 else 1e-12
    prev = base
    for eps in np.logspace(-10, 1, 45):
        x = base * (1 + eps)
        if x >= cap:
            return None
        if pred(x):
            if x == base * (1 + 1e-10):
                return x
            a, b = prev, x
            for _ in range(200):
                if b - a <= 1e-13 * b:
                    break
                m = math.sqrt(a * b)
                if pred(m):
                    b = m
                else:
                    a = m
            return b
        prev = x
    return None


def _sup_interval(pred, lo: float, cap: float) -> Optional[tuple[float, float]]:
    """Lower and upper ends of the first run where ``pred`` holds above ``lo``."""
    start = _first_true(pred, lo, cap)
    if start is None:
        return None
    if math.isfinite(cap):
        top = cap * (1 - 1e-12)
        if pred(top):
            return start, top
        return start, _boundary_true(pred, start, top)
    x = start
    for _ in range(400):
        nxt = 2.0 * x
        if not pred(nxt):
            return start, _boundary_true(pred, x, nxt)
        x = nxt
    return start, math.inf


def radius_interval(trace_inv: float, n: int, lambda_min: float, m2, lower_extra: float = 0.0,
                    cap: float = math.inf, extra=None) -> Optional[tuple[float, float]]:
    """Radii ``r`` with ``max(sqrt(trace_inv / n), lower_extra) < r`` and ``r M2(r) < lambda_min``.

    ``m2`` is a constant or a callable of the radius; ``extra`` is an optional
    further predicate. Returns ``None`` when the set is empty.
    """
    lo = max(math.sqrt(trace_inv / n), lower_extra)
    m2f = m2 if callable(m2) else (lambda r, _v=float(m2): _v)

    def pred(r):
        m = _safe(m2f, r)
        if m is None:
            return False
        ok, _ = _strict(r * m, lambda_min)
        if ok and extra is not None:
            ok = bool(extra(r))
        return ok

    found = _sup_interval(pred, lo, cap)
    if found is None:
        return None
    start, hi = found
    if not hi > start:
        return None
    # keep the exact lower end unless round-off forced the interval to start later
    return (lo if start <= lo * (1 + 1e-9) else start), hi


def _mle_ball_lower(orc: ConstantOracle) -> Optional[tuple[float, float]]:
    """Radii around the MLE with ``sqrt(Tr((J_hat + delta M2/3)^-1) / n) < delta``."""
    J = orc.geometry.curv_mle.J
    eig = np.linalg.eigvalsh(J)
    n = orc.n

    def pred(r):
        m = _safe(orc.m2, r)
        if m is None:
            return False
        return _strict(math.sqrt(float(np.sum(1.0 / (eig + r * m / 3.0))) / n), r)[0]

    hi0 = math.sqrt(orc.geometry.curv_mle.trace_inv / n)
    cap = orc.radius_cap_mle
    if hi0 >= cap or not pred(min(hi0 * (1 + 1e-9), cap * (1 - 1e-12))):
        # the plain Gaussian scale does not fit inside the support
        return None
    # predicate is false at 0 and true at hi0: bisect for the lower end
    a, b = 0.0, hi0 * (1 + 1e-9)
    for _ in range(200):
        m = 0.5 * (a + b)
        if b - a <= 1e-13 * b:
            break
        if pred(m):
            b = m
        else:
            a = m
    return b, cap


def feasible_radius_interval(orc: ConstantOracle, centric: str) -> Optional[tuple[float, float]]:
    """Open interval of radii (``delta`` or ``delta_bar``) satisfying the centric's conditions.

    MLE-centric: ``sqrt(Tr(J_hat^-1)/n) < delta``, ``delta M2(delta) < lambda_hat``,
    ``kappa(delta) > 0`` and the prior envelope finite. MAP-centric:
    ``max(|mle - map|, sqrt(Tr(J_bar^-1)/n)) < delta_bar``,
    ``delta_bar M2_bar(delta_bar) < lambda_bar``, ``kappa_bar > 0``, and a radius
    around the MLE exists with ``sqrt(Tr((J_hat + delta M2/3)^-1)/n) < delta``.
    Returns ``None`` when empty ("n too small for a certificate").
    """
    g = orc.geometry
    if centric == "mle":
        def extra(r):
            k = _safe(orc.kappa, r)
            return k is not None and k > 0 and _safe(lambda x: orc.envelope(x)[2], r) is not None

        return radius_interval(g.curv_mle.trace_inv, orc.n, g.curv_mle.lambda_min, orc.m2,
                               cap=orc.radius_cap_mle, extra=extra)
    if centric == "map":
        if _mle_ball_lower(orc) is None:
            return None

        def extra(r):
            k = _safe(orc.kappa_bar, r)
            return k is not None and k > 0

        return radius_interval(g.curv_map.trace_inv, orc.n, g.curv_map.lambda_min, orc.m2_bar,
                               lower_extra=g.mode_gap, cap=orc.radius_cap_map, extra=extra)
    raise ValueError(f"unknown centric {centric!r}")


# ---------------------------------------------------------------------------
# radius optimization
# ---------------------------------------------------------------------------

def minimize_log_radius(f: Callable[[float], float], lo: float, hi: float, scan: int = 40,
                        tol: float = 1e-10) -> float:
    """Minimize ``f`` over ``(lo, hi)`` on a log scale: coarse scan then golden section.

    Ties go to the smaller radius. A constant objective returns the interval
    midpoint.
    """
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    a0 = math.log(lo)
    b0 = math.log(hi)
    xs = np.linspace(a0, b0, scan + 2)[1:-1]
    vals = [f(math.exp(x)) for x in xs]
    finite = [v for v in vals if np.isfinite(v)]
    if not finite:
        return 0.5 * (lo + hi)
    if max(finite) - min(finite) <= 1e-15 * max(abs(min(finite)), 1e-300) and len(finite) == len(vals):
        return 0.5 * (lo + hi)
    i = int(np.argmin(vals))
    a = xs[i - 1] if i > 0 else a0
    b = xs[i + 1] if i < len(xs) - 1 else b0
    best_x, best_v = xs[i], vals[i]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    for _ in range(200):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(math.exp(d))
    for x, v in ((c, fc), (d, fd)):
        if v < best_v or (v == best_v and x < best_x):
            best_x, best_v = x, v
    return math.exp(best_x)


def _log_tail_factor(orc: ConstantOracle, delta: float) -> float:
    """``log(sqrt(det J_hat^+) M1_hat / (1 - D_hat^+))``: the delta-dependent part of the posterior tail term."""
    m2 = _safe(orc.m2, delta)
    env = _safe(lambda r: orc.envelope(r)[2], delta)
    if m2 is None or env is None:
        return math.inf
    pair = shifted_pair(orc.geometry.curv_mle.J, delta, m2)
    lam, tr, logdet = bnd.spd_terms(pair.J_plus)
    log_d = bnd.log_decay(tr, lam, delta, orc.n)
    if log_d is None or log_d >= math.log1p(-bnd.ONE_MINUS):
        return math.inf
    return 0.5 * logdet + math.log(env) - math.log(-math.expm1(log_d))


def best_tail_radius(orc: ConstantOracle) -> Optional[float]:
    """MLE-ball radius minimizing the posterior tail term of the MAP-centric bounds."""
    key = ("tail_radius",)
    if key in orc._cache:
        return orc._cache[key]
    rng = _mle_ball_lower(orc)
    if rng is None:
        orc._cache[key] = None
        return None
    lo, cap = rng
    hi = cap * (1 - 1e-9) if math.isfinite(cap) else max(1.0, 1e3 * lo)
    lo = lo * (1 + 1e-9)
    r = minimize_log_radius(lambda x: _log_tail_factor(orc, x), lo, hi)
    orc._cache[key] = r
    return r


def constants_at(orc: ConstantOracle, centric: str, radius: float, delta: float | None = None) -> ConstantSet:
    """Re-derive the full constant set at the given radius.

    For ``centric="map"``, ``radius`` is ``delta_bar`` and ``delta`` (the MLE
    ball radius of the tail term) defaults to :func:`best_tail_radius`.
    """
    if centric == "mle":
        M1, M1t, M1h = orc.envelope(radius)
        return ConstantSet(centric="mle", delta=radius, M1=M1, M1_tilde=M1t, M1_hat=M1h,
                           M2=orc.m2(radius), kappa=orc.kappa(radius), certified=orc.certified)
    if delta is None:
        delta = best_tail_radius(orc)
        if delta is None:
            raise InfeasibleRadius("n too small for a certificate: no admissible MLE-ball radius")
    M1, M1t, M1h = orc.envelope(delta)
    kappa = _safe(orc.kappa, delta)
    return ConstantSet(centric="map", delta=delta, M1=M1, M1_tilde=M1t, M1_hat=M1h, M2=orc.m2(delta),
                       kappa=kappa, delta_bar=radius, M2_bar=orc.m2_bar(radius),
                       kappa_bar=orc.kappa_bar(radius), certified=orc.certified)


def bound_at(orc: ConstantOracle, target: str, centric: str, radius: float) -> float:
    """Total of the selected bound at a radius; ``inf`` when any ingredient fails."""
    try:
        cs = constants_at(orc, centric, radius)
        val = bnd.evaluate_bound(target, centric, cs, orc.geometry, orc.n,
                                 moment=lambda p: orc.moment(centric, p, radius))
    except (AssumptionViolation, OracleUnavailable, InfeasibleRadius, ValueError, OverflowError):
        return math.inf
    return val.total if np.isfinite(val.total) else math.inf


def optimize_radii(orc: ConstantOracle, target: str, centric: str) -> tuple[float, ConstantSet]:
    """Radius minimizing the selected bound inside the feasible interval.

    Raises
    ------
    InfeasibleRadius
        When the feasible interval is empty.
    """
    interval = feasible_radius_interval(orc, centric)
    if interval is None:
        raise InfeasibleRadius("n too small for a certificate")
    lo, hi = interval
    if not math.isfinite(hi):
        hi = max(1e4 * lo, 1.0)
    r = minimize_log_radius(lambda x: bound_at(orc, target, centric, x), lo * (1 + 1e-9), hi)
    cs = constants_at(orc, centric, r)
    for radius, gap in ((cs.delta, cs.kappa), (None if cs.delta_bar is None else cs.delta_bar - orc.gap, cs.kappa_bar)):
        if radius is not None and gap is not None and gap > 0:
            orc.kappa(radius, verify=True)
    return r, cs


# ---------------------------------------------------------------------------
# assumption report
# ---------------------------------------------------------------------------

def verify_assumptions(model: ModelDescriptor, geometry: Geometry, constants: ConstantSet,
                       n: int | None = None) -> AssumptionReport:
    """Evaluate every assumption whose constants are present.

    ``n`` defaults to ``model.n``; supplying it evaluates the size conditions
    for a different sample size with the same curvature.
    """
    n = model.n if n is None else n
    c = constants
    cm, cb = geometry.curv_mle, geometry.curv_map
    out = {}

    def add(key, ok, w, **parts):
        out[key] = AssumptionCheck(holds=bool(ok), witness=float(w), description=DESCRIPTIONS[key], parts=parts)

    ok = c.delta > 0 and np.isfinite(c.M2) and c.M2 >= 0
    add("A1", ok, c.delta if np.isfinite(c.M2) else -math.inf)
    add("A2", np.isfinite(c.M1_hat) and c.M1_hat > 0, 1.0 / c.M1_hat if c.M1_hat > 0 else -math.inf)
    if c.delta_bar is not None and c.M2_bar is not None:
        add("A3", c.delta_bar > 0 and np.isfinite(c.M2_bar) and c.M2_bar >= 0,
            c.delta_bar if np.isfinite(c.M2_bar) else -math.inf)
        ok1, w1 = _strict(max(geometry.mode_gap, math.sqrt(cb.trace_inv / n)), c.delta_bar)
        shifted = cm.J + (c.delta * c.M2 / 3.0) * np.eye(cm.d)
        tr_plus = float(np.trace(np.linalg.inv(shifted)))
        ok2, w2 = _strict(math.sqrt(tr_plus / n), c.delta)
        add("A4", ok1 and ok2, min(w1, w2), map_ball=w1, mle_ball=w2)
        ok5, w5 = _strict(c.delta_bar * c.M2_bar, cb.lambda_min)
        add("A5", ok5, w5)
    if c.kappa_bar is not None:
        add("A6", c.kappa_bar > 0, c.kappa_bar)
    ok7, w7 = _strict(math.sqrt(cm.trace_inv / n), c.delta)
    add("A7", ok7, w7)
    ok8, w8 = _strict(c.delta * c.M2, cm.lambda_min)
    add("A8", ok8, w8)
    if c.kappa is not None:
        add("A9", c.kappa > 0, c.kappa)
    fin = np.isfinite(c.M1) and np.isfinite(c.M1_tilde) and c.M1 >= 0 and c.M1_tilde > 0
    add("A10", fin, 1.0 / (1.0 + c.M1 + c.M1_tilde) if fin else -math.inf)
    return AssumptionReport(checks=out)
