"""Mode finding and curvature summaries at the MLE and MAP."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CurvatureError, ModeNotFound
from .model import ModelDescriptor

DIVERGENCE_NORM = 1e6


@dataclass
class ModeSolve:
    """Result of a mode search.

    ``grad_norm`` is the gradient norm of the objective divided by ``n``, i.e.
    the gradient of the per-observation objective.
    """

    theta: np.ndarray
    objective: str
    converged: bool
    grad_norm: float
    iterations: int
    hessian: np.ndarray = field(repr=False)
    message: str = ""


@dataclass
class CurvatureSummary:
    """Spectral summary of ``J = -H / n`` at a mode."""

    J: np.ndarray
    lambda_min: float
    trace_inv: float
    logdet: float
    theta: Optional[np.ndarray] = None

    @property
    def d(self) -> int:
        return self.J.shape[0]


@dataclass
class ShiftedPair:
    """The matrices ``J +- (radius * M / 3) I`` and their minimum eigenvalues."""

    J_plus: np.ndarray
    J_minus: np.ndarray
    lambda_plus_min: float
    lambda_minus_min: float
    shift: float


@dataclass
class Geometry:
    """Both modes with their curvature summaries."""

    mle: ModeSolve
    map: ModeSolve
    curv_mle: CurvatureSummary
    curv_map: CurvatureSummary
    multimodal_risk: bool = False

    @property
    def mode_gap(self) -> float:
        return float(np.linalg.norm(self.mle.theta - self.map.theta))


def _negdef_solve(H, g):
    """Newton direction ``-H^{-1} g`` when ``H`` is negative definite, else None."""
    try:
        L = np.linalg.cholesky(-H)
    except np.linalg.LinAlgError:
        return None
    y = np.linalg.solve(L, g)
    return np.linalg.solve(L.T, y)


def find_mode(model: ModelDescriptor, objective: str = "likelihood", init=None,
              tol: float = 1e-8, max_iter: int = 200) -> ModeSolve:
    """Maximize ``L_n`` or ``L_n + log pi`` by safeguarded Newton ascent.

    Newton steps use an Armijo backtracking line search; when the Hessian is
    not negative definite or the Newton direction is not an ascent direction
    the step falls back to scaled steepest ascent.

    Raises
    ------
    ModeNotFound
        If the iterates diverge (``||theta|| > 1e6``), the evaluators are not
        finite at ``init``, or the data admit no maximum likelihood estimate.
    """
    f = model.objective(objective)
    theta = model.default_init() if init is None else np.array(init, dtype=float).reshape(model.d)
    v, g, H = f(theta)
    if not np.isfinite(v):
        raise ModeNotFound(f"objective not finite at the initial point {theta}")
    n = model.n
    converged = False
    message = ""
    it = 0
    for it in range(1, max_iter + 1):
        gnorm = float(np.linalg.norm(g)) / n
        if gnorm <= tol * max(1.0, float(np.linalg.norm(theta))):
            converged = True
            it -= 1
            break
        step = _negdef_solve(H, g)
        newton = step is not None and float(g @ step) > 0
        if not newton:
            scale = max(float(np.linalg.norm(H, 2)), 1e-12 * n)
            step = g / scale
        slope = float(g @ step)
        t = 1.0
        accepted = False
        while t > 1e-14:
            cand = theta + t * step
            vc = f(cand)[0]
            if np.isfinite(vc) and vc >= v + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # near the optimum rounding can defeat the Armijo test; take tiny Newton steps
            if newton and np.linalg.norm(step) <= 1e-8 * (1.0 + np.linalg.norm(theta)):
                cand = theta + step
                vc = f(cand)[0]
                if not np.isfinite(vc):
                    message = "line search failed"
                    break
            else:
                message = "line search failed"
                break
        theta = cand
        v, g, H = f(theta)
        if np.linalg.norm(theta) > DIVERGENCE_NORM:
            _raise_divergence(model, objective)
    else:
        message = f"no convergence in {max_iter} iterations"

    if converged:
        # one polishing Newton step, kept only if it reduces the gradient
        step = _negdef_solve(H, g)
        if step is not None:
            cand = theta + step
            vc, gc, Hc = f(cand)
            if np.isfinite(vc) and np.linalg.norm(gc) < np.linalg.norm(g):
                theta, v, g, H = cand, vc, gc, Hc
        if np.max(np.linalg.eigvalsh(0.5 * (H + H.T))) >= 0:
            converged = False
            message = "Hessian not negative definite at the stationary point"
    if objective == "likelihood" and model.mle_check is not None:
        # a flat direction can pass the gradient test, so existence is checked directly
        model.mle_check()
    if not converged and np.linalg.norm(theta) > 1e3:
        _raise_divergence(model, objective)
    return ModeSolve(theta=theta, objective=objective, converged=converged,
                     grad_norm=float(np.linalg.norm(g)) / n, iterations=it,
                     hessian=0.5 * (H + H.T), message=message)


def _raise_divergence(model, objective):
    if objective == "likelihood" and model.mle_check is not None:
        model.mle_check()
    raise ModeNotFound("no interior maximum found")


def spd_summary(J: np.ndarray):
    """(lambda_min, trace of inverse, log determinant) of a symmetric matrix.

    The log determinant is ``nan`` and the trace ``inf`` if ``J`` is not
    positive definite.
    """
    eig = np.linalg.eigvalsh(J)
    lam = float(eig[0])
    if lam <= 0:
        return lam, math.inf, math.nan
    try:
        L = np.linalg.cholesky(J)
    except np.linalg.LinAlgError:
        return lam, math.inf, math.nan
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return lam, float(np.sum(1.0 / eig)), logdet


def curvature_of(J) -> CurvatureSummary:
    """Curvature summary of a given symmetric matrix ``J``."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    J = 0.5 * (J + J.T)
    lam, tr, logdet = spd_summary(J)
    if not (lam > 0 and np.isfinite(logdet)):
        raise CurvatureError("Hessian not positive definite at mode")
    return CurvatureSummary(J=J, lambda_min=lam, trace_inv=tr, logdet=logdet)


def curvature(model: ModelDescriptor, mode: ModeSolve) -> CurvatureSummary:
    """``J = -H / n`` at a converged mode with its spectral quantities."""
    if not mode.converged:
        raise ModeNotFound(f"mode search did not converge: {mode.message}")
    f = model.objective(mode.objective)
    _, _, H = f(mode.theta)
    summary = curvature_of(-np.asarray(H, dtype=float) / model.n)
    summary.theta = mode.theta.copy()
    return summary


def shifted_pair(J, radius: float, M: float) -> ShiftedPair:
    """``J +- (radius * M / 3) I`` with their minimum eigenvalues.

    ``J_minus`` may be indefinite; that is reported through a nonpositive
    ``lambda_minus_min`` rather than an exception.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if M < 0:
        raise ValueError("third-derivative bound must be nonnegative")
    J = np.atleast_2d(np.asarray(J, dtype=float))
    s = radius * M / 3.0
    eye = np.eye(J.shape[0])
    eig = np.linalg.eigvalsh(0.5 * (J + J.T))
    return ShiftedPair(J_plus=J + s * eye, J_minus=J - s * eye,
                       lambda_plus_min=float(eig[0] + s), lambda_minus_min=float(eig[0] - s),
                       shift=s)


def analyze(model: ModelDescriptor, init=None, check_uniqueness: bool = True) -> Geometry:
    """Find the MLE and MAP and their curvature summaries.

    The MAP search starts at the MLE. With ``check_uniqueness`` a second MAP
    search from a perturbed start is run; disagreement beyond ``1e-6`` sets
    ``multimodal_risk``.
    """
    mle = find_mode(model, "likelihood", init)
    curv_mle = curvature(model, mle)
    mp = find_mode(model, "posterior", mle.theta)
    curv_map = curvature(model, mp)
    risk = False
    if check_uniqueness:
        start = model.default_init() if init is None else np.asarray(init, dtype=float)
        alt = start * 1.5 + 0.1 if model.max_radius(start) == math.inf else start * 1.5
        try:
            other = find_mode(model, "posterior", alt)
            risk = (not other.converged) or np.linalg.norm(other.theta - mp.theta) > 1e-6 * max(
                1.0, np.linalg.norm(mp.theta))
        except ModeNotFound:
            risk = True
    return Geometry(mle=mle, map=mp, curv_mle=curv_mle, curv_map=curv_map, multimodal_risk=risk)
