"""Bound-versus-truth comparisons, crossovers and minimum sample sizes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import oracle as orc
from .errors import OracleUnavailable
from .model import ModelDescriptor
from .pipeline import Certificate, CertifyOptions, is_certifiable

# relative slack absorbing quadrature round-off in the truth values
TRUTH_RTOL = 1e-9


@dataclass
class Check:
    """One dominance check: ``truth <= bound``."""

    name: str
    truth: Optional[float]
    bound: Optional[float]

    @property
    def available(self) -> bool:
        return self.truth is not None and self.bound is not None and math.isfinite(self.truth)

    @property
    def ok(self) -> Optional[bool]:
        if not self.available:
            return None
        return self.truth <= self.bound * (1 + TRUTH_RTOL) + 1e-300

    def to_dict(self) -> dict:
        return {"truth": self.truth, "bound": self.bound, "dominated": self.ok}


@dataclass
class Comparison:
    """Truth and dominance checks for one centric of a certificate."""

    centric: str
    status: str
    truth: Optional[orc.PosteriorTruth]
    checks: dict = field(default_factory=dict)
    message: str = ""

    @property
    def violations(self) -> list:
        return [k for k, c in self.checks.items() if c.ok is False]

    def to_dict(self) -> dict:
        return {"centric": self.centric, "status": self.status, "message": self.message,
                "truth": None if self.truth is None else self.truth.to_dict(),
                "checks": {k: c.to_dict() for k, c in self.checks.items()},
                "violations": self.violations}


def posterior_truth(model: ModelDescriptor, center, J, seed: Optional[int] = None,
                    samples: int = 20000) -> orc.PosteriorTruth:
    """Reference posterior summaries relative to the Gaussian ``N(center, J^-1 / n)``.

    One-dimensional models use adaptive quadrature, with the closed-form mean
    and variance substituted for conjugate families. Models with ``d <= 8``
    use self-normalized importance sampling, which needs ``seed``.
    """
    if model.d == 1:
        truth = orc.quadrature_truth_1d(model, float(np.ravel(center)[0]), float(np.ravel(J)[0]))
        if "posterior" in model.params:
            exact = orc.model_conjugate_truth(model)
            truth.extra["quadrature_mean"] = truth.mean
            truth.extra["quadrature_cov"] = truth.cov
            truth.mean, truth.cov = exact.mean, exact.cov
            truth.method = "conjugate+quadrature"
        return truth
    if seed is None:
        raise ValueError("a seed is required for the importance-sampling oracle")
    return orc.importance_truth_md(model, center, J, samples=samples, seed=seed)


def compare(cert: Certificate, centric: str, seed: Optional[int] = None, samples: int = 20000,
            truth: Optional[orc.PosteriorTruth] = None) -> Comparison:
    """Check ``truth <= bound`` for every available quantity of one centric.

    Quantities: TV and W1 between the rescaled posterior and its Gaussian
    (``d = 1`` only), the mean error ``||E theta - center||`` and the
    covariance error ``||Cov - J^-1 / n||_op``.
    """
    res = cert[centric]
    center, J = orc.laplace_reference(cert.geometry, centric)
    if truth is None:
        try:
            truth = posterior_truth(cert.model, center, J, seed, samples)
        except OracleUnavailable as e:
            return Comparison(centric, "oracle_unavailable", None, message=str(e))
    out = Comparison(centric, res.status, truth, message=res.message)
    if res.status != "ok":
        return out
    rep = res.report
    n = cert.model.n
    mean_err = float(np.linalg.norm(np.atleast_1d(truth.mean) - np.ravel(center)))
    cov_err = float(np.linalg.norm(np.atleast_2d(truth.cov) - np.linalg.inv(np.atleast_2d(J)) / n, 2))
    if rep.tv is not None:
        out.checks["tv"] = Check("tv", truth.tv_vs_laplace, rep.tv.total)
    if rep.w1 is not None:
        out.checks["w1"] = Check("w1", truth.w1_vs_laplace, rep.w1.total)
        out.checks["mean"] = Check("mean", mean_err, rep.mean_error)
    if rep.cov_error is not None:
        out.checks["cov"] = Check("cov", cov_err, rep.cov_error)
    return out


def crossover(ns: Sequence[int], bound: Sequence[Optional[float]], truth: Sequence[Optional[float]]) -> Optional[int]:
    """First ``n`` from which ``bound < truth`` holds at every later grid point."""
    below = [b is not None and t is not None and b < t for b, t in zip(bound, truth)]
    first = None
    for n, ok in zip(ns, below):
        if ok and first is None:
            first = n
        elif not ok:
            first = None
    return first


def minimum_n(build: Callable[[int], ModelDescriptor], centric: str = "map",
              options: CertifyOptions = CertifyOptions(), start: int = 2, cap: int = 10**7) -> Optional[int]:
    """Smallest certifiable ``n`` by doubling then bisection (``None`` above ``cap``).

    Certifiability is a nonempty feasible radius interval with every assumption
    flag true. It need not be monotone in ``n``; the search returns the
    boundary just below the first certifiable doubling step.
    """
    ok = lambda m: is_certifiable(build(m), centric, options)
    hi = max(int(start), 1)
    lo = 0
    while not ok(hi):
        lo = hi
        if hi >= cap:
            return None
        hi = min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
