"""End-to-end certification of a model: modes, radii, constants, assumptions and bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import bounds as bnd
from . import certificates as cert
from .errors import AssumptionViolation, CurvatureError, InfeasibleRadius, ModeNotFound, OracleUnavailable
from .geometry import Geometry, analyze
from .model import ModelDescriptor

TARGETS = ("tv", "w1", "cov")
CENTRICS = ("map", "mle")
_REPORT_FIELD = {"tv": "tv", "w1": "w1", "cov": "cov_ipm"}


@dataclass(frozen=True)
class CertifyOptions:
    """``method`` selects the third-derivative route (``auto``, ``analytic`` or ``grid``)."""

    method: str = "auto"
    grid: cert.GridOptions = cert.GridOptions()
    check_uniqueness: bool = True


@dataclass
class CentricResult:
    """Per-target radii, constants and assumption reports for one centric."""

    centric: str
    status: str
    report: bnd.BoundReport
    constants: dict = field(default_factory=dict)
    assumptions: dict = field(default_factory=dict)
    message: str = ""

    @property
    def flags_ok(self) -> bool:
        return self.status == "ok" and all(a.holds(self.centric) for a in self.assumptions.values())

    def to_dict(self) -> dict:
        return {"centric": self.centric, "status": self.status, "message": self.message,
                "bounds": self.report.to_dict(),
                "constants": {k: v.to_dict() for k, v in self.constants.items()},
                "assumptions": {k: v.to_dict() for k, v in self.assumptions.items()}}


@dataclass
class Certificate:
    model: ModelDescriptor
    geometry: Geometry
    oracle: cert.ConstantOracle
    results: dict

    def __getitem__(self, centric: str) -> CentricResult:
        return self.results[centric]

    def to_dict(self) -> dict:
        g = self.geometry
        return {
            "family": self.model.family, "n": self.model.n, "d": self.model.d,
            "certified_constants": self.oracle.certified,
            "modes": {"mle": g.mle.theta.tolist(), "map": g.map.theta.tolist(), "gap": g.mode_gap,
                      "mle_grad_norm": g.mle.grad_norm, "map_grad_norm": g.map.grad_norm,
                      "multimodal_risk": g.multimodal_risk},
            "curvature": {name: {"J": c.J.tolist(), "lambda_min": c.lambda_min,
                                 "trace_inv": c.trace_inv, "logdet": c.logdet}
                          for name, c in (("mle", g.curv_mle), ("map", g.curv_map))},
            "results": {k: v.to_dict() for k, v in self.results.items()},
        }


def certify_centric(orc: cert.ConstantOracle, centric: str, targets=TARGETS) -> CentricResult:
    """Optimize the radius separately for each target and evaluate its bound."""
    model, geo = orc.model, orc.geometry
    report = bnd.BoundReport(centric=centric, n=model.n)
    out = CentricResult(centric=centric, status="ok", report=report)
    for target in targets:
        try:
            radius, cs = cert.optimize_radii(orc, target, centric)
        except InfeasibleRadius as e:
            out.status, out.message = "infeasible", str(e)
            return out
        except AssumptionViolation as e:
            out.status, out.message = "assumption_failed", str(e)
            return out
        out.constants[target] = cs
        out.assumptions[target] = cert.verify_assumptions(model, geo, cs)
        report.radii[target] = radius
        try:
            val = bnd.evaluate_bound(target, centric, cs, geo, model.n,
                                     moment=lambda p, r=radius: orc.moment(centric, p, r))
        except AssumptionViolation as e:
            out.status, out.message = "assumption_failed", str(e)
            val = bnd.BoundValue(total=math.inf, components={}, notes=[str(e)])
        setattr(report, _REPORT_FIELD[target], val)
    if out.status == "ok" and not all(np.isfinite(getattr(report, _REPORT_FIELD[t]).total) for t in targets):
        out.status = "infinite"
    return out


def certify(model: ModelDescriptor, centrics=CENTRICS, targets=TARGETS,
            options: CertifyOptions = CertifyOptions(), geometry: Optional[Geometry] = None) -> Certificate:
    """Find modes, optimize radii and evaluate the requested bounds.

    Infeasible centrics are reported with ``status="infeasible"`` instead of
    raising; mode-finding and curvature failures propagate.
    """
    geo = geometry if geometry is not None else analyze(model, check_uniqueness=options.check_uniqueness)
    orc = cert.ConstantOracle(model, geo, options.method, options.grid)
    results = {}
    for centric in centrics:
        try:
            results[centric] = certify_centric(orc, centric, targets)
        except OracleUnavailable as e:
            results[centric] = CentricResult(centric=centric, status="oracle_unavailable",
                                             report=bnd.BoundReport(centric=centric, n=model.n),
                                             message=str(e))
    return Certificate(model=model, geometry=geo, oracle=orc, results=results)


def is_certifiable(model: ModelDescriptor, centric: str = "map", options: CertifyOptions = CertifyOptions()) -> bool:
    """Nonempty feasible radius interval and every required assumption flag true."""
    try:
        geo = analyze(model, check_uniqueness=False)
        orc = cert.ConstantOracle(model, geo, options.method, options.grid)
        _, cs = cert.optimize_radii(orc, "tv", centric)
    except (InfeasibleRadius, AssumptionViolation, OracleUnavailable, ModeNotFound, CurvatureError):
        return False
    return cert.verify_assumptions(model, geo, cs).holds(centric)
