"""Command-line interface: ``audit``, ``sweep``, ``min-n`` and ``oracle-compare``.

Exit codes: 0 success, 1 input error, 2 infeasible certificate (or a failed
assumption flag), 3 oracle unavailable, 4 dominance failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bounds import BoundValue
from .compare import compare, crossover, minimum_n
from .config import ConfigError, RunConfig, load_config
from .datasets import DatasetError
from .errors import CurvatureError, ModeNotFound, OracleUnavailable
from .pipeline import Certificate, CertifyOptions, certify

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_ORACLE, EXIT_DOMINANCE = 0, 1, 2, 3, 4

log = logging.getLogger("lapcert")

SWEEP_COLUMNS = (
    ("n", "sample size (prefix of the data stream)"),
    ("centric", "map or mle"),
    ("status", "ok, infeasible, assumption_failed, infinite, oracle_unavailable or error"),
    ("tv_bound", "TV bound between the rescaled posterior and its Gaussian"),
    ("w1_bound", "W1 bound in the rescaled variable sqrt(n)(theta - center)"),
    ("cov_ipm_bound", "covariance IPM bound in the rescaled variable"),
    ("mean_error_bound", "w1_bound / sqrt(n), bounds ||E theta - center||"),
    ("cov_error_bound", "(w1_bound^2 + cov_ipm_bound) / n, bounds ||Cov - J^-1/n||_op"),
    ("radius_tv", "optimized radius for the TV bound"),
    ("radius_w1", "optimized radius for the W1 bound"),
    ("radius_cov", "optimized radius for the covariance bound"),
    ("truth_method", "reference method for the posterior summaries"),
    ("truth_mean_norm", "||E theta|| under the posterior"),
    ("truth_cov_norm", "||Cov theta||_op under the posterior"),
    ("truth_tv", "reference TV (d = 1 only)"),
    ("truth_w1", "reference W1 (d = 1 only)"),
    ("truth_mean_error", "||E theta - center||"),
    ("truth_cov_error", "||Cov - J^-1/n||_op"),
    ("mean_below_truth", "1 if mean_error_bound < truth_mean_norm"),
    ("cov_below_truth", "1 if cov_error_bound < truth_cov_norm"),
    ("mean_crossover", "1 on the first n from which mean_below_truth holds for the rest of the grid"),
    ("cov_crossover", "1 on the first n from which cov_below_truth holds for the rest of the grid"),
    ("dominated", "1 if every available truth <= bound check passes"),
    ("message", "status detail"),
)
MIN_N_COLUMNS = (
    ("d", "parameter dimension"),
    ("centric", "map or mle"),
    ("min_n", "smallest certifiable n (empty when the cap is exceeded)"),
    ("status", "ok or exceeds cap"),
)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _plain(obj):
    """JSON-safe copy: numpy scalars and arrays converted, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, Path):
        return str(obj)
    if obj is None or isinstance(obj, (str, int)):
        return obj
    return repr(obj)


def dumps_json(doc: dict) -> str:
    return json.dumps(_plain({"schema_version": SCHEMA_VERSION, **doc}), indent=2, sort_keys=False,
                      allow_nan=False) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def dumps_csv(kind: str, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# lapcert {kind} schema {SCHEMA_VERSION}\n")
    for name, desc in columns:
        buf.write(f"# {name}: {desc}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([c for c, _ in columns])
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c, _ in columns])
    return buf.getvalue()


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------

def _options(cfg: RunConfig) -> CertifyOptions:
    return CertifyOptions(method=cfg.method, grid=cfg.grid)


def _certify(cfg: RunConfig, n: Optional[int] = None, d: Optional[int] = None) -> Certificate:
    model = cfg.build(n, d)
    return certify(model, centrics=cfg.centrics, targets=cfg.targets, options=_options(cfg))


def _scaled(v: Optional[BoundValue], factor: float) -> Optional[BoundValue]:
    if v is None:
        return None
    return dataclasses.replace(v, total=v.total * factor,
                               components={k: c * factor for k, c in v.components.items()},
                               notes=list(v.notes) + [f"debug scale {factor!r}"])


def _apply_debug_scale(cert: Certificate, factor: Optional[float]) -> None:
    if factor is None:
        return
    for res in cert.results.values():
        rep = res.report
        rep.tv, rep.w1, rep.cov_ipm = (_scaled(rep.tv, factor), _scaled(rep.w1, factor),
                                       _scaled(rep.cov_ipm, factor))


def _min_n_hint(cfg: RunConfig, centric: str) -> str:
    cap = cfg.min_n_cap
    if cfg.recipe is None:
        cap = min(cap, cfg.dataset().shape[0])
    try:
        m = minimum_n(lambda k: cfg.build(k), centric, _options(cfg), cap=cap)
    except (ConfigError, DatasetError, ValueError, OracleUnavailable):
        m = None
    if m is None:
        return f"no certifiable n up to {cap}"
    return f"minimum n for a {centric.upper()}-centric certificate is {m}"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_audit(cfg: RunConfig, out: Optional[Path] = None) -> int:
    """Single-dataset run: modes, curvature, constants, assumptions and bounds as JSON."""
    try:
        cert = _certify(cfg)
    except (ModeNotFound, CurvatureError) as e:
        _emit(dumps_json({"command": "audit", "family": cfg.family, "status": "no_mode", "message": str(e)}), out)
        log.error("%s", e)
        return EXIT_INFEASIBLE
    doc = {"command": "audit", **cert.to_dict(), "requested": {"centrics": list(cfg.centrics),
                                                               "bounds": list(cfg.targets)}}
    statuses = [r.status for r in cert.results.values()]
    hints = {c: _min_n_hint(cfg, c) for c, r in cert.results.items() if r.status == "infeasible"}
    if hints:
        code = EXIT_INFEASIBLE
    elif "oracle_unavailable" in statuses:
        code = EXIT_ORACLE
    elif not all(r.flags_ok for r in cert.results.values()):
        code = EXIT_INFEASIBLE
    else:
        code = EXIT_OK
    doc["all_flags_pass"] = all(r.flags_ok for r in cert.results.values())
    if hints:
        doc["hints"] = hints
        for centric, h in hints.items():
            log.error("%s-centric certificate infeasible at n = %d: %s", centric, cert.model.n, h)
    _emit(dumps_json(doc), out)
    return code


def _sweep_point(cfg: RunConfig, n: int) -> list:
    try:
        cert = _certify(cfg, n)
    except (ModeNotFound, CurvatureError) as e:
        return [{"n": n, "centric": c, "status": "error", "message": str(e)} for c in cfg.centrics]
    rows = []
    for centric in cfg.centrics:
        res = cert[centric]
        rep = res.report
        row = {"n": n, "centric": centric, "status": res.status, "message": res.message}
        if res.status in ("ok", "infinite", "assumption_failed"):
            row.update(tv_bound=rep.tv and rep.tv.total, w1_bound=rep.w1 and rep.w1.total,
                       cov_ipm_bound=rep.cov_ipm and rep.cov_ipm.total,
                       mean_error_bound=rep.mean_error, cov_error_bound=rep.cov_error,
                       radius_tv=rep.radii.get("tv"), radius_w1=rep.radii.get("w1"),
                       radius_cov=rep.radii.get("cov"))
        if cfg.truth and res.status != "oracle_unavailable":
            try:
                cmp = compare(cert, centric, seed=cfg.seed, samples=cfg.importance_samples)
            except (ValueError, OracleUnavailable) as e:
                row["message"] = (row["message"] + "; " if row["message"] else "") + f"truth: {e}"
                cmp = None
            if cmp is not None and cmp.truth is not None:
                t = cmp.truth
                row.update(truth_method=t.method, truth_mean_norm=t.mean_norm, truth_cov_norm=t.cov_norm,
                           truth_tv=t.tv_vs_laplace, truth_w1=t.w1_vs_laplace)
                if "mean" in cmp.checks:
                    row["truth_mean_error"] = cmp.checks["mean"].truth
                if "cov" in cmp.checks:
                    row["truth_cov_error"] = cmp.checks["cov"].truth
                if cmp.checks:
                    row["dominated"] = not cmp.violations
        mb, cb = row.get("mean_error_bound"), row.get("cov_error_bound")
        if mb is not None and row.get("truth_mean_norm") is not None:
            row["mean_below_truth"] = mb < row["truth_mean_norm"]
        if cb is not None and row.get("truth_cov_norm") is not None:
            row["cov_below_truth"] = cb < row["truth_cov_norm"]
        rows.append(row)
    return rows


def sweep_rows(cfg: RunConfig, workers: int = 1) -> list:
    """Rows of a sweep in grid order, with crossover markers filled in."""
    grid = list(cfg.n_grid)
    if workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_sweep_point, [cfg] * len(grid), grid))
    else:
        chunks = []
        for n in grid:
            log.info("sweep n = %d", n)
            chunks.append(_sweep_point(cfg, n))
    rows = [r for chunk in chunks for r in chunk]
    for centric in cfg.centrics:
        sub = [r for r in rows if r["centric"] == centric]
        ns = [r["n"] for r in sub]
        for key, bound, truth in (("mean_crossover", "mean_error_bound", "truth_mean_norm"),
                                  ("cov_crossover", "cov_error_bound", "truth_cov_norm")):
            at = crossover(ns, [r.get(bound) for r in sub], [r.get(truth) for r in sub])
            for r in sub:
                if r.get(bound) is not None and r.get(truth) is not None:
                    r[key] = r["n"] == at
    return rows


def cmd_sweep(cfg: RunConfig, out: Optional[Path] = None, fmt: str = "csv", workers: int = 1) -> int:
    if not cfg.n_grid:
        raise ConfigError("sweep needs run.n_grid")
    rows = sweep_rows(cfg, workers)
    if fmt == "json":
        _emit(dumps_json({"command": "sweep", "family": cfg.family, "rows": rows}), out)
    else:
        _emit(dumps_csv("sweep", SWEEP_COLUMNS, rows), out)
    return EXIT_OK


def _min_n_point(cfg: RunConfig, d: Optional[int], centric: str) -> dict:
    cap = cfg.min_n_cap
    if cfg.recipe is None:
        cap = min(cap, cfg.dataset().shape[0])
    m = minimum_n(lambda k: cfg.build(k, d), centric, _options(cfg), cap=cap)
    return {"d": d if d is not None else 1, "centric": centric, "min_n": m,
            "status": "ok" if m is not None else "exceeds cap"}


def min_n_rows(cfg: RunConfig, workers: int = 1) -> list:
    dims = list(cfg.d_range)
    if not cfg.family.startswith("logistic"):
        if any(d != 1 for d in dims):
            raise ConfigError(f"{cfg.family} has fixed dimension 1")
        dims = [None] * len(dims)
    jobs = [(d, c) for d in dims for c in cfg.centrics]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_min_n_point, [cfg] * len(jobs), *zip(*jobs)))
    rows = []
    for d, c in jobs:
        log.info("min-n d = %s %s", d, c)
        rows.append(_min_n_point(cfg, d, c))
    return rows


def cmd_min_n(cfg: RunConfig, out: Optional[Path] = None, fmt: str = "csv", workers: int = 1) -> int:
    rows = min_n_rows(cfg, workers)
    if fmt == "json":
        _emit(dumps_json({"command": "min-n", "family": cfg.family, "rows": rows}), out)
    else:
        _emit(dumps_csv("min-n", MIN_N_COLUMNS, rows), out)
    return EXIT_OK


def cmd_oracle_compare(cfg: RunConfig, out: Optional[Path] = None, debug_scale: Optional[float] = None) -> int:
    """Bounds next to reference truth; exit 4 when any bound fails to dominate."""
    try:
        cert = _certify(cfg)
    except (ModeNotFound, CurvatureError) as e:
        log.error("%s", e)
        return EXIT_INFEASIBLE
    _apply_debug_scale(cert, debug_scale)
    comps = {}
    code = EXIT_OK
    for centric in cfg.centrics:
        try:
            cmp = compare(cert, centric, seed=cfg.seed, samples=cfg.importance_samples)
        except OracleUnavailable as e:
            log.error("%s", e)
            return EXIT_ORACLE
        comps[centric] = cmp
        if cmp.status == "oracle_unavailable":
            code = max(code, EXIT_ORACLE)
        elif cmp.status == "infeasible":
            code = max(code, EXIT_INFEASIBLE)
        elif cmp.violations:
            code = EXIT_DOMINANCE
    doc = {"command": "oracle-compare", "family": cfg.family, "n": cert.model.n, "d": cert.model.d,
           "debug_scale": debug_scale,
           "bounds": {c: cert[c].report.to_dict() for c in cfg.centrics},
           "comparison": {c: v.to_dict() for c, v in comps.items()},
           "all_dominated": all(not v.violations for v in comps.values())}
    _emit(dumps_json(doc), out)
    if code == EXIT_DOMINANCE:
        for c, v in comps.items():
            if v.violations:
                log.error("%s-centric dominance failure: %s", c, ", ".join(v.violations))
    return code


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="TOML run configuration")
    common.add_argument("--out", type=Path, help="output file (default stdout)")
    common.add_argument("--seed", type=int, help="override run.seed")
    common.add_argument("--centric", choices=("map", "mle", "both"), help="override run.centric")
    common.add_argument("--bounds", choices=("tv", "w1", "cov", "all"), help="override run.bounds")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
    p = argparse.ArgumentParser(prog="lapcert", description="Finite-sample Laplace approximation certificates.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("audit", parents=[common], help="certify one dataset (JSON)")
    for name, helptext in (("sweep", "bounds and truth over an n-grid (CSV)"),
                           ("min-n", "minimum certifiable n per dimension (CSV)")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--workers", type=int, default=1, help="worker processes")
    oc = sub.add_parser("oracle-compare", parents=[common], help="bounds against reference truth (JSON)")
    oc.add_argument("--debug-scale", type=float, default=None,
                    help="multiply every bound component by this factor before comparing")
    return p


def _configure(args) -> RunConfig:
    cfg = load_config(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.centric is not None:
        over["centric"] = args.centric
    if args.bounds is not None:
        over["bounds"] = args.bounds
    if over:
        cfg = dataclasses.replace(cfg, **over)
    return cfg.validate()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="lapcert: %(message)s", stream=sys.stderr)
    try:
        cfg = _configure(args)
        out = args.out if args.out is not None else cfg.out
        if args.command == "audit":
            if args.format == "csv":
                raise ConfigError("audit writes JSON only")
            return cmd_audit(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.format or "csv", args.workers)
        if args.command == "min-n":
            return cmd_min_n(cfg, out, args.format or "csv", args.workers)
        if args.format == "csv":
            raise ConfigError("oracle-compare writes JSON only")
        return cmd_oracle_compare(cfg, out, args.debug_scale)
    except (ConfigError, DatasetError) as e:
        log.error("%s", e)
        return EXIT_INPUT
    except (KeyError, ValueError) as e:
        log.error("invalid input: %s", e)
        return EXIT_INPUT
    except OracleUnavailable as e:
        log.error("%s", e)
        return EXIT_ORACLE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
