"""Run configuration read from TOML files."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .certificates import GridOptions
from .datasets import DataRecipe, generate, load_table
from .model import FAMILIES, ModelDescriptor, build_model


class ConfigError(ValueError):
    """Invalid configuration (maps to exit code 1)."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs.

    ``data_path`` and ``recipe`` are alternatives: a fixed dataset whose
    prefixes are used for sweeps, or a seeded synthetic stream.
    """

    family: str
    hyperparameters: dict = field(default_factory=dict)
    data_path: Optional[Path] = None
    recipe: Optional[DataRecipe] = None
    n: Optional[int] = None
    centric: str = "map"
    bounds: str = "all"
    radius_policy: str = "auto"
    fixed_radius: Optional[float] = None
    method: str = "auto"
    grid: GridOptions = GridOptions()
    n_grid: tuple = ()
    d_range: tuple = ()
    seed: Optional[int] = None
    importance_samples: int = 20000
    min_n_cap: int = 10**7
    truth: bool = True
    out: Optional[Path] = None

    @property
    def centrics(self) -> tuple:
        return ("map", "mle") if self.centric == "both" else (self.centric,)

    @property
    def targets(self) -> tuple:
        return ("tv", "w1", "cov") if self.bounds == "all" else (self.bounds,)

    def needs_seed(self) -> bool:
        return self.recipe is not None or (self.family.startswith("logistic"))

    def validate(self) -> "RunConfig":
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.centric not in ("map", "mle", "both"):
            raise ConfigError("centric must be map, mle or both")
        if self.bounds not in ("tv", "w1", "cov", "all"):
            raise ConfigError("bounds must be tv, w1, cov or all")
        if self.radius_policy not in ("auto", "fixed"):
            raise ConfigError("radius policy must be auto or fixed")
        if self.radius_policy == "fixed" and not (self.fixed_radius and self.fixed_radius > 0):
            raise ConfigError("fixed radius policy needs a positive run.radius")
        if self.method not in ("auto", "analytic", "grid"):
            raise ConfigError("method must be auto, analytic or grid")
        if self.data_path is None and self.recipe is None:
            raise ConfigError("data.path or data.recipe is required")
        grid = list(self.n_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("n-grid must be strictly increasing")
        if any(n < 1 for n in grid):
            raise ConfigError("n-grid entries must be positive")
        if self.needs_seed() and self.seed is None:
            raise ConfigError("seed is required when synthetic data or Monte Carlo is used")
        return self

    # -- data and models -------------------------------------------------

    def dataset(self, n: Optional[int] = None, d: Optional[int] = None) -> np.ndarray:
        """The first ``n`` rows of the configured data (all rows if ``n`` is None)."""
        if self.recipe is not None:
            recipe = self.recipe
            if d is not None and recipe.kind == "logistic":
                recipe = _recipe_for_dim(recipe, d)
            size = n if n is not None else self.n
            if size is None:
                raise ConfigError("data.n is required for synthetic data")
            return generate(recipe, int(size), int(self.seed))
        table = load_table(self.data_path)
        if table.shape[1] == 1:
            table = table[:, 0]
        if n is not None:
            if n > table.shape[0]:
                raise ConfigError(f"dataset has {table.shape[0]} rows; n = {n} requested")
            table = table[:n]
        elif self.n is not None:
            table = table[: self.n]
        return table

    def hyper_for_dim(self, d: Optional[int]) -> dict:
        hyper = dict(self.hyperparameters)
        if d is not None and self.family.startswith("logistic"):
            if "mu" in hyper and np.size(hyper["mu"]) != d:
                hyper["mu"] = [float(np.ravel(hyper["mu"])[0])] * d
            if "Sigma" in hyper:
                hyper.pop("Sigma")
        return hyper

    def build(self, n: Optional[int] = None, d: Optional[int] = None) -> ModelDescriptor:
        return build_model(self.family, self.dataset(n, d), self.hyper_for_dim(d))


def _recipe_for_dim(recipe: DataRecipe, d: int) -> DataRecipe:
    params = dict(recipe.params)
    theta = np.ravel(params.get("theta", [1.0]))
    params["theta"] = [float(theta[0])] * d if theta.size != d else theta.tolist()
    return DataRecipe(recipe.kind, params)


def _n_grid(spec) -> tuple:
    if spec is None:
        return ()
    if isinstance(spec, dict):
        start, stop, num = int(spec["start"]), int(spec["stop"]), int(spec.get("num", 50))
        if spec.get("log", True):
            vals = np.logspace(math.log10(start), math.log10(stop), num)
        else:
            vals = np.linspace(start, stop, num)
        return tuple(sorted(set(int(round(v)) for v in vals)))
    return tuple(int(v) for v in spec)


def parse_config(doc: dict, base: Path = Path(".")) -> RunConfig:
    """Build a :class:`RunConfig` from a parsed TOML document."""
    try:
        family = doc["family"]
    except KeyError:
        raise ConfigError("config needs a top-level 'family'") from None
    hyper = dict(doc.get("hyperparameters", {}))
    data = dict(doc.get("data", {}))
    run = dict(doc.get("run", {}))
    grid = dict(doc.get("grid", {}))
    recipe = None
    path = None
    if "path" in data:
        path = Path(data["path"])
        if not path.is_absolute():
            path = base / path
    if "recipe" in data:
        recipe = DataRecipe(str(data["recipe"]), dict(data.get("params", {})))
    try:
        d_range = run.get("d_range", ())
        if isinstance(d_range, dict):
            d_range = range(int(d_range["start"]), int(d_range["stop"]) + 1)
        cfg = RunConfig(
            family=family, hyperparameters=hyper, data_path=path, recipe=recipe,
            n=int(data["n"]) if "n" in data else None,
            centric=run.get("centric", "map"), bounds=run.get("bounds", "all"),
            radius_policy=run.get("radius_policy", "auto"),
            fixed_radius=float(run["radius"]) if "radius" in run else None,
            method=run.get("method", "auto"),
            grid=replace(GridOptions(), **grid),
            n_grid=_n_grid(run.get("n_grid")), d_range=tuple(int(v) for v in d_range),
            seed=int(run["seed"]) if "seed" in run else None,
            importance_samples=int(run.get("importance_samples", 20000)),
            min_n_cap=int(run.get("min_n_cap", 10**7)),
            truth=bool(run.get("truth", True)),
            out=Path(run["out"]) if "out" in run else None,
        )
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"invalid config: {e}") from None
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(doc, path.parent)
