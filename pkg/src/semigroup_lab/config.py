"""Run configuration: one JSON document fully determines a run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .measure_core import GridSpec, Measure, TestFunction, measure_from_record, test_function
from .perturbation import Perturbation, PotentialPerturbation, RankOnePerturbation


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    grid: GridSpec
    measures: dict[str, Measure]
    test_functions: list[TestFunction]
    perturbation: Perturbation | None
    times: list[float]
    lambdas: list[float]
    N: int = 8
    m: int = 64
    eta: float = 2.0
    suites: list[str] = field(default_factory=list)
    seed: int = 0
    trials: int = 200


def default_config_dict() -> dict:
    text = resources.files("semigroup_lab").joinpath("default_config.json").read_text()
    return json.loads(text)


def _perturbation(spec: dict | None, grid: GridSpec, base_dir: Path) -> Perturbation | None:
    if not spec or spec.get("kind", "none") == "none":
        return None
    kind = spec["kind"]
    if kind == "potential":
        return PotentialPerturbation.from_spec(spec.get("psi", "exp_decay"), base_dir)
    if kind == "rank_one":
        y = measure_from_record(spec.get("y", {"atoms": [[0.0, 1.0]]}), grid, base_dir)
        return RankOnePerturbation(test_function(spec.get("g", "const1")), y)
    raise ConfigError(f"unknown perturbation kind {kind!r}")


def parse_config(raw: dict[str, Any], base_dir: str | Path = ".") -> RunConfig:
    base_dir = Path(base_dir)
    try:
        g = raw.get("grid", {})
        grid = GridSpec(float(g.get("L", 20.0)), int(g.get("n", 16385)))
        measures = {}
        for i, rec in enumerate(raw.get("measures", [])):
            name = rec.get("name", f"mu{i}")
            if name in measures:
                raise ConfigError(f"duplicate measure name {name!r}")
            measures[name] = measure_from_record(rec, grid, base_dir)
        fns = [test_function(n) for n in raw.get("test_functions", ["const1", "cos_1", "cos_2", "sin_1", "gauss_bump", "tanh_1"])]
        series = raw.get("series", {})
        return RunConfig(
            grid=grid,
            measures=measures,
            test_functions=fns,
            perturbation=_perturbation(raw.get("perturbation"), grid, base_dir),
            times=[float(t) for t in raw.get("times", [0.5, 1.0, 2.0])],
            lambdas=[float(v) for v in raw.get("lambdas", [1.0, 2.0, 8.0])],
            N=int(series.get("N", 8)),
            m=int(series.get("m", 64)),
            eta=float(raw.get("eta", 2.0)),
            suites=list(raw.get("suites", [])),
            seed=int(raw.get("seed", 0)),
            trials=int(raw.get("trials", 200)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return parse_config(default_config_dict())
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(raw, path.parent)
