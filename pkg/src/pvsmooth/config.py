"""Run configuration: one JSON document plus bundled parameter presets.

Every numeric parameter of a study lives either in the config file or in a
preset shipped with the package, never in code. Validation failures always
name the offending field path so a bad config is quick to fix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from .economics import BatterySpec, DieselSpec, EconomicParams
from .errors import ConfigError
from .formulation import ConstraintConfig
from .lp import SolveOptions
from .pvmodel import PvPlantSpec

RUN_CASES = ("A", "B", "C", "D", "baseline", "battery-select")

BATTERY_PRESETS = ("table1_la", "table1_nas", "table1_liion", "table1_nicd")
DEFAULT_BATTERY_PRESET = "table1_nas"
DEFAULT_DIESEL_PRESET = "table3_diesel"

#: keys that may carry the string "inf" in JSON, which has no infinity literal
_INF_KEYS = ("fluctuation_limit", "grid_cap", "annualization")


@dataclass(frozen=True)
class SyntheticWeatherSpec:
    """Parameters for the generated irradiance trace."""

    days: int = 3
    seed: int = 7
    variability: float = 0.8


@dataclass(frozen=True)
class RunConfig:
    weather_file: Path | None
    weather_synth: SyntheticWeatherSpec | None
    plant: PvPlantSpec
    battery: BatterySpec
    battery_candidates: tuple[BatterySpec, ...]
    diesel: DieselSpec
    econ: EconomicParams
    constraints: ConstraintConfig
    cases: tuple[str, ...]
    output_dir: Path
    solver: SolveOptions


def load_preset(name: str) -> dict:
    """Read one bundled ``<name>.preset`` JSON document."""
    ref = resources.files("pvsmooth").joinpath(f"presets/{name}.preset")
    try:
        text = ref.read_text()
    except FileNotFoundError:
        known = ", ".join(sorted(BATTERY_PRESETS + (DEFAULT_DIESEL_PRESET,)))
        raise ConfigError(f"unknown preset {name!r}; bundled presets: {known}") from None
    return json.loads(text)


def _coerce_inf(data: dict) -> dict:
    out = dict(data)
    for key in _INF_KEYS:
        value = out.get(key)
        if isinstance(value, str):
            if value.lower() in ("inf", "infinity", "+inf"):
                out[key] = math.inf
            else:
                raise ConfigError(f"{key}: expected a number or \"inf\", got {value!r}")
    return out


def _section(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{path}.{key}: unknown field")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _battery(data, path: str) -> BatterySpec:
    if isinstance(data, str):
        return _section(BatterySpec, load_preset(data), f"preset {data}")
    return _section(BatterySpec, data, path)


def load_run_config(path: str | Path) -> RunConfig:
    """Parse and validate a run configuration file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")

    known_top = {
        "weather", "plant", "battery", "battery_candidates", "diesel",
        "econ", "constraints", "cases", "output_dir", "solver",
    }
    for key in raw:
        if key not in known_top:
            raise ConfigError(f"{key}: unknown field")

    weather = raw.get("weather", {"synthetic": {}})
    if not isinstance(weather, dict) or len(weather) != 1:
        raise ConfigError('weather: expected exactly one of {"file": ...} or {"synthetic": ...}')
    weather_file = None
    weather_synth = None
    if "file" in weather:
        # paths are taken relative to the config file so a config directory
        # can be moved as a unit
        weather_file = (path.parent / str(weather["file"])).resolve()
    elif "synthetic" in weather:
        weather_synth = _section(SyntheticWeatherSpec, weather["synthetic"], "weather.synthetic")
    else:
        raise ConfigError(f"weather.{next(iter(weather))}: unknown weather source")

    plant = _section(PvPlantSpec, raw.get("plant", {}), "plant")
    battery = _battery(raw.get("battery", DEFAULT_BATTERY_PRESET), "battery")

    candidates_raw = raw.get("battery_candidates", list(BATTERY_PRESETS))
    if not isinstance(candidates_raw, list) or not candidates_raw:
        raise ConfigError("battery_candidates: expected a non-empty list")
    candidates = tuple(
        _battery(item, f"battery_candidates[{k}]") for k, item in enumerate(candidates_raw)
    )

    diesel_raw = raw.get("diesel", DEFAULT_DIESEL_PRESET)
    if isinstance(diesel_raw, str):
        diesel = _section(DieselSpec, load_preset(diesel_raw), f"preset {diesel_raw}")
    else:
        diesel = _section(DieselSpec, diesel_raw, "diesel")

    econ = _section(EconomicParams, raw.get("econ", {}), "econ")
    constraints = _section(
        ConstraintConfig, _coerce_inf(raw.get("constraints", {})), "constraints"
    )

    cases_raw = raw.get("cases", ["A", "B", "C", "D", "baseline"])
    if not isinstance(cases_raw, list) or not cases_raw:
        raise ConfigError("cases: at least one case must be selected")
    seen = []
    for c in cases_raw:
        if c not in RUN_CASES:
            raise ConfigError(f"cases: unknown case {c!r}; valid: {', '.join(RUN_CASES)}")
        if c not in seen:
            seen.append(c)
    cases = tuple(seen)

    solver = _section(SolveOptions, raw.get("solver", {}), "solver")
    output_dir = Path(raw.get("output_dir", "out"))
    if not output_dir.is_absolute():
        output_dir = path.parent / output_dir

    return RunConfig(
        weather_file=weather_file,
        weather_synth=weather_synth,
        plant=plant,
        battery=battery,
        battery_candidates=candidates,
        diesel=diesel,
        econ=econ,
        constraints=constraints,
        cases=cases,
        output_dir=output_dir,
        solver=solver,
    )
