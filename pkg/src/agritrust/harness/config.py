"""Run configuration: dataclasses, TOML/JSON loading, hyperparameter profiles."""

from __future__ import annotations

import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from agritrust.agronomics import RewardWeights, scenario_weights
from agritrust.cropsim import CropConfig, WeatherSeries, load_weather, perturb_weather
from agritrust.learner.dqn import PreferenceWeight
from agritrust.learner.train import LearnerConfig
from agritrust.trust import TrustParams

PROFILE_ENV = "AGRITRUST_PROFILE"
DEFAULT_PROFILE = "full"
DEFAULT_GRID = ((1.0, 0.0), (0.75, 0.25), (0.5, 0.5), (0.25, 0.75), (0.0, 1.0))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WeatherConfig:
    path: str | None = None  # None: bundled season
    delta_t: float = 0.0
    precip_scale: float = 1.0

    def load(self) -> WeatherSeries:
        return perturb_weather(load_weather(self.path), self.delta_t, self.precip_scale)


@dataclass(frozen=True)
class RunConfig:
    scenario: int = 1
    reward: RewardWeights | None = None  # None: the scenario preset
    trust: TrustParams = field(default_factory=TrustParams)
    weather: WeatherConfig = field(default_factory=WeatherConfig)
    planting_doy: int = 115
    season_length: int = 160
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    grid: tuple = DEFAULT_GRID
    eval_episodes: int = 5
    trust_shaping: bool = False
    yield_shaping: bool = False
    seed: int = 0
    output_dir: str = "runs/default"
    workers: int = 1

    @property
    def weights(self) -> RewardWeights:
        return self.reward if self.reward is not None else scenario_weights(self.scenario)

    @property
    def preferences(self) -> list[PreferenceWeight]:
        return [PreferenceWeight(*w) for w in self.grid]

    def crop(self) -> CropConfig:
        return CropConfig(planting_doy=self.planting_doy, season_length=self.season_length)

    def validate(self) -> "RunConfig":
        try:
            self.weights
            self.preferences
            self.learner.validate()
            self.crop().params.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.grid:
            raise ConfigError("preference grid is empty")
        if self.eval_episodes < 1 or self.workers < 1:
            raise ConfigError("eval_episodes and workers must be positive")
        if self.weather.precip_scale < 0:
            raise ConfigError("precip_scale must be non-negative")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = [list(w) for w in self.grid]
        d["trust"]["window"] = list(self.trust.window)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _build(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def from_dict(data: dict) -> RunConfig:
    data = dict(data)
    nested = {
        "trust": TrustParams,
        "weather": WeatherConfig,
        "learner": LearnerConfig,
    }
    for key, cls in nested.items():
        if key in data:
            data[key] = _build(cls, data[key], key)
    if data.get("reward") is not None:
        data["reward"] = _build(RewardWeights, data["reward"], "reward")
    if "grid" in data:
        data["grid"] = tuple(tuple(float(x) for x in w) for w in data["grid"])
    return _build(RunConfig, data, "config").validate()


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _read(path: Path) -> dict:
    try:
        if path.suffix == ".json":
            return json.loads(path.read_text())
        return tomllib.loads(path.read_text())
    except (OSError, ValueError) as exc:  # TOMLDecodeError and JSONDecodeError are ValueErrors
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def profile_data(name: str | None = None) -> dict:
    """Raw profile table. ``name`` is a bundled profile name or a path to a TOML file."""
    name = name or os.environ.get(PROFILE_ENV) or DEFAULT_PROFILE
    if name.endswith((".toml", ".json")) or os.sep in name:
        return _read(Path(name))
    res = resources.files("agritrust.profiles").joinpath(f"{name}.toml")
    if not res.is_file():
        raise ConfigError(f"unknown profile {name!r}")
    return tomllib.loads(res.read_text())


def load_config(path: str | Path | None = None, profile: str | None = None, **overrides) -> RunConfig:
    """Profile defaults, overlaid by the config file, overlaid by keyword overrides."""
    data = profile_data(profile)
    if path is not None:
        data = _merge(data, _read(Path(path)))
    data = _merge(data, overrides)
    return from_dict(data)


def with_weather(cfg: RunConfig, delta_t: float, precip_scale: float, output_dir: str | None = None) -> RunConfig:
    w = replace(cfg.weather, delta_t=delta_t, precip_scale=precip_scale)
    return replace(cfg, weather=w, output_dir=output_dir or cfg.output_dir)
