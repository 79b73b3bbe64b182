"""Surrogate maize nitrogen simulator exposing the ten daily observation variables.

The model is a single-layer bucket for soil water plus one nitrate pool:

* water: ``sw <- clamp(sw + infiltration * rain / root_zone - ET(tmax, tmin))``
  with a linear drain of anything above field capacity;
* nitrate: applied N and temperature-driven mineralization enter the pool,
  rain-driven leaching ``lambda * pool * min(1, rain / rain_ref)`` leaves it,
  then the crop takes ``min(pool, demand(dap))``;
* growth: ``g_max * f_T * f_N * f_W * canopy(xlai)`` where ``f_N`` is the crop's
  N status, ``(cumulative uptake / cumulative demand) ** n_response``;
  yield is ``harvest_index * biomass`` on the last day.

Nitrogen uptake is deliberately independent of soil water, so the nitrate pool
responds to rain only through leaching. That keeps total leaching monotone in
a precipitation scaling as long as the summed daily leaching fractions stay
below one, which holds by a wide margin for the calibrated constants.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

N_ACTIONS = 41
RATE_STEP = 5.0

OBS_FIELDS = (
    "cumsumfert",
    "dap",
    "istage",
    "pltpop",
    "rain",
    "sw",
    "tmax",
    "tmin",
    "vstage",
    "xlai",
)


class SimulationError(RuntimeError):
    """Raised when the simulator is misconfigured or misused."""


def action_to_rate(k: int) -> float:
    """Daily nitrogen rate in kg/ha for grid index ``k`` (5 kg/ha steps, 0..40)."""
    if isinstance(k, bool) or int(k) != k or not 0 <= k < N_ACTIONS:
        raise ValueError(f"action index must be an integer in [0, {N_ACTIONS - 1}], got {k!r}")
    return RATE_STEP * int(k)


@dataclass(frozen=True)
class WeatherDay:
    doy: int
    tmax: float
    tmin: float
    rain: float

    def __post_init__(self):
        if not 1 <= self.doy <= 366:
            raise ValueError(f"doy out of range: {self.doy}")
        if self.tmax < self.tmin:
            raise ValueError(f"tmax < tmin on doy {self.doy}")
        if self.rain < 0:
            raise ValueError(f"negative rain on doy {self.doy}")


class WeatherSeries:
    """Consecutive daily weather records, indexable by day of year."""

    def __init__(self, days):
        self.days = tuple(days)
        if not self.days:
            raise ValueError("empty weather series")
        for prev, cur in zip(self.days, self.days[1:]):
            if cur.doy != prev.doy + 1:
                raise ValueError(f"weather days not consecutive at doy {prev.doy} -> {cur.doy}")
        self._first = self.days[0].doy

    def __len__(self):
        return len(self.days)

    def __eq__(self, other):
        return isinstance(other, WeatherSeries) and self.days == other.days

    def day(self, doy: int) -> WeatherDay:
        i = doy - self._first
        if not 0 <= i < len(self.days):
            raise SimulationError(f"no weather for doy {doy}")
        return self.days[i]

    def covers(self, start_doy: int, n_days: int) -> bool:
        return self._first <= start_doy and start_doy + n_days - 1 <= self.days[-1].doy

    @classmethod
    def from_csv(cls, path) -> "WeatherSeries":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or list(reader.fieldnames)[:4] != ["doy", "tmax", "tmin", "rain"]:
                raise ValueError(f"{path}: expected header doy,tmax,tmin,rain")
            days = [
                WeatherDay(int(r["doy"]), float(r["tmax"]), float(r["tmin"]), float(r["rain"]))
                for r in reader
            ]
        return cls(days)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["doy", "tmax", "tmin", "rain"])
            for d in self.days:
                writer.writerow([d.doy, repr(d.tmax), repr(d.tmin), repr(d.rain)])

    @classmethod
    def bundled(cls) -> "WeatherSeries":
        ref = resources.files("agritrust") / "data" / "ames_1999.csv"
        with resources.as_file(ref) as path:
            return cls.from_csv(path)


def perturb_weather(series: WeatherSeries, delta_t: float = 0.0, precip_scale: float = 1.0) -> WeatherSeries:
    """Shift every temperature by ``delta_t`` and multiply every rain amount by ``precip_scale``."""
    if precip_scale < 0:
        raise ValueError("precip_scale must be >= 0")
    if delta_t == 0 and precip_scale == 1:
        return WeatherSeries(series.days)
    return WeatherSeries(
        WeatherDay(d.doy, d.tmax + delta_t, d.tmin + delta_t, d.rain * precip_scale) for d in series.days
    )


@dataclass(frozen=True)
class CropParams:
    """Soil and crop constants of the surrogate. Defaults come from scripts/calibrate.py."""

    # soil water (volumetric fractions)
    sw_init: float = 0.28
    sw_wilt: float = 0.12
    sw_residual: float = 0.06
    sw_fc: float = 0.32
    sw_sat: float = 0.45
    root_zone_mm: float = 900.0
    infiltration: float = 0.85
    drain_rate: float = 0.5
    et_coef: float = 0.14
    et_tbase: float = 0.0
    stress_fraction: float = 0.35
    # nitrogen
    nitrate_init: float = 20.0
    mineralization_rate: float = 0.25
    leach_coef: float = 7.9e-5
    rain_ref: float = 25.0
    demand_total: float = 250.0
    demand_mid: float = 55.0
    demand_scale: float = 12.0
    n_response: float = 0.6
    # growth
    tt_base: float = 8.0
    g_max: float = 171.0
    harvest_index: float = 0.5
    canopy_k: float = 0.6
    t_opt_low: float = 18.0
    t_opt_high: float = 26.0
    t_max_growth: float = 34.0
    lai_max: float = 5.5

    def validate(self):
        if not 0 <= self.sw_residual <= self.sw_wilt < self.sw_fc <= self.sw_sat <= 1:
            raise SimulationError("soil water constants must satisfy 0 <= residual <= wilt < fc <= sat <= 1")
        if not self.sw_wilt <= self.sw_init <= self.sw_sat:
            raise SimulationError("initial soil water outside [wilt, sat]")
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v) or v < 0:
                raise SimulationError(f"crop parameter {f.name} must be finite and >= 0")
        if self.root_zone_mm <= 0 or self.rain_ref <= 0 or self.demand_scale <= 0:
            raise SimulationError("root_zone_mm, rain_ref and demand_scale must be positive")


@dataclass(frozen=True)
class CropConfig:
    planting_doy: int = 115
    season_length: int = 160
    pltpop: float = 7.6
    init_jitter: float = 0.05
    params: CropParams = field(default_factory=CropParams)


@dataclass(frozen=True)
class Observation:
    cumsumfert: float
    dap: int
    istage: float
    pltpop: float
    rain: float
    sw: float
    tmax: float
    tmin: float
    vstage: float
    xlai: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in OBS_FIELDS], dtype=np.float64)


@dataclass
class SoilState:
    nitrate_pool: float
    soil_water: float
    mineralization_rate: float


@dataclass
class CropState:
    dap: int = 0
    thermal_time: float = 0.0
    istage: float = 0.0
    vstage: float = 0.0
    xlai: float = 0.0
    biomass: float = 0.0
    n_uptake_cum: float = 0.0
    n_demand_cum: float = 0.0


@dataclass(frozen=True)
class StepOutcome:
    applied_n: float
    leach: float
    uptake: float
    mineralized: float
    done: bool
    harvest_yield: float | None = None


# thermal-time breakpoints (degree days) for the stage and leaf curves
_ISTAGE_TT = (0.0, 80.0, 450.0, 850.0, 1000.0, 1250.0, 1550.0, 1850.0, 2000.0)
_LAI_TT = (0.0, 150.0, 900.0, 1400.0, 2000.0)
_LAI_FRAC = (0.0, 0.05, 1.0, 1.0, 0.35)


def _istage(tt: float) -> float:
    return float(np.interp(tt, _ISTAGE_TT, np.arange(len(_ISTAGE_TT), dtype=float)))


def _vstage(tt: float) -> float:
    return min(20.0, max(0.0, (tt - 80.0) / 45.0))


def _temperature_factor(tavg: float, p: CropParams) -> float:
    if tavg <= p.tt_base or tavg >= p.t_max_growth:
        return 0.0
    if tavg < p.t_opt_low:
        return (tavg - p.tt_base) / (p.t_opt_low - p.tt_base)
    if tavg <= p.t_opt_high:
        return 1.0
    return (p.t_max_growth - tavg) / (p.t_max_growth - p.t_opt_high)


def _logistic(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


class CropEnv:
    """One growing season of the surrogate, stepped one day per action.

    Instances hold all mutable state themselves; run one per thread.
    """

    def __init__(self, config: CropConfig | None = None, weather: WeatherSeries | None = None):
        self.config = config or CropConfig()
        self.config.params.validate()
        if self.config.season_length < 1:
            raise SimulationError("season_length must be >= 1")
        self.weather = weather if weather is not None else WeatherSeries.bundled()
        if not self.weather.covers(self.config.planting_doy, self.config.season_length):
            raise SimulationError(
                f"weather does not cover doy {self.config.planting_doy}"
                f" + {self.config.season_length} days"
            )
        self.soil: SoilState | None = None
        self.crop: CropState | None = None
        self.done = True

    # -- bookkeeping exposed for mass-balance checks
    @property
    def doy(self) -> int:
        return self.config.planting_doy + self.crop.dap

    def demand(self, dap: int) -> float:
        p = self.config.params
        a = _logistic((dap + 1 - p.demand_mid) / p.demand_scale)
        b = _logistic((dap - p.demand_mid) / p.demand_scale)
        return p.demand_total * (a - b)

    def reset(self, seed: int | None = None) -> Observation:
        p = self.config.params
        rng = np.random.default_rng(seed)
        j = self.config.init_jitter
        scale = [float(x) for x in 1.0 + j * (2.0 * rng.random(2) - 1.0)]
        sw0 = min(p.sw_sat, max(p.sw_wilt, p.sw_init * scale[1]))
        self.soil = SoilState(p.nitrate_init * scale[0], sw0, p.mineralization_rate)
        self.crop = CropState()
        self.pool_start = self.soil.nitrate_pool
        self.cumsumfert = 0.0
        self.totals = dict(applied=0.0, uptake=0.0, leach=0.0, mineralized=0.0)
        self.done = False
        self._wx = self.weather.day(self.config.planting_doy)
        return self._observe()

    def _observe(self) -> Observation:
        c, w = self.crop, self._wx
        return Observation(
            cumsumfert=self.cumsumfert,
            dap=c.dap,
            istage=c.istage,
            pltpop=self.config.pltpop,
            rain=w.rain,
            sw=self.soil.soil_water,
            tmax=w.tmax,
            tmin=w.tmin,
            vstage=c.vstage,
            xlai=c.xlai,
        )

    def step(self, k: int) -> tuple[Observation, StepOutcome]:
        return self.step_rate(action_to_rate(k))

    def step_rate(self, applied: float) -> tuple[Observation, StepOutcome]:
        """Advance one day applying ``applied`` kg/ha; baseline plans may be off the action grid."""
        if self.done:
            raise SimulationError("step() called on a finished episode; call reset()")
        if not (math.isfinite(applied) and applied >= 0):
            raise ValueError(f"applied nitrogen must be finite and >= 0, got {applied!r}")
        p, soil, crop, w = self.config.params, self.soil, self.crop, self._wx
        tavg = 0.5 * (w.tmax + w.tmin)

        # water bucket
        canopy = 1.0 - math.exp(-p.canopy_k * crop.xlai)
        et_mm = p.et_coef * max(0.0, tavg - p.et_tbase) * (0.3 + 0.7 * canopy)
        sw = soil.soil_water + (p.infiltration * w.rain - et_mm) / p.root_zone_mm
        if sw > p.sw_fc:
            sw -= p.drain_rate * (sw - p.sw_fc)
        soil.soil_water = min(p.sw_sat, max(p.sw_residual, sw))
        f_w = min(1.0, max(0.0, (soil.soil_water - p.sw_wilt) / (p.stress_fraction * (p.sw_fc - p.sw_wilt))))

        # nitrate pool: inputs, leaching, uptake (each step monotone in the pool)
        mineralized = soil.mineralization_rate * (2.0 ** ((tavg - 20.0) / 10.0)) if tavg > 0 else 0.0
        pool = soil.nitrate_pool + applied + mineralized
        leach = p.leach_coef * pool * min(1.0, w.rain / p.rain_ref) if w.rain > 0 else 0.0
        pool -= leach
        demand = self.demand(crop.dap)
        uptake = min(pool, demand)
        pool -= uptake
        soil.nitrate_pool = max(0.0, pool)
        crop.n_demand_cum += demand
        f_n = ((crop.n_uptake_cum + uptake) / crop.n_demand_cum) ** p.n_response if crop.n_demand_cum > 0 else 1.0

        # growth and phenology
        crop.biomass += p.g_max * _temperature_factor(tavg, p) * f_n * f_w * canopy
        crop.n_uptake_cum += uptake
        crop.thermal_time += max(0.0, tavg - p.tt_base)
        crop.istage = _istage(crop.thermal_time)
        crop.vstage = _vstage(crop.thermal_time)
        crop.xlai = p.lai_max * float(np.interp(crop.thermal_time, _LAI_TT, _LAI_FRAC))
        crop.dap += 1

        self.cumsumfert += applied
        t = self.totals
        t["applied"] += applied
        t["uptake"] += uptake
        t["leach"] += leach
        t["mineralized"] += mineralized

        self.done = crop.dap >= self.config.season_length
        harvest = p.harvest_index * crop.biomass if self.done else None
        if not self.done:
            self._wx = self.weather.day(self.doy)
        outcome = StepOutcome(applied, leach, uptake, mineralized, self.done, harvest)
        return self._observe(), outcome

    def mass_balance_residual(self) -> float:
        """applied + mineralized - uptake - leach - (pool_end - pool_start); zero up to rounding."""
        t = self.totals
        return t["applied"] + t["mineralized"] - t["uptake"] - t["leach"] - (self.soil.nitrate_pool - self.pool_start)


def with_params(config: CropConfig, **overrides) -> CropConfig:
    """Copy of ``config`` with crop parameters replaced."""
    return replace(config, params=replace(config.params, **overrides))


def run_plan(plan: dict[int, float], config: CropConfig | None = None, weather: WeatherSeries | None = None, seed: int = 0):
    """Simulate a fixed ``{dap: kg/ha}`` schedule; returns (env, list of StepOutcome)."""
    env = CropEnv(config, weather)
    env.reset(seed)
    outcomes = []
    while not env.done:
        _, out = env.step_rate(float(plan.get(env.crop.dap, 0.0)))
        outcomes.append(out)
    return env, outcomes


def load_weather(path: str | Path | None = None) -> WeatherSeries:
    return WeatherSeries.bundled() if path is None else WeatherSeries.from_csv(path)
