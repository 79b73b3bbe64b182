"""Reward arithmetic, scenario presets, net income and episode summaries."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

KG_PER_BU_CORN = 25.4
KG_PER_LB = 0.4536

# DOY range of the preferred application window (April 1 - May 31, non-leap year)
DEFAULT_WINDOW = (91, 151)


@dataclass(frozen=True)
class RewardWeights:
    yield_price: float = 0.22  # $/kg grain
    n_price: float = 1.5  # $/kg N
    leach_penalty: float = 15.0  # $/kg leached
    labor_cost: float = 3.0  # $/application

    def __post_init__(self):
        for name in ("yield_price", "n_price", "leach_penalty", "labor_cost"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    def as_tuple(self):
        return (self.yield_price, self.n_price, self.leach_penalty, self.labor_cost)


FULL_WEIGHTS = RewardWeights()

_SCENARIOS = {
    1: replace(FULL_WEIGHTS, labor_cost=0.0),
    2: replace(FULL_WEIGHTS, leach_penalty=0.0, labor_cost=0.0),
    3: FULL_WEIGHTS,
    4: replace(FULL_WEIGHTS, leach_penalty=0.0),
}


def scenario_weights(scenario: int) -> RewardWeights:
    """Preset weights: 1 ignores labor, 2 ignores leaching and labor, 3 is full, 4 ignores leaching.

    The trust-aware experiments use scenario 1.
    """
    try:
        return _SCENARIOS[int(scenario)]
    except (KeyError, ValueError, TypeError):
        raise ValueError(f"unknown scenario {scenario!r}; expected one of 1, 2, 3, 4") from None


def _check_nonneg(**kw):
    for k, v in kw.items():
        if v < 0:
            raise ValueError(f"{k} must be >= 0, got {v!r}")


def step_reward(w: RewardWeights, n_t: float, l_t: float) -> float:
    """Daily reward outside harvest: ``-w2*N_t - w3*L_t``."""
    _check_nonneg(n_t=n_t, l_t=l_t)
    return -w.n_price * n_t - w.leach_penalty * l_t


def harvest_reward(w: RewardWeights, y: float, n_t: float, l_t: float, n_f: int) -> float:
    """Reward on the harvest day: ``w1*Y - w2*N_t - w3*L_t - w4*N_F``."""
    _check_nonneg(y=y, n_t=n_t, l_t=l_t, n_f=n_f)
    return w.yield_price * y - w.n_price * n_t - w.leach_penalty * l_t - w.labor_cost * n_f


def discounted_return(rewards: Iterable[float], gamma: float) -> float:
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    total, disc = 0.0, 1.0
    for r in rewards:
        total += disc * r
        disc *= gamma
    return total


def net_income(yield_bu_ac: float, fert_lb_ac: float, n_apps: int) -> float:
    """Revenue minus fertilizer and labor cost, $/acre, in US customary inputs."""
    _check_nonneg(yield_bu_ac=yield_bu_ac, fert_lb_ac=fert_lb_ac, n_apps=n_apps)
    w = FULL_WEIGHTS
    return (
        yield_bu_ac * KG_PER_BU_CORN * w.yield_price
        - fert_lb_ac * KG_PER_LB * w.n_price
        - w.labor_cost * n_apps
    )


@dataclass(frozen=True)
class ScheduleSummary:
    yield_kg_ha: float
    total_n_kg_ha: float
    n_apps: int
    in_window_apps: int
    total_leach_kg_ha: float

    def __post_init__(self):
        for name in ("yield_kg_ha", "total_n_kg_ha", "n_apps", "in_window_apps", "total_leach_kg_ha"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        if self.in_window_apps > self.n_apps:
            raise ValueError("in_window_apps cannot exceed n_apps")

    def as_dict(self):
        return {
            "yield_kg_ha": self.yield_kg_ha,
            "total_n_kg_ha": self.total_n_kg_ha,
            "n_apps": self.n_apps,
            "in_window_apps": self.in_window_apps,
            "total_leach_kg_ha": self.total_leach_kg_ha,
        }


@dataclass(frozen=True)
class ObjectiveVector:
    agronomic: float
    trust: float

    def __post_init__(self):
        if not (math.isfinite(self.agronomic) and math.isfinite(self.trust)):
            raise ValueError("objective components must be finite")

    def __iter__(self):
        yield self.agronomic
        yield self.trust

    def __len__(self):
        return 2


LOG_COLUMNS = ("dap", "doy", "action_k", "applied_n", "leach", "reward_agro", "reward_trust")


@dataclass(frozen=True)
class DayRecord:
    dap: int
    doy: int
    action_k: int  # -1 for off-grid baseline rates
    applied_n: float
    leach: float
    reward_agro: float
    reward_trust: float = 0.0


@dataclass
class EpisodeLog:
    days: list[DayRecord] = field(default_factory=list)
    harvest_yield: float | None = None

    @property
    def complete(self) -> bool:
        return self.harvest_yield is not None

    def plan(self) -> dict[int, float]:
        return {d.dap: d.applied_n for d in self.days if d.applied_n > 0}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(LOG_COLUMNS)
            for d in self.days:
                writer.writerow([d.dap, d.doy, d.action_k, repr(d.applied_n), repr(d.leach), repr(d.reward_agro), repr(d.reward_trust)])

    @classmethod
    def from_csv(cls, path, harvest_yield: float | None = None) -> "EpisodeLog":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        days = [
            DayRecord(int(r["dap"]), int(r["doy"]), int(r["action_k"]), float(r["applied_n"]),
                      float(r["leach"]), float(r["reward_agro"]), float(r["reward_trust"]))
            for r in rows
        ]
        return cls(days, harvest_yield)


def summarize(log: EpisodeLog, window: Sequence[int] = DEFAULT_WINDOW) -> ScheduleSummary:
    """Fold a finished episode log into (Y, total N, N_F, O_F, total leaching)."""
    if not log.complete:
        raise ValueError("cannot summarize an incomplete episode")
    lo, hi = window
    apps = [d for d in log.days if d.applied_n > 0]
    return ScheduleSummary(
        yield_kg_ha=log.harvest_yield,
        total_n_kg_ha=math.fsum(d.applied_n for d in log.days),
        n_apps=len(apps),
        in_window_apps=sum(1 for d in apps if lo <= d.doy <= hi),
        total_leach_kg_ha=math.fsum(d.leach for d in log.days),
    )


def reward_vector(
    w: RewardWeights,
    n_t: float,
    l_t: float,
    *,
    harvest: bool = False,
    y: float = 0.0,
    n_f: int = 0,
    trust_terminal: float | None = None,
) -> ObjectiveVector:
    """(agronomic reward, trust) for one day; trust is paid only on the harvest step."""
    if trust_terminal is not None and not harvest:
        raise ValueError("trust can only be supplied on the harvest step")
    if harvest:
        agro = harvest_reward(w, y, n_t, l_t, n_f)
    else:
        agro = step_reward(w, n_t, l_t)
    return ObjectiveVector(agro, 0.0 if trust_terminal is None else float(trust_terminal))


def season_total(w: RewardWeights, s: ScheduleSummary) -> float:
    """Undiscounted episode reward from its summary: ``w1*Y - w2*sum N - w3*sum L - w4*N_F``."""
    return (
        w.yield_price * s.yield_kg_ha
        - w.n_price * s.total_n_kg_ha
        - w.leach_penalty * s.total_leach_kg_ha
        - w.labor_cost * s.n_apps
    )
