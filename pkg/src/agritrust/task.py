"""Two-objective fertilization episode: (agronomic reward, trust) over the crop surrogate."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from agritrust import agronomics as ag
from agritrust.cropsim import RATE_STEP, CropConfig, CropEnv, WeatherSeries, action_to_rate
from agritrust.trust import TrustBreakdown, TrustParams, trust_score


@dataclass(frozen=True)
class EpisodeResult:
    summary: ag.ScheduleSummary
    total_reward: float
    trust: TrustBreakdown
    plan: dict  # dap -> kg/ha
    log: ag.EpisodeLog

    def as_dict(self):
        return {
            "total_reward": self.total_reward,
            **self.summary.as_dict(),
            **{f"trust_{k}": v for k, v in self.trust.as_dict().items()},
            "plan": {str(k): v for k, v in sorted(self.plan.items())},
        }


class FertilizationTask:
    """Steps a :class:`CropEnv` and pays daily agronomic rewards (input costs, then grain value at harvest) plus terminal trust.

    With ``trust_shaping`` the trust slot instead carries the difference of a
    potential (a smoothed trust of the schedule so far, yield held at the
    baseline), and the harvest step pays the remaining true trust, so
    per-episode sums of the trust slot still equal the final trust score.

    ``yield_shaping`` does the same for the agronomic slot: each day pays the
    grain value of that day's biomass gain (``w1 * HI * dB``) and the harvest
    step pays the rest, so the undiscounted episode total is unchanged.
    """

    def __init__(self, crop: CropConfig | None = None, weather: WeatherSeries | None = None,
                 weights: ag.RewardWeights = ag.scenario_weights(1), trust: TrustParams = TrustParams(),
                 trust_shaping: bool = False, yield_shaping: bool = False):
        self.env = CropEnv(crop, weather)
        self.weights = weights
        self.trust_params = trust
        self.trust_shaping = trust_shaping
        self.yield_shaping = yield_shaping
        self.log: ag.EpisodeLog | None = None

    @property
    def done(self) -> bool:
        return self.env.done

    def reset(self, seed: int | None = None) -> np.ndarray:
        self.log = ag.EpisodeLog()
        self._n_apps = 0
        self._leach = 0.0
        self._potential = 0.0
        self._paid = 0.0
        return self.env.reset(seed).as_array()

    def step(self, k: int):
        return self._advance(action_to_rate(k), int(k))

    def step_rate(self, rate: float):
        k = int(round(rate / RATE_STEP))
        return self._advance(float(rate), k if k * RATE_STEP == rate and 0 <= k <= 40 else -1)

    def _partial_potential(self) -> float:
        # Frequency and timing are scored as the final trust scores them. Total N
        # and leaching enter as ratios to their centres (min(N/c, c/N)), which
        # peak where the real factors peak but never vanish, so schedules that
        # overshoot early still see which way is better.
        p = self.trust_params
        apps = [d for d in self.log.days if d.applied_n > 0]
        total_n = sum(d.applied_n for d in apps)
        lo, hi = p.window
        s = ag.ScheduleSummary(p.yield_base, p.fert_center, len(apps),
                               sum(1 for d in apps if lo <= d.doy <= hi), p.leach_center)
        n_ratio = min(total_n / p.fert_center, p.fert_center / total_n) if total_n > 0 else 0.0
        leach_ratio = min(1.0, p.leach_center / self._leach) if self._leach > 0 else 1.0
        return trust_score(s, p).score * n_ratio * leach_ratio

    def _advance(self, rate: float, k: int):
        doy, dap = self.env.doy, self.env.crop.dap
        obs, out = self.env.step_rate(rate)
        if out.applied_n > 0:
            self._n_apps += 1
        self._leach += out.leach
        if out.done:
            agro = ag.harvest_reward(self.weights, out.harvest_yield, out.applied_n, out.leach, self._n_apps)
            agro -= self._paid
        else:
            agro = ag.step_reward(self.weights, out.applied_n, out.leach)
            if self.yield_shaping:
                value = self.weights.yield_price * self.env.config.params.harvest_index * self.env.crop.biomass
                agro += value - self._paid
                self._paid = value
        record = ag.DayRecord(dap, doy, k, out.applied_n, out.leach, agro, 0.0)
        self.log.days.append(record)
        trust_r = 0.0
        if out.done:
            self.log.harvest_yield = out.harvest_yield
            final = trust_score(ag.summarize(self.log, self.trust_params.window), self.trust_params).score
            trust_r = final - self._potential if self.trust_shaping else final
        elif self.trust_shaping:
            phi = self._partial_potential()
            trust_r, self._potential = phi - self._potential, phi
        if trust_r:
            self.log.days[-1] = replace(record, reward_trust=trust_r)
        return obs.as_array(), (agro, trust_r), out.done

    def result(self) -> EpisodeResult:
        if self.log is None or not self.log.complete:
            raise ValueError("episode not finished")
        s = ag.summarize(self.log, self.trust_params.window)
        return EpisodeResult(
            summary=s,
            total_reward=math.fsum(d.reward_agro for d in self.log.days),
            trust=trust_score(s, self.trust_params),
            plan=self.log.plan(),
            log=self.log,
        )


def run_baseline(task: FertilizationTask, plan: dict, seed: int | None = 0) -> EpisodeResult:
    task.reset(seed)
    while not task.done:
        task.step_rate(float(plan.get(task.env.crop.dap, 0.0)))
    return task.result()


BASELINES = {
    "expert": {0: 224.0},
    "reference": {0: 100.0, 30: 90.0},
    "zero": {},
}
