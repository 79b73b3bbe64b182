"""Training runs, rollouts and climate sweeps, persisted as plain files in a run directory.

Layout of a run directory::

    config.json          resolved RunConfig
    weather.csv          the (perturbed) weather the run used
    checkpoints/w{i}.bin one Q-network per preference weight
    episodes/*.csv       greedy evaluation episodes, plus the expert baseline
    front.json           non-dominated points: [{reward, trust, run_id, weight}]
    policies.json        per-weight evaluation means, baselines, the 50:50 selection
    report.md, front.svg rendered by agritrust.harness.report
    meta.json            timestamps and timings (the only non-reproducible file)
"""

from __future__ import annotations

import json
import logging
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import partial
from pathlib import Path

import numpy as np
import torch

from agritrust.cropsim import WeatherSeries
from agritrust.harness.config import RunConfig, with_weather
from agritrust.learner.dqn import PreferenceWeight, select_policy
from agritrust.learner.pareto import pareto_front
from agritrust.learner.qnet import QNetwork, load_checkpoint, save_checkpoint
from agritrust.learner.train import evaluate, train_policy
from agritrust.task import BASELINES, EpisodeResult, FertilizationTask, run_baseline

log = logging.getLogger(__name__)

SELECTION_WEIGHT = PreferenceWeight(0.5, 0.5)
AGNOSTIC_WEIGHT = PreferenceWeight(1.0, 0.0)


def make_task(cfg: RunConfig, weather: WeatherSeries) -> FertilizationTask:
    return FertilizationTask(cfg.crop(), weather, cfg.weights, cfg.trust,
                             cfg.trust_shaping, cfg.yield_shaping)


def _task_factory(cfg: RunConfig, weather: WeatherSeries):
    return partial(make_task, cfg, weather)


def run_seeds(seed: int, n_weights: int, n_eval: int):
    """Training seed per weight and one shared list of evaluation seeds."""
    children = np.random.SeedSequence(seed).spawn(n_weights + 1)
    train = [int(c.generate_state(1)[0]) for c in children[:-1]]
    evals = [int(x) for x in children[-1].generate_state(n_eval)]
    return train, evals


def mean_record(results: list[EpisodeResult]) -> dict:
    def avg(xs):
        return math.fsum(xs) / len(xs)

    return {
        "reward": avg([r.total_reward for r in results]),
        "trust": avg([r.trust.score for r in results]),
        "yield_kg_ha": avg([r.summary.yield_kg_ha for r in results]),
        "total_n_kg_ha": avg([r.summary.total_n_kg_ha for r in results]),
        "total_leach_kg_ha": avg([r.summary.total_leach_kg_ha for r in results]),
        "n_apps": avg([r.summary.n_apps for r in results]),
        "in_window_apps": avg([r.summary.in_window_apps for r in results]),
    }


@dataclass
class WeightOutcome:
    index: int
    weight: PreferenceWeight
    state: dict  # network state_dict, so worker processes can hand it back
    net_spec: tuple
    results: list
    seconds: float
    updates: int
    selected_episode: int | None = None


def _train_weight(cfg: RunConfig, weather: WeatherSeries, index: int, seed: int, eval_seeds: list[int]):
    torch.set_num_threads(1)  # same arithmetic in workers and in-process
    weight = cfg.preferences[index]
    factory = _task_factory(cfg, weather)
    net, stats = train_policy(factory, weight, cfg.learner, seed=seed)
    results = evaluate(net, weight, factory, eval_seeds, cfg.learner)
    spec = (net.hidden, net.n_actions, net.n_objectives, net.obs_dim, net.history)
    log.info("weight %s: %d updates in %.1fs", weight.as_tuple(), stats.updates, stats.seconds)
    return WeightOutcome(index, weight, net.state_dict(), spec, results, stats.seconds, stats.updates,
                         stats.selected_episode)


def assemble_front(policies: list[dict], norms) -> dict:
    """Non-dominated subset of the per-weight means and the 50:50 selection."""
    points = [(p["reward"], p["trust"]) for p in policies]
    keep = set(pareto_front(points))
    front = [p for p in policies if (p["reward"], p["trust"]) in keep]
    # the same mean point reached by two weights appears once
    seen, unique = set(), []
    for p in front:
        key = (p["reward"], p["trust"])
        if key not in seen:
            seen.add(key)
            unique.append(p)
    chosen = select_policy([((p["reward"], p["trust"]), p["run_id"]) for p in unique], SELECTION_WEIGHT, norms)
    agnostic = next((p["run_id"] for p in policies if tuple(p["weight"]) == AGNOSTIC_WEIGHT.as_tuple()), None)
    return {"policies": policies, "front": unique, "selected": chosen[1], "agnostic": agnostic}


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def train(cfg: RunConfig, out_dir: str | Path | None = None) -> dict:
    """Train one policy per preference weight, evaluate, persist; returns the front document."""
    from agritrust.harness.report import write_report

    cfg.validate()
    out = Path(out_dir or cfg.output_dir)
    try:
        (out / "checkpoints").mkdir(parents=True, exist_ok=True)
        (out / "episodes").mkdir(exist_ok=True)
    except OSError as exc:
        raise RuntimeError(f"cannot create run directory {out}: {exc}") from exc
    started = datetime.now(timezone.utc)
    weather = cfg.weather.load()
    (out / "config.json").write_text(cfg.to_json())
    weather.to_csv(out / "weather.csv")

    train_seeds, eval_seeds = run_seeds(cfg.seed, len(cfg.grid), cfg.eval_episodes)
    jobs = [(cfg, weather, i, train_seeds[i], eval_seeds) for i in range(len(cfg.grid))]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_train_weight, *zip(*jobs)))
    else:
        outcomes = [_train_weight(*job) for job in jobs]

    policies = []
    timings = {}
    for oc in outcomes:
        run_id = f"w{oc.index}"
        net = QNetwork(*oc.net_spec[:2], n_objectives=oc.net_spec[2], obs_dim=oc.net_spec[3], history=oc.net_spec[4])
        net.load_state_dict(oc.state)
        save_checkpoint(net, out / "checkpoints" / f"{run_id}.bin")
        for g, res in enumerate(oc.results):
            res.log.to_csv(out / "episodes" / f"{run_id}_eval{g}.csv")
        policies.append({"run_id": run_id, "weight": list(oc.weight.as_tuple()), **mean_record(oc.results)})
        timings[run_id] = {"seconds": oc.seconds, "updates": oc.updates, "selected_episode": oc.selected_episode}

    factory = _task_factory(cfg, weather)
    baselines = {}
    for name in ("expert",):
        res = [run_baseline(factory(), BASELINES[name], s) for s in eval_seeds]
        res[0].log.to_csv(out / "episodes" / f"{name}.csv")
        baselines[name] = mean_record(res)

    doc = assemble_front(policies, (cfg.learner.reward_ref, cfg.learner.trust_ref))
    doc["baselines"] = baselines
    _write_json(out / "front.json", front_export(doc))
    _write_json(out / "policies.json", doc)
    finished = datetime.now(timezone.utc)
    _write_json(out / "meta.json", {
        "started": started.isoformat(),
        "finished": finished.isoformat(),
        "seconds": (finished - started).total_seconds(),
        "per_weight": timings,
        "python": platform.python_version(),
        "torch": torch.__version__,
        "numpy": np.__version__,
    })
    write_report([out], out)
    return doc


def front_export(doc: dict) -> list[dict]:
    return [{k: p[k] for k in ("reward", "trust", "run_id", "weight")} for p in doc["front"]]


def load_policies(run_dir: str | Path) -> dict:
    path = Path(run_dir) / "policies.json"
    if not path.is_file():
        raise FileNotFoundError(f"{run_dir}: no policies.json")
    return json.loads(path.read_text())


def checkpoint_weight(path: str | Path) -> PreferenceWeight | None:
    """Preference weight of a checkpoint saved inside a run directory, if recorded there."""
    path = Path(path)
    doc = path.parent.parent / "policies.json"
    if not doc.is_file():
        return None
    for p in json.loads(doc.read_text())["policies"]:
        if p["run_id"] == path.stem:
            return PreferenceWeight(*p["weight"])
    return None


def rollout(cfg: RunConfig, *, policy: str | Path | None = None, baseline: str | None = None,
            weight: PreferenceWeight | None = None, seed: int = 0) -> EpisodeResult:
    """One greedy episode of a saved policy or a named baseline plan."""
    if (policy is None) == (baseline is None):
        raise ValueError("give exactly one of policy or baseline")
    weather = cfg.weather.load()
    factory = _task_factory(cfg, weather)
    if baseline is not None:
        if baseline not in BASELINES:
            raise ValueError(f"unknown baseline {baseline!r}; choose from {sorted(BASELINES)}")
        return run_baseline(factory(), BASELINES[baseline], seed)
    net = load_checkpoint(policy)
    expected = len(factory().reset(seed))
    if net.obs_dim != expected:
        raise ValueError(f"policy expects {net.obs_dim} observation fields, environment gives {expected}")
    if weight is None:
        weight = checkpoint_weight(policy)
    if weight is None:
        if net.n_objectives != 1:
            raise ValueError("vector-valued policy needs a preference weight")
        weight = AGNOSTIC_WEIGHT
    if (net.n_objectives == 1) != weight.is_scalar:
        raise ValueError("preference weight does not match the policy's objective count")
    return evaluate(net, weight, factory, [seed], cfg.learner)[0]


def parse_scenario(token: str) -> tuple[float, float]:
    """``+2C`` / ``-1C`` shift temperature; ``-20%`` / ``+10%`` scale precipitation; ``base`` is identity."""
    t = token.strip()
    if t.lower() in ("base", "0"):
        return 0.0, 1.0
    try:
        if t.upper().endswith("C"):
            return float(t[:-1]), 1.0
        if t.endswith("%"):
            scale = 1.0 + float(t[:-1]) / 100.0
            if scale < 0:
                raise ValueError
            return 0.0, scale
    except ValueError:
        pass
    raise ValueError(f"bad scenario {token!r}: expected e.g. +2C or -20%")


def scenario_dir_name(token: str) -> str:
    dt, ps = parse_scenario(token)
    if (dt, ps) == (0.0, 1.0):
        return "base"
    if dt:
        return f"temp{dt:+g}C"
    return f"precip{(ps - 1) * 100:+g}pct"


def climate_sweep(cfg: RunConfig, scenarios: list[str], out_dir: str | Path | None = None) -> dict:
    """Base run plus one run per perturbation; writes comparison.md and comparison.json."""
    from agritrust.harness.report import comparison_rows, render_comparison

    out = Path(out_dir or cfg.output_dir)
    tokens = ["base"] + [s for s in scenarios if scenario_dir_name(s) != "base"]
    runs = {}
    for tok in tokens:
        dt, ps = parse_scenario(tok)
        name = scenario_dir_name(tok)
        sub = with_weather(cfg, cfg.weather.delta_t + dt, cfg.weather.precip_scale * ps, str(out / name))
        log.info("sweep scenario %s", name)
        train(sub)
        runs[name] = out / name
    rows = comparison_rows(runs)
    _write_json(out / "comparison.json", rows)
    (out / "comparison.md").write_text(render_comparison(rows))
    return rows


def survey_weighted_rank(dist) -> float:
    """Weighted rank score over five preference buckets, most preferred first (worth 5 .. 1)."""
    p = [float(x) for x in dist]
    if len(p) != 5:
        raise ValueError("need exactly five bucket shares")
    if any(x < 0 for x in p) or abs(math.fsum(p) - 1.0) > 1e-6:
        raise ValueError(f"bucket shares must be non-negative and sum to 1, got {math.fsum(p):.6f}")
    return math.fsum(share * rank for share, rank in zip(p, (5, 4, 3, 2, 1)))
