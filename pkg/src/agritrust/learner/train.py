"""Training loop: lockstep environments, episode replay, periodic target sync."""

from __future__ import annotations

import copy
import logging
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
import torch

from agritrust.learner.dqn import (
    Episode,
    EpisodeReplay,
    PreferenceWeight,
    TargetSync,
    collate_positions,
    conditioned_morl_update,
    dqn_update,
    epsilon_at,
    epsilon_greedy,
    window,
)
from agritrust.learner.qnet import QNetwork, clone_network
from agritrust.task import EpisodeResult, FertilizationTask

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LearnerConfig:
    episodes: int = 2000
    gamma: float = 0.99
    lr: float = 3e-5
    batch_size: int = 640
    hidden: int = 64
    history: int | None = None  # None: full-episode recurrence
    buffer_capacity: int = 100_000
    target_sync: int = 500  # gradient updates between target copies
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.5
    updates_per_episode: float = 1.0
    warmup_episodes: int = 10
    n_envs: int = 8
    reward_ref: float = 2000.0
    trust_ref: float = 1.0
    grad_clip: float | None = 10.0
    double: bool = False  # double Q-learning targets
    lr_end: float | None = None  # linear decay from lr to lr_end over training
    select_every: int = 0  # episodes between greedy validation passes; 0 keeps the final network
    select_episodes: int = 8
    eval_episodes: int = 1

    def validate(self):
        if self.episodes < 1 or self.batch_size < 1 or self.hidden < 1 or self.n_envs < 1:
            raise ValueError("episodes, batch_size, hidden and n_envs must be positive")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")
        if self.lr <= 0 or (self.lr_end is not None and self.lr_end <= 0):
            raise ValueError("lr and lr_end must be positive")
        if self.select_every < 0 or self.select_episodes < 1:
            raise ValueError("select_every must be >= 0 and select_episodes >= 1")
        if self.history is not None and self.history < 1:
            raise ValueError("history must be >= 1 or None")
        for name in ("eps_start", "eps_end", "eps_decay_fraction"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    def as_dict(self):
        return asdict(self)


class Policy:
    """Greedy (or epsilon-greedy) controller around a Q-network for a batch of environments."""

    def __init__(self, net: QNetwork, weight: PreferenceWeight):
        self.net = net
        self.weight = weight
        self._w = torch.tensor(weight.as_tuple(), dtype=torch.float32)

    def start(self, first_obs: np.ndarray):
        """Begin episodes from ``first_obs`` [E, D]; returns scalarized Q-values [E, A]."""
        self._hist = [first_obs[:, None, :].astype(np.float32)]
        self._h = None
        return self._scalarize(self._advance(first_obs))

    def observe(self, obs: np.ndarray):
        self._hist.append(obs[:, None, :].astype(np.float32))
        return self._scalarize(self._advance(obs))

    @torch.no_grad()
    def _advance(self, obs):
        if self.net.history is None:
            x = torch.as_tensor(obs[:, None, :], dtype=torch.float32)
            out, self._h = self.net.encode(x, self._h)
            return self.net.q_from_hidden(out[:, -1])
        hist = np.concatenate(self._hist, axis=1)
        t = hist.shape[1] - 1
        win = np.stack([window(h, t, self.net.history) for h in hist])
        q, _ = self.net(torch.as_tensor(win))
        return q[:, -1]

    def _scalarize(self, q):
        if self.net.n_objectives == 1:
            return q[..., 0].numpy()
        return (q @ self._w).numpy()


def _norm_reward(r, weight, refs):
    agro, trust = r
    if weight.is_scalar:
        return (agro / refs[0],)
    return (agro / refs[0], trust / refs[1])


def rollout_policy(net: QNetwork, weight: PreferenceWeight, make_task: Callable[[], FertilizationTask],
                   seeds, epsilon: float = 0.0, rng: np.random.Generator | None = None, refs=(2000.0, 1.0)):
    """Run one lockstep batch of episodes; returns (tasks, Episode records)."""
    tasks = [make_task() for _ in seeds]
    first = np.stack([t.reset(s) for t, s in zip(tasks, seeds)])
    pol = Policy(net, weight)
    q = pol.start(first)
    obs_hist = [[o] for o in first]
    acts = [[] for _ in tasks]
    rews = [[] for _ in tasks]
    rng = rng if rng is not None else np.random.default_rng(0)
    while not tasks[0].done:
        nxt = []
        for i, task in enumerate(tasks):
            a = epsilon_greedy(q[i], epsilon, rng)
            o, r, _ = task.step(a)
            acts[i].append(a)
            rews[i].append(_norm_reward(r, weight, refs))
            obs_hist[i].append(o)
            nxt.append(o)
        if tasks[0].done:
            break
        q = pol.observe(np.stack(nxt))
    episodes = []
    for i in range(len(tasks)):
        n = len(acts[i])
        dones = np.zeros(n, dtype=np.float32)
        dones[-1] = 1.0
        episodes.append(Episode(np.asarray(obs_hist[i], dtype=np.float32), np.asarray(acts[i], dtype=np.int64),
                                np.asarray(rews[i], dtype=np.float32), dones))
    return tasks, episodes


@dataclass
class TrainStats:
    losses: list
    returns: list  # per-episode undiscounted (agro, trust)
    seconds: float
    updates: int
    syncs: int
    selected_episode: int | None = None  # episode count of the kept snapshot, if selection ran
    validation: list | None = None  # (episodes, score) per validation pass


def validation_score(results: list[EpisodeResult], weight: PreferenceWeight, refs) -> float:
    """Mean scalarized outcome, normalized the same way as the training rewards."""
    w = weight.as_tuple()
    return float(np.mean([w[0] * r.total_reward / refs[0] + w[1] * r.trust.score / refs[1] for r in results]))


def train_policy(make_task: Callable[[], FertilizationTask], weight: PreferenceWeight, cfg: LearnerConfig,
                 seed: int = 0, progress: Callable[[int, float], None] | None = None):
    """Train one policy for preference ``weight``; returns (net, TrainStats).

    ``weight == (1, 0)`` trains a scalar Q-network on the agronomic reward alone.
    """
    cfg.validate()
    refs = (cfg.reward_ref, cfg.trust_ref)
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    n_obj = 1 if weight.is_scalar else 2
    net = QNetwork(cfg.hidden, n_objectives=n_obj, history=cfg.history)
    target = clone_network(net)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    replay = EpisodeReplay(cfg.buffer_capacity)
    sync = TargetSync(cfg.target_sync)
    losses, returns = [], []
    started = time.perf_counter()
    val_seeds = [int(x) for x in rng.integers(2**31, size=cfg.select_episodes)] if cfg.select_every else []
    best, validation = None, []

    def validate(at: int):
        nonlocal best
        tasks, _ = rollout_policy(net, weight, make_task, val_seeds, 0.0, refs=refs)
        score = validation_score([t.result() for t in tasks], weight, refs)
        validation.append((at, score))
        if best is None or score > best[0]:
            best = (score, at, copy.deepcopy(net.state_dict()))

    done_eps = 0
    update_credit = 0.0
    while done_eps < cfg.episodes:
        n = min(cfg.n_envs, cfg.episodes - done_eps)
        eps = epsilon_at(done_eps, cfg.episodes, cfg.eps_start, cfg.eps_end, cfg.eps_decay_fraction)
        if cfg.lr_end is not None:
            for group in opt.param_groups:
                group["lr"] = cfg.lr + (cfg.lr_end - cfg.lr) * done_eps / cfg.episodes
        seeds = [int(x) for x in rng.integers(2**31, size=n)]
        tasks, episodes = rollout_policy(net, weight, make_task, seeds, eps, rng, refs)
        for task, ep in zip(tasks, episodes):
            replay.push(ep)
            res = task.result()
            returns.append((res.total_reward, res.trust.score))
        done_eps += n
        if done_eps < cfg.warmup_episodes:
            continue
        update_credit += cfg.updates_per_episode * n
        while update_credit >= 1.0:
            update_credit -= 1.0
            batch = collate_positions(replay.sample_positions(cfg.batch_size, rng), cfg.history)
            if weight.is_scalar:
                loss = dqn_update(net, target, opt, batch, cfg.gamma, cfg.grad_clip, cfg.double)
            else:
                loss = conditioned_morl_update(net, target, opt, batch, weight, cfg.gamma, cfg.grad_clip,
                                              cfg.double)
            losses.append(loss)
            sync.step(net, target)
        if cfg.select_every and (done_eps // cfg.select_every > (done_eps - n) // cfg.select_every
                                 or done_eps == cfg.episodes):
            validate(done_eps)
        if progress is not None:
            progress(done_eps, eps)
    stats = TrainStats(losses, returns, time.perf_counter() - started, sync.steps, sync.syncs)
    if best is not None:
        net.load_state_dict(best[2])
        stats.selected_episode, stats.validation = best[1], validation
        log.info("kept snapshot from episode %d (validation score %.4f)", best[1], best[0])
    return net, stats


def evaluate(net: QNetwork, weight: PreferenceWeight, make_task: Callable[[], FertilizationTask], seeds,
             cfg: LearnerConfig | None = None) -> list[EpisodeResult]:
    """Greedy rollouts, one per seed."""
    refs = (cfg.reward_ref, cfg.trust_ref) if cfg is not None else (2000.0, 1.0)
    tasks, _ = rollout_policy(net, weight, make_task, list(seeds), 0.0, refs=refs)
    return [t.result() for t in tasks]
