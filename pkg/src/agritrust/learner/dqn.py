"""Replay, TD targets and updates for scalar and preference-conditioned vector Q-learning."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from agritrust.learner.qnet import QNetwork


@dataclass(frozen=True)
class PreferenceWeight:
    w_reward: float
    w_trust: float

    def __post_init__(self):
        if self.w_reward < 0 or self.w_trust < 0 or not math.isclose(self.w_reward + self.w_trust, 1.0, abs_tol=1e-9):
            raise ValueError(f"preference weight must lie on the simplex, got ({self.w_reward}, {self.w_trust})")

    def as_tuple(self):
        return (self.w_reward, self.w_trust)

    @property
    def is_scalar(self) -> bool:
        return self.w_trust == 0.0


def weight_grid(n: int) -> list[PreferenceWeight]:
    """``n`` evenly spaced weights from (1, 0) to (0, 1)."""
    if n < 1:
        raise ValueError("grid needs at least one point")
    if n == 1:
        return [PreferenceWeight(1.0, 0.0)]
    out = []
    for i in range(n):
        t = round(i / (n - 1), 12)
        out.append(PreferenceWeight(round(1.0 - t, 12), t))
    return out


@dataclass(frozen=True)
class Transition:
    """One step with the observation history up to ``t`` and up to ``t + 1``."""

    obs_seq: np.ndarray  # [t + 1, D]
    action: int
    reward: np.ndarray  # [m]
    next_obs_seq: np.ndarray  # [t + 2, D]
    done: bool


class ReplayBuffer:
    """Bounded FIFO with a seeded uniform sampler."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items = deque(maxlen=capacity)

    def push(self, item) -> None:
        self._items.append(item)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]

    def sample(self, n: int, rng: np.random.Generator) -> list:
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(len(self._items), size=n)
        return [self._items[i] for i in idx]


@dataclass
class Episode:
    """Arrays for one finished episode: obs [T+1, D], actions [T], rewards [T, m], dones [T]."""

    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray

    def __len__(self):
        return len(self.actions)

    def transition(self, t: int) -> Transition:
        return Transition(self.obs[: t + 1], int(self.actions[t]), self.rewards[t], self.obs[: t + 2], bool(self.dones[t]))


class EpisodeReplay:
    """Replay of whole episodes, capacity counted in transitions.

    ``sample_positions`` is uniform over stored transitions; keeping episodes
    intact lets the recurrent encoder see each transition's full history.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.episodes: deque[Episode] = deque()
        self.size = 0

    def push(self, ep: Episode) -> None:
        self.episodes.append(ep)
        self.size += len(ep)
        while self.size > self.capacity and len(self.episodes) > 1:
            self.size -= len(self.episodes.popleft())

    def __len__(self):
        return self.size

    def sample_positions(self, n: int, rng: np.random.Generator) -> list[tuple[Episode, int]]:
        if not self.episodes:
            raise ValueError("cannot sample from an empty buffer")
        lengths = np.fromiter((len(e) for e in self.episodes), dtype=np.int64)
        cum = np.cumsum(lengths)
        flat = rng.integers(cum[-1], size=n)
        ep_idx = np.searchsorted(cum, flat, side="right")
        starts = cum - lengths
        return [(self.episodes[e], int(f - starts[e])) for e, f in zip(ep_idx, flat)]


@dataclass
class SequenceBatch:
    """Tensors for a batch of TD updates.

    Q_E is read at ``obs[i, pos[i]]`` and the bootstrap from ``next_obs[i, next_pos[i]]``.
    """

    obs: torch.Tensor  # [B, L, D]
    pos: torch.Tensor  # [B]
    next_obs: torch.Tensor  # [B, L', D]
    next_pos: torch.Tensor  # [B]
    actions: torch.Tensor  # [B]
    rewards: torch.Tensor  # [B, m]
    dones: torch.Tensor  # [B]

    def __len__(self):
        return int(self.actions.shape[0])


def window(obs: np.ndarray, end: int, length: int) -> np.ndarray:
    """Rows ``end - length + 1 .. end`` of ``obs``, zero-padded on the left."""
    lo = end - length + 1
    if lo >= 0:
        return obs[lo:end + 1]
    pad = np.zeros((-lo, obs.shape[1]), dtype=obs.dtype)
    return np.concatenate([pad, obs[: end + 1]])


def _pad_right(seqs: Sequence[np.ndarray]) -> np.ndarray:
    n = max(len(s) for s in seqs)
    out = np.zeros((len(seqs), n, seqs[0].shape[1]), dtype=np.float32)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out


def collate(items: Sequence[tuple[np.ndarray, int, int, np.ndarray, bool]], history: int | None,
            dtype=torch.float32) -> SequenceBatch:
    """Build a batch from ``(episode_obs, t, action, reward, done)`` items.

    ``episode_obs`` must contain at least rows ``0 .. t + 1``.
    """
    if not items:
        raise ValueError("empty batch")
    if history is None:
        seqs = [obs[: t + 2] for obs, t, *_ in items]
        obs_t = torch.as_tensor(_pad_right(seqs), dtype=dtype)
        pos = torch.tensor([t for _, t, *_ in items])
        next_obs, next_pos = obs_t, pos + 1
    else:
        cur = np.stack([window(obs, t, history) for obs, t, *_ in items]).astype(np.float32)
        nxt = np.stack([window(obs, t + 1, history) for obs, t, *_ in items]).astype(np.float32)
        obs_t = torch.as_tensor(cur, dtype=dtype)
        next_obs = torch.as_tensor(nxt, dtype=dtype)
        pos = torch.full((len(items),), history - 1)
        next_pos = pos
    return SequenceBatch(
        obs=obs_t,
        pos=pos,
        next_obs=next_obs,
        next_pos=next_pos,
        actions=torch.tensor([int(a) for _, _, a, _, _ in items]),
        rewards=torch.as_tensor(np.stack([np.atleast_1d(r) for *_, r, _ in items]), dtype=dtype),
        dones=torch.tensor([float(d) for *_, d in items], dtype=dtype),
    )


def collate_transitions(transitions: Sequence[Transition], history: int | None = None, dtype=torch.float32) -> SequenceBatch:
    return collate([(tr.next_obs_seq, len(tr.obs_seq) - 1, tr.action, tr.reward, tr.done) for tr in transitions],
                   history, dtype)


def collate_positions(positions: Sequence[tuple[Episode, int]], history: int | None, dtype=torch.float32) -> SequenceBatch:
    return collate([(ep.obs, t, ep.actions[t], ep.rewards[t], ep.dones[t]) for ep, t in positions], history, dtype)


def _gather_rows(q: torch.Tensor, pos: torch.Tensor) -> torch.Tensor:
    return q[torch.arange(q.shape[0]), pos]


def q_values(net: QNetwork, obs: torch.Tensor, pos: torch.Tensor) -> torch.Tensor:
    """[B, A, m] Q-values of each history at ``pos``."""
    q, _ = net(obs)
    return _gather_rows(q, pos)


def dqn_targets(q_next: torch.Tensor, rewards: torch.Tensor, dones: torch.Tensor, gamma: float,
                q_select: torch.Tensor | None = None) -> torch.Tensor:
    """``r + gamma * max_a' Q_T(o', a')``, with no bootstrap on terminal steps. ``q_next`` is [B, A].

    With ``q_select`` (double Q-learning) the bootstrap action is ``argmax q_select`` instead,
    still valued by ``q_next``.
    """
    if q_select is None:
        boot = q_next.max(dim=1).values
    else:
        boot = q_next[torch.arange(q_next.shape[0]), torch.argmax(q_select, dim=1)]
    return rewards + gamma * (1.0 - dones) * boot


def morl_targets(q_next: torch.Tensor, rewards: torch.Tensor, dones: torch.Tensor,
                 w: PreferenceWeight, gamma: float, q_select: torch.Tensor | None = None) -> torch.Tensor:
    """Vector targets bootstrapped through the action maximizing ``w . Q_T(o', a')``.

    ``q_next`` is [B, A, m]; ties go to the lowest action index. ``q_select`` as in
    :func:`dqn_targets`.
    """
    wt = torch.tensor(w.as_tuple(), dtype=q_next.dtype)
    chooser = q_next if q_select is None else q_select
    a_star = torch.argmax(chooser @ wt, dim=1)
    boot = q_next[torch.arange(q_next.shape[0]), a_star]
    return rewards + gamma * (1.0 - dones).unsqueeze(1) * boot


def td_loss(net: QNetwork, target: QNetwork, batch: SequenceBatch, gamma: float,
            w: PreferenceWeight | None = None, double: bool = False) -> torch.Tensor:
    """Mean squared TD error; scalar mode when ``w`` is None.

    ``double`` picks bootstrap actions with the online network and values them with the target.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    q = q_values(net, batch.obs, batch.pos)
    idx = torch.arange(len(batch))
    with torch.no_grad():
        q_next = q_values(target, batch.next_obs, batch.next_pos)
        q_sel = q_values(net, batch.next_obs, batch.next_pos) if double else None
    if w is None:
        if net.n_objectives != 1:
            raise ValueError("scalar update needs a single-objective network")
        y = dqn_targets(q_next[..., 0], batch.rewards[:, 0], batch.dones, gamma,
                        None if q_sel is None else q_sel[..., 0])
        pred = q[idx, batch.actions, 0]
    else:
        if net.n_objectives != 2:
            raise ValueError("conditioned update needs a two-objective network")
        y = morl_targets(q_next, batch.rewards, batch.dones, w, gamma, q_sel)
        pred = q[idx, batch.actions]
    return torch.mean((pred - y) ** 2)


def _apply(optimizer, loss, net, grad_clip):
    optimizer.zero_grad()
    loss.backward()
    if grad_clip:
        torch.nn.utils.clip_grad_norm_(net.parameters(), grad_clip)
    optimizer.step()
    return float(loss.detach())


def dqn_update(net, target, optimizer, batch: SequenceBatch, gamma: float, grad_clip: float | None = None,
               double: bool = False) -> float:
    """One gradient step of scalar Q-learning toward ``r + gamma * max Q_T``; returns the loss."""
    return _apply(optimizer, td_loss(net, target, batch, gamma, double=double), net, grad_clip)


def conditioned_morl_update(net, target, optimizer, batch: SequenceBatch, w: PreferenceWeight, gamma: float,
                            grad_clip: float | None = None, double: bool = False) -> float:
    """One gradient step of vector Q-learning bootstrapped through the ``w``-scalarized argmax."""
    return _apply(optimizer, td_loss(net, target, batch, gamma, w, double), net, grad_clip)


def epsilon_greedy(qvals, epsilon: float, rng: np.random.Generator) -> int:
    """Uniform action with probability ``epsilon``, else the first maximizer."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    q = np.asarray(qvals)
    if rng.random() < epsilon:
        return int(rng.integers(q.shape[0]))
    return int(np.argmax(q))


def sync_target(net: QNetwork, target: QNetwork) -> None:
    target.load_state_dict(net.state_dict())


class TargetSync:
    """Copies evaluation parameters into the target every ``period`` calls to ``step``."""

    def __init__(self, period: int = 500):
        if period < 1:
            raise ValueError("period must be >= 1")
        self.period = period
        self.steps = 0
        self.syncs = 0

    def step(self, net: QNetwork, target: QNetwork) -> bool:
        self.steps += 1
        if self.steps % self.period == 0:
            sync_target(net, target)
            self.syncs += 1
            return True
        return False


def epsilon_at(episode: int, total: int, start: float, end: float, decay_fraction: float) -> float:
    """Linear decay from ``start`` to ``end`` over the first ``decay_fraction`` of episodes."""
    horizon = max(1, int(round(decay_fraction * total)))
    if episode >= horizon:
        return end
    return start + (end - start) * episode / horizon


def select_policy(front, w: PreferenceWeight, norms=(2000.0, 1.0)):
    """Pick the front member maximizing ``w . (reward / reward_ref, trust / trust_ref)``.

    ``front`` holds ``((reward, trust), payload)`` pairs; ties go to higher trust.
    Returns the winning pair.
    """
    items = list(front)
    if not items:
        raise ValueError("cannot select from an empty front")
    ref_r, ref_t = norms

    def key(item):
        (r, t), _ = item
        return (w.w_reward * r / ref_r + w.w_trust * t / ref_t, t)

    return max(items, key=key)
