"""Set-valued (Pareto) Q-learning on small deterministic MDPs.

Each state-action pair holds a set of return vectors. A backup pairs every
stored vector ``q`` with every member ``p`` of the non-dominated union of the
successor's sets and keeps the non-dominated part of
``{q + alpha * (r + gamma * p - q)}``. With ``alpha = 1`` on a deterministic,
acyclic MDP this converges to the exact set of achievable returns.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from agritrust.learner.pareto import pareto_front, truncate

DEFAULT_CAP = 50


def tabular_pq_update(qset, reward, next_sets, alpha: float, gamma: float, done: bool, cap: int = DEFAULT_CAP):
    """One Pareto-Q backup of ``Qset(s, a)``.

    ``next_sets`` is an iterable of the successor's per-action sets; it is
    ignored when ``done`` (the bootstrap is the zero vector).
    """
    r = np.asarray(reward, dtype=float)
    if done:
        boot = [np.zeros_like(r)]
    else:
        union = [v for s in next_sets for v in s]
        boot = [np.asarray(p) for p in pareto_front(union)] or [np.zeros_like(r)]
    candidates = []
    for q in qset:
        q = np.asarray(q, dtype=float)
        for p in boot:
            candidates.append(tuple(q + alpha * (r + gamma * p - q)))
    return truncate(pareto_front(candidates), cap)


@dataclass(frozen=True)
class ToyMDP:
    """Deterministic MDP: ``transitions[s][a] = (next_state, reward_vector, done)``."""

    transitions: dict
    start: int = 0
    n_objectives: int = 2

    def actions(self, s):
        return sorted(self.transitions[s])

    def step(self, s, a):
        return self.transitions[s][a]


def five_state_mdp() -> ToyMDP:
    """Acyclic five-state MDP with twelve paths and a six-point return front."""
    t = {
        0: {0: (1, (1.0, 0.0), False), 1: (2, (0.0, 1.0), False), 2: (3, (0.5, 0.5), False)},
        1: {0: (4, (2.0, 0.0), False), 1: (4, (0.0, 1.5), False)},
        2: {0: (4, (0.0, 2.0), False), 1: (4, (1.0, 0.0), False)},
        3: {0: (4, (1.0, 1.0), False), 1: (4, (0.0, 0.0), False)},
        4: {0: (4, (0.5, 0.5), True), 1: (4, (1.0, 0.0), True)},
    }
    return ToyMDP(t)


def grid_mdp(size: int = 3, seed: int = 2) -> ToyMDP:
    """``size x size`` grid moved right (0) or down (1) to the far corner.

    Each entered cell pays a fixed random 2-D reward (multiples of 0.25); the episode ends on the
    corner. Moves off the grid are clamped, so every state has both actions.
    """
    rng = np.random.default_rng(seed)
    # quarter units keep every path sum exact in floating point
    rewards = rng.integers(0, 13, size=(size, size, 2)) / 4.0
    goal = size * size - 1
    t = {}
    for r_, c in itertools.product(range(size), range(size)):
        s = r_ * size + c
        if s == goal:
            continue
        t[s] = {}
        for a, (dr, dc) in enumerate(((0, 1), (1, 0))):
            nr, nc = min(r_ + dr, size - 1), min(c + dc, size - 1)
            if (nr, nc) == (r_, c):
                nr, nc = (r_ + 1, c) if a == 0 else (r_, c + 1)
            ns = nr * size + nc
            t[s][a] = (ns, tuple(float(x) for x in rewards[nr, nc]), ns == goal)
    return ToyMDP(t)


def enumerate_front(mdp: ToyMDP, gamma: float = 1.0):
    """Pareto front of the returns of every deterministic stationary policy (brute force)."""
    states = sorted(mdp.transitions)
    returns = []
    for choice in itertools.product(*(mdp.actions(s) for s in states)):
        policy = dict(zip(states, choice))
        s, total, disc, seen = mdp.start, np.zeros(mdp.n_objectives), 1.0, 0
        while True:
            ns, r, done = mdp.step(s, policy[s])
            total = total + disc * np.asarray(r)
            disc *= gamma
            seen += 1
            if done or seen > 10 * len(states):
                break
            s = ns
        returns.append(tuple(total))
    return pareto_front(returns)


class ParetoQLearner:
    def __init__(self, mdp: ToyMDP, alpha: float = 1.0, gamma: float = 1.0, cap: int = DEFAULT_CAP, seed: int = 0):
        self.mdp = mdp
        self.alpha = alpha
        self.gamma = gamma
        self.cap = cap
        self.rng = np.random.default_rng(seed)
        zero = (0.0,) * mdp.n_objectives
        self.q = {s: {a: [zero] for a in mdp.actions(s)} for s in mdp.transitions}

    def update(self, s, a):
        ns, r, done = self.mdp.step(s, a)
        nxt = () if done else self.q[ns].values()
        self.q[s][a] = tabular_pq_update(self.q[s][a], r, nxt, self.alpha, self.gamma, done, self.cap)
        return ns, done

    def train(self, episodes: int = 500):
        """Uniform-random exploration; every visited pair is backed up."""
        for _ in range(episodes):
            s, steps = self.mdp.start, 0
            while True:
                acts = self.mdp.actions(s)
                a = acts[int(self.rng.integers(len(acts)))]
                s, done = self.update(s, a)
                steps += 1
                if done or steps > 1000:
                    break
        return self

    def front(self, s=None):
        s = self.mdp.start if s is None else s
        return pareto_front(v for vs in self.q[s].values() for v in vs)
