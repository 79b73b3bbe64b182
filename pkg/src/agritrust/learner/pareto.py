"""Pareto dominance, non-dominated filtering and crowding-distance truncation."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


def dominates(u: Sequence[float], v: Sequence[float]) -> bool:
    """True iff ``u`` is at least as good as ``v`` everywhere and better somewhere."""
    if len(u) != len(v):
        raise ValueError("vectors must have the same dimension")
    better = False
    for a, b in zip(u, v):
        if a < b:
            return False
        if a > b:
            better = True
    return better


def pareto_front(points: Iterable[Sequence[float]]) -> list[tuple[float, ...]]:
    """Distinct non-dominated members of ``points``, in first-seen order."""
    uniq = list(dict.fromkeys(tuple(float(x) for x in p) for p in points))
    if not uniq:
        return []
    arr = np.asarray(uniq, dtype=float)
    keep = []
    for i, p in enumerate(arr):
        ge = np.all(arr >= p, axis=1)
        gt = np.any(arr > p, axis=1)
        if not np.any(ge & gt):
            keep.append(uniq[i])
    return keep


def crowding_distance(points: Sequence[Sequence[float]]) -> np.ndarray:
    """NSGA-II crowding distance; boundary points get ``inf``."""
    arr = np.asarray(points, dtype=float)
    n, m = arr.shape
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for j in range(m):
        order = np.argsort(arr[:, j], kind="stable")
        col = arr[order, j]
        span = col[-1] - col[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span == 0:
            continue
        dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def truncate(points: Sequence[tuple[float, ...]], cap: int) -> list[tuple[float, ...]]:
    """Drop the most crowded members until at most ``cap`` remain."""
    pts = list(points)
    while len(pts) > cap:
        d = crowding_distance(pts)
        # lowest distance goes first; ties resolve to the earliest index
        del pts[int(np.argmin(d))]
    return pts


class ParetoFront:
    """Mutable non-dominated set; every insert keeps the set mutually non-dominating.

    Members may carry a payload (e.g. the policy that produced them).
    """

    def __init__(self, points: Iterable[Sequence[float]] = ()):
        self._items: list[tuple[tuple[float, ...], object]] = []
        for p in points:
            self.insert(p)

    def insert(self, point: Sequence[float], payload=None) -> bool:
        """Add ``point`` unless it is dominated or already present; returns whether it was added."""
        p = tuple(float(x) for x in point)
        for q, _ in self._items:
            if q == p or dominates(q, p):
                return False
        self._items = [(q, pl) for q, pl in self._items if not dominates(p, q)]
        self._items.append((p, payload))
        return True

    @property
    def points(self) -> list[tuple[float, ...]]:
        return [q for q, _ in self._items]

    def items(self):
        return list(self._items)

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, point):
        return tuple(float(x) for x in point) in self.points
