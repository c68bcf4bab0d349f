"""Shared machinery for the heuristic minimizers: evaluation tracking,
top-k collection and penalty transforms."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..core import VolumeConstraint


class SearchError(RuntimeError):
    """Objective returned a non-finite value during a search."""


@dataclass
class SearchTrace:
    """Outcome bookkeeping of one minimizer run.

    history holds (evaluation_index, best_h) pairs recorded at every
    improvement plus the final state; best-so-far is nonincreasing.
    top_k holds up to k pairwise-distinct visited designs with their h.
    """

    n_evals: int = 0
    history: list = field(default_factory=list)
    top_k: list = field(default_factory=list)

    def best_series(self) -> np.ndarray:
        return np.array([h for _, h in self.history])

    def export_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["evaluation_index", "best_h"])
            for idx, h in self.history:
                writer.writerow([idx, repr(h)])


class _TopK:
    """Best k distinct designs seen so far (distinct by exact value equality)."""

    def __init__(self, k: int):
        self.k = k
        self._items: dict[bytes, tuple[float, np.ndarray]] = {}
        self._threshold = np.inf

    def offer(self, x: np.ndarray, h: float):
        if len(self._items) >= self.k and h >= self._threshold:
            return
        key = x.tobytes()
        prev = self._items.get(key)
        if prev is not None:
            if h < prev[0]:
                self._items[key] = (h, x.copy())
            return
        self._items[key] = (h, x.copy())
        if len(self._items) > self.k:
            worst = max(self._items, key=lambda k_: self._items[k_][0])
            del self._items[worst]
        if len(self._items) >= self.k:
            self._threshold = max(v[0] for v in self._items.values())

    def sorted_items(self):
        return sorted(self._items.values(), key=lambda t: t[0])


class Tracker:
    """Counts evaluations and maintains best-so-far and top-k designs."""

    def __init__(self, k: int = 10):
        self.trace = SearchTrace()
        self.best_h = np.inf
        self.best_x: np.ndarray | None = None
        self._topk = _TopK(k)

    def record(self, x: np.ndarray, h: float):
        if not np.isfinite(h):
            raise SearchError(f"objective returned {h} at design {x}")
        self.trace.n_evals += 1
        self._topk.offer(x, h)
        if h < self.best_h:
            self.best_h = h
            self.best_x = x.copy()
            self.trace.history.append((self.trace.n_evals, h))

    def record_batch(self, xs: np.ndarray, hs: np.ndarray):
        for x, h in zip(xs, hs):
            self.record(x, float(h))

    def finish(self) -> SearchTrace:
        if not self.trace.history or self.trace.history[-1][0] != self.trace.n_evals:
            self.trace.history.append((self.trace.n_evals, self.best_h))
        self.trace.top_k = [(h, x) for h, x in self._topk.sorted_items()]
        return self.trace


def make_batch(h, h_batch):
    """Normalize (h, h_batch) into a batched callable."""
    if h_batch is not None:
        return lambda xs: np.asarray(h_batch(xs), dtype=np.float64)
    return lambda xs: np.array([h(x) for x in xs], dtype=np.float64)


def penalize_volume(f, c: VolumeConstraint, penalty_c: float):
    """h(x) = f(x) + penalty_c * (w.x - limit)^2."""
    if penalty_c <= 0:
        raise ValueError("penalty constant must be positive")
    w, v0 = c.weights, c.limit

    def h(x):
        return f(x) + penalty_c * (float(w @ x) - v0) ** 2

    return h


def penalize_volume_batch(f_batch, c: VolumeConstraint, penalty_c: float):
    if penalty_c <= 0:
        raise ValueError("penalty constant must be positive")
    w, v0 = c.weights, c.limit

    def h_batch(xs):
        return np.asarray(f_batch(xs)) + penalty_c * (xs @ w - v0) ** 2

    return h_batch


def penalize_truss(weight: float, stresses: np.ndarray, displacements: np.ndarray,
                   sigma0: float, delta0: float) -> float:
    """Constraint-violation penalty for truss weight minimization.

    h = W * (1 + sum over overstressed bars of (|s| - s0)/s0
           + sum over over-displaced nodes of (|dx|_inf - d0)/d0)^2;
    feasible designs give h = W exactly.
    """
    if sigma0 <= 0 or delta0 <= 0:
        raise ValueError("stress and displacement limits must be positive")
    s = np.abs(np.asarray(stresses, dtype=np.float64))
    viol = float(np.sum((s[s > sigma0] - sigma0) / sigma0))
    d = np.max(np.abs(np.atleast_2d(displacements)), axis=1)
    viol += float(np.sum((d[d > delta0] - delta0) / delta0))
    return weight * (1.0 + viol) ** 2
