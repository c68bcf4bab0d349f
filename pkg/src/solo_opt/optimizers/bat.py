"""Bat-algorithm family: continuous/discrete BA with inertia-weighted
velocities, and the binary variant with an arctan transfer function."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import RngStream
from .common import Tracker, make_batch


@dataclass(frozen=True)
class BaConfig:
    M: int = 40
    q_min: float = 0.0
    q_max: float = 2.0
    t_max: int = 1000
    alpha: float = 0.9
    gamma: float = 0.9
    r0: float = 0.5
    A0: float = 1.0
    w_init: float = 0.9
    w_final: float = 0.4

    def __post_init__(self):
        if self.M < 1 or self.q_min > self.q_max or not 0 < self.alpha < 1 or self.gamma <= 0:
            raise ValueError("invalid bat-algorithm configuration")


@dataclass(frozen=True)
class BbaConfig:
    M: int = 40
    q_min: float = 0.0
    q_max: float = 2.0
    t_max: int = 1000
    alpha: float = 0.9
    gamma: float = 0.9
    r0: float = 0.5
    A0: float = 1.0

    def __post_init__(self):
        if self.M < 1 or self.q_min > self.q_max or not 0 < self.alpha < 1 or self.gamma <= 0:
            raise ValueError("invalid binary-bat configuration")


def inertia_weight(t: int, cfg: BaConfig) -> float:
    """(1 - t/t_max)^2 (w_init - w_final) + w_final."""
    return (1.0 - t / cfg.t_max) ** 2 * (cfg.w_init - cfg.w_final) + cfg.w_final


def snap_to_catalog(x: np.ndarray, catalog: np.ndarray) -> np.ndarray:
    """Replace each entry by the nearest allowed value."""
    cat = np.asarray(catalog, dtype=np.float64)
    mid = (cat[1:] + cat[:-1]) / 2.0
    return cat[np.searchsorted(mid, x)]


def ba_minimize(h, n: int, cfg: BaConfig, rng: RngStream,
                catalog: np.ndarray | None = None, h_batch=None,
                tracker: Tracker | None = None):
    """Population search on [0,1]^n; with a catalog the objective is
    evaluated on nearest-catalog-snapped candidates.

    Returns (best evaluated design, SearchTrace).
    """
    tracker = tracker or Tracker()
    evaluate = make_batch(h, h_batch)
    g = rng.generator

    def as_eval(xs):
        return snap_to_catalog(xs, catalog) if catalog is not None else xs

    x = g.random((cfg.M, n))
    v = np.zeros((cfg.M, n))
    xe = as_eval(x)
    hx = evaluate(xe)
    tracker.record_batch(xe, hx)
    best_idx = int(np.argmin(hx))
    x_star = x[best_idx].copy()

    loud = cfg.A0
    for t in range(1, cfg.t_max + 1):
        loud *= cfg.alpha
        pulse = cfg.r0 * (1.0 - np.exp(-cfg.gamma * t))
        w = inertia_weight(t, cfg)

        q = cfg.q_min + (cfg.q_max - cfg.q_min) * g.random(cfg.M)
        v = w * v + (x - x_star) * q[:, None]
        cand = x + v
        # pulse-rate-gated local search around the incumbent best
        mask = g.random((cfg.M, n)) > pulse
        noise = x_star[None, :] + g.standard_normal((cfg.M, n)) * loud
        cand = np.where(mask, noise, cand)
        cand = np.clip(cand, 0.0, 1.0)

        ce = as_eval(cand)
        hc = evaluate(ce)
        tracker.record_batch(ce, hc)
        accept = (hc <= hx) & (g.random(cfg.M) <= loud)
        x = np.where(accept[:, None], cand, x)
        hx = np.where(accept, hc, hx)
        best_idx = int(np.argmin(hx))
        x_star = x[best_idx].copy()

    trace = tracker.finish()
    return tracker.best_x, trace


def bba_transfer(v, n: int):
    """Flip probability |2/pi * arctan(pi/2 * v)| + 1/n, in [1/n, 1 + 1/n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.abs((2.0 / np.pi) * np.arctan((np.pi / 2.0) * np.asarray(v, dtype=np.float64))) + 1.0 / n


def bba_minimize(h, n: int, cfg: BbaConfig, rng: RngStream,
                 h_batch=None, tracker: Tracker | None = None):
    """Binary variant: velocity-driven random flips plus pulse-rate-gated
    copying of the incumbent best.  Returns (best design, SearchTrace)."""
    tracker = tracker or Tracker()
    evaluate = make_batch(h, h_batch)
    g = rng.generator

    x = (g.random((cfg.M, n)) < 0.5).astype(np.float64)
    v = np.zeros((cfg.M, n))
    hx = evaluate(x)
    tracker.record_batch(x, hx)
    x_star = x[int(np.argmin(hx))].copy()

    loud = cfg.A0
    for t in range(1, cfg.t_max + 1):
        loud *= cfg.alpha
        pulse = cfg.r0 * (1.0 - np.exp(-cfg.gamma * t))

        q = cfg.q_min + (cfg.q_max - cfg.q_min) * g.random(cfg.M)
        v = v + (x - x_star) * q[:, None]
        flip_p = bba_transfer(v, n)
        flip = g.random((cfg.M, n)) < flip_p
        cand = np.where(flip, 1.0 - x, x)
        copy_best = g.random((cfg.M, n)) > pulse
        cand = np.where(copy_best, x_star[None, :], cand)

        hc = evaluate(cand)
        tracker.record_batch(cand, hc)
        accept = (hc <= hx) & (g.random(cfg.M) <= loud)
        x = np.where(accept[:, None], cand, x)
        hx = np.where(accept, hc, hx)
        x_star = x[int(np.argmin(hx))].copy()

    trace = tracker.finish()
    return tracker.best_x, trace
