"""Generalized simulated annealing on [0,1]^N with a heavy-tailed
(Tsallis) visiting distribution and generalized acceptance rule."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ..core import RngStream
from .common import SearchTrace, Tracker

# extreme visiting steps are clamped; they fold back into [0,1] anyway
TAIL_LIMIT = 1e8


@dataclass(frozen=True)
class GsaConfig:
    T0: float = 5230.0
    t_max: int = 1000
    qv: float = 2.62
    qa: float = -5.0
    local_search: bool = True

    def __post_init__(self):
        if self.T0 <= 0 or self.t_max < 1 or not 1.0 < self.qv < 3.0:
            raise ValueError("require T0 > 0, t_max >= 1 and 1 < qv < 3")


def gsa_temperature(t: int, cfg: GsaConfig) -> float:
    """Annealing schedule: T(1) = T0, decreasing for qv > 1."""
    qm1 = cfg.qv - 1.0
    return cfg.T0 * (2.0**qm1 - 1.0) / ((1.0 + t) ** qm1 - 1.0)


def tsallis_visit_sample(T: float, qv: float, N: int, rng: RngStream) -> np.ndarray:
    """Draw an N-vector from the generalized visiting distribution at
    temperature T (ratio-of-variates construction)."""
    if T <= 0 or not 1.0 < qv < 3.0:
        raise ValueError("require T > 0 and 1 < qv < 3")
    g = rng.generator
    x = g.standard_normal(N)
    y = g.standard_normal(N)
    factor1 = np.exp(np.log(T) / (qv - 1.0))
    factor2 = np.exp((4.0 - qv) * np.log(qv - 1.0))
    factor3 = np.exp((2.0 - qv) * np.log(2.0) / (qv - 1.0))
    factor4 = np.sqrt(np.pi) * factor1 * factor2 / (factor3 * (3.0 - qv))
    factor5 = 1.0 / (qv - 1.0) - 0.5
    d1 = 2.0 - factor5
    factor6 = np.pi * (1.0 - factor5) / np.sin(np.pi * (1.0 - factor5)) / np.exp(gammaln(d1))
    sigmax = np.exp(-(qv - 1.0) * np.log(factor6 / factor4) / (3.0 - qv))
    den = np.exp((qv - 1.0) * np.log(np.abs(y)) / (3.0 - qv))
    visit = sigmax * x / den
    return np.clip(visit, -TAIL_LIMIT, TAIL_LIMIT)


def gsa_acceptance_probability(delta_e: float, t: int, T: float, qa: float) -> float:
    """Analytic acceptance probability of the generalized Metropolis rule."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    if delta_e <= 0:
        return 1.0
    base = 1.0 - (1.0 - qa) * (t / T) * delta_e
    if base <= 0.0:
        return 0.0
    return min(1.0, base ** (1.0 / (1.0 - qa)))


def gsa_acceptance(delta_e: float, t: int, T: float, qa: float, rng: RngStream) -> bool:
    """Generalized Metropolis rule; improvements are always accepted."""
    p = gsa_acceptance_probability(delta_e, t, T, qa)
    if p >= 1.0:
        return True
    if p <= 0.0:
        return False
    return rng.generator.random() < p


def _reflect(x: np.ndarray) -> np.ndarray:
    """Fold arbitrary reals back into [0,1] by reflection at the bounds."""
    m = np.mod(x, 2.0)
    return np.where(m > 1.0, 2.0 - m, m)


def _coordinate_search(h, x: np.ndarray, tracker: Tracker,
                       step0: float = 0.1, step_min: float = 1e-4):
    """Deterministic pattern search with halving steps."""
    x = x.copy()
    hx = h(x)
    tracker.record(x, hx)
    step = step0
    while step >= step_min:
        improved = True
        while improved:
            improved = False
            for i in range(x.size):
                for delta in (step, -step):
                    cand = x.copy()
                    cand[i] = min(1.0, max(0.0, cand[i] + delta))
                    if cand[i] == x[i]:
                        continue
                    hc = h(cand)
                    tracker.record(cand, hc)
                    if hc < hx:
                        x, hx = cand, hc
                        improved = True
                        break
        step *= 0.5
    return x, hx


def gsa_minimize(h, n: int, cfg: GsaConfig, rng: RngStream,
                 tracker: Tracker | None = None):
    """Anneal for cfg.t_max steps, then refine the best state by a
    deterministic local search.  Returns (best design, SearchTrace)."""
    tracker = tracker or Tracker()
    g = rng.generator
    x = g.random(n)
    e = h(x)
    tracker.record(x, e)
    for t in range(1, cfg.t_max + 1):
        T = gsa_temperature(t, cfg)
        cand = _reflect(x + tsallis_visit_sample(T, cfg.qv, n, rng))
        ec = h(cand)
        tracker.record(cand, ec)
        if gsa_acceptance(ec - e, t, T, cfg.qa, rng):
            x, e = cand, ec
    if cfg.local_search:
        _coordinate_search(h, tracker.best_x, tracker)
    trace = tracker.finish()
    return tracker.best_x, trace
