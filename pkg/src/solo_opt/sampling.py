"""Self-directed training-data generation: initial random batches and
disturbance of the incumbent optimum (mutation, crossover, convolution,
thresholding, truss mutation)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ContractViolation,
    DesignVector,
    RngStream,
    VolumeConstraint,
    enforce_volume_constraint,
)


@dataclass(frozen=True)
class GridShape:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ContractViolation("grid dims must be positive")

    @property
    def n(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class DisturbanceTable:
    """Operator mix: entries are (kind, submatrix size, probability)."""

    entries: tuple

    def __post_init__(self):
        total = sum(p for _, _, p in self.entries)
        if abs(total - 1.0) > 1e-12:
            raise ContractViolation(f"probabilities sum to {total}, not 1")

    def draw(self, rng: RngStream):
        probs = [p for _, _, p in self.entries]
        idx = rng.generator.choice(len(self.entries), p=probs)
        kind, size, _ = self.entries[idx]
        return kind, size


def compliance_table() -> DisturbanceTable:
    """Mutation of 1x1/2x2 (10% each) and 3x3/4x4 (20% each) blocks,
    crossover (20%) and a fully random matrix (20%)."""
    return DisturbanceTable((
        ("mutate", 1, 0.10),
        ("mutate", 2, 0.10),
        ("mutate", 3, 0.20),
        ("mutate", 4, 0.20),
        ("crossover", 0, 0.20),
        ("random", 0, 0.20),
    ))


def convolution_table() -> DisturbanceTable:
    """Variant with crossover swapped for same-convolution perturbations;
    the convolution block sizes reuse the mutation size mix (>= 2)."""
    return DisturbanceTable((
        ("mutate", 1, 0.10),
        ("mutate", 2, 0.10),
        ("mutate", 3, 0.20),
        ("mutate", 4, 0.20),
        ("convolve", 2, 0.04),
        ("convolve", 3, 0.08),
        ("convolve", 4, 0.08),
        ("random", 0, 0.20),
    ))


def truss_table() -> DisturbanceTable:
    return DisturbanceTable((("truss_mutate", 0, 1.0),))


def mutate(base: np.ndarray, shape: GridShape, size: int, rng: RngStream) -> np.ndarray:
    """Replace a uniformly placed size x size block with uniform[0,1] draws."""
    if size > min(shape.rows, shape.cols):
        raise ContractViolation(f"block size {size} exceeds grid {shape}")
    g = rng.generator
    grid = np.array(base, dtype=np.float64).reshape(shape.rows, shape.cols)
    r0 = g.integers(0, shape.rows - size + 1)
    c0 = g.integers(0, shape.cols - size + 1)
    grid[r0:r0 + size, c0:c0 + size] = g.random((size, size))
    return grid.ravel()


def crossover(base: np.ndarray, k: int, rng: RngStream) -> np.ndarray:
    """Permute k uniformly chosen positions; value multiset is preserved."""
    n = len(base)
    if not 1 <= k <= n:
        raise ContractViolation(f"k must be in [1, {n}]")
    g = rng.generator
    out = np.array(base, dtype=np.float64)
    idx = g.choice(n, size=k, replace=False)
    out[idx] = out[idx][g.permutation(k)]
    return out


def convolve_perturb(base: np.ndarray, shape: GridShape, size: int,
                     rng: RngStream, kernel: np.ndarray | None = None) -> np.ndarray:
    """Replace a block by its same-size convolution with a random 2x2 kernel
    (zero padding at the block edge)."""
    if size < 2:
        raise ContractViolation("convolution block size must be >= 2")
    if size > min(shape.rows, shape.cols):
        raise ContractViolation(f"block size {size} exceeds grid {shape}")
    g = rng.generator
    grid = np.array(base, dtype=np.float64).reshape(shape.rows, shape.cols)
    r0 = g.integers(0, shape.rows - size + 1)
    c0 = g.integers(0, shape.cols - size + 1)
    if kernel is None:
        kernel = g.random((2, 2))
    sub = grid[r0:r0 + size, c0:c0 + size]
    padded = np.zeros((size + 1, size + 1))
    padded[:size, :size] = sub
    out = (kernel[0, 0] * padded[:size, :size]
           + kernel[0, 1] * padded[:size, 1:size + 1]
           + kernel[1, 0] * padded[1:size + 1, :size]
           + kernel[1, 1] * padded[1:size + 1, 1:size + 1])
    grid[r0:r0 + size, c0:c0 + size] = out
    return grid.ravel()


def draw_threshold(base: np.ndarray, rng: RngStream) -> float:
    """50%: beta1^4 with beta1 ~ U[0,1]; 50%: element-wise mean of base."""
    g = rng.generator
    if g.random() < 0.5:
        return float(g.random() ** 4)
    return float(np.mean(base))


def threshold_binary(base: np.ndarray, rng: RngStream,
                     threshold: float | None = None) -> np.ndarray:
    """Convert a continuous array to binary: entries >= threshold become 1."""
    if threshold is None:
        threshold = draw_threshold(base, rng)
    return (np.asarray(base, dtype=np.float64) >= threshold).astype(np.float64)


def truss_mutate(base: np.ndarray, rng: RngStream) -> np.ndarray:
    """Shift a random fraction of entries by one shared offset in [-1, 1].

    The mutated count is ceil(beta2 * N) with beta2 ~ U[0,1], so at least
    one element always moves; results are clamped to [0, 1].
    """
    g = rng.generator
    n = len(base)
    count = int(np.ceil(g.random() * n))
    count = max(count, 1)
    idx = g.choice(n, size=count, replace=False)
    gamma = g.uniform(-1.0, 1.0)
    out = np.array(base, dtype=np.float64)
    out[idx] = np.clip(out[idx] + gamma, 0.0, 1.0)
    return out


def initial_batch(n: int, shape: GridShape | int, kind: str,
                  c: VolumeConstraint | None, rng: RngStream,
                  one_hot: bool = False, n_levels: int | None = None) -> list[np.ndarray]:
    """Random starting designs.

    continuous: uniform draws projected onto the volume constraint.
    binary + one_hot: the zero vector plus all N unit vectors (n ignored).
    binary: uniform arrays thresholded at beta1^4.
    discrete (normalized catalog coordinates): uniform level draws.
    """
    if n < 1:
        raise ContractViolation("n must be >= 1")
    size = shape.n if isinstance(shape, GridShape) else int(shape)
    g = rng.generator
    out = []
    if kind == "continuous":
        for _ in range(n):
            v = g.random(size)
            if c is not None:
                v = enforce_volume_constraint(v, c)
            out.append(v)
    elif kind == "binary":
        if one_hot:
            out.append(np.zeros(size))
            for i in range(size):
                v = np.zeros(size)
                v[i] = 1.0
                out.append(v)
        else:
            for _ in range(n):
                out.append(threshold_binary(g.random(size), rng))
    elif kind == "discrete":
        if not n_levels or n_levels < 2:
            raise ContractViolation("discrete initial batch needs n_levels >= 2")
        levels = np.linspace(0.0, 1.0, n_levels)
        for _ in range(n):
            out.append(levels[g.integers(0, n_levels, size=size)])
    else:
        raise ContractViolation(f"unknown kind {kind!r}")
    return out


def generate_batch(base: np.ndarray, table: DisturbanceTable, n: int,
                   c: VolumeConstraint | None, rng: RngStream,
                   shape: GridShape | None = None,
                   binary_threshold: bool = False,
                   existing=None) -> list[tuple[np.ndarray, str]]:
    """n disturbed samples of `base`, each tagged with its operator.

    Samples are re-projected onto the volume constraint when one is given;
    for binary problems the continuous disturbance is thresholded first.
    Exact duplicates of `existing` designs are redrawn up to 10 times.
    """
    g = rng.generator
    seen = {x.tobytes() for x in existing} if existing is not None else set()
    out = []
    for _ in range(n):
        for _attempt in range(10):
            kind, size = table.draw(rng)
            tag = kind if size == 0 else f"{kind}:{size}"
            if kind == "mutate":
                v = mutate(base, shape, size, rng)
            elif kind == "crossover":
                k = int(g.integers(1, len(base) + 1))
                v = crossover(base, k, rng)
            elif kind == "convolve":
                v = convolve_perturb(base, shape, size, rng)
            elif kind == "truss_mutate":
                v = truss_mutate(base, rng)
            elif kind == "random":
                v = g.random(len(base))
            else:
                raise ContractViolation(f"unknown operator {kind!r}")
            if binary_threshold:
                v = threshold_binary(v, rng)
            if c is not None:
                v = enforce_volume_constraint(v, c)
            if v.tobytes() not in seen:
                break
        seen.add(v.tobytes())
        out.append((v, tag))
    return out
