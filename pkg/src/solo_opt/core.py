"""Problem-independent data model: design vectors, volume constraints,
evaluation records and seeded RNG streams."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

KINDS = ("continuous", "binary", "discrete")

#: named RNG sub-streams so each component draws from its own sequence
STREAM_IDS = {
    "sampler": 1,
    "gsa": 2,
    "ba": 3,
    "bba": 4,
    "net_init": 5,
    "train": 6,
    "driver": 7,
}


class ContractViolation(ValueError):
    """A documented precondition was violated by the caller."""


class InfeasibleConstraint(ValueError):
    """The volume target cannot be met inside [0, 1]^N."""


class RngStream:
    """Deterministic random stream identified by (seed, stream id).

    The same (seed, stream) pair always yields the same draw sequence, so
    components seeded from different streams can be tested in isolation.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.generator = np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        )

    @classmethod
    def named(cls, seed: int, name: str) -> "RngStream":
        return cls(seed, STREAM_IDS[name])

    def child(self, index: int) -> "RngStream":
        """Derived stream for per-sample parallel work."""
        return RngStream(self.seed, self.stream * 100_003 + 1 + index)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


@dataclass(frozen=True)
class DesignVector:
    """Candidate material distribution.

    values: length-N array; range depends on kind.
    kind: "continuous" ([0,1]), "binary" ({0,1}) or "discrete" (catalog values).
    catalog: strictly increasing allowed values, required for discrete kind.
    """

    values: np.ndarray
    kind: str = "continuous"
    catalog: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown kind {self.kind!r}")
        if v.ndim != 1 or v.size < 1:
            raise ContractViolation("values must be a 1D array with N >= 1")
        if not np.all(np.isfinite(v)):
            raise ContractViolation("design values must be finite")
        if self.kind == "continuous":
            if v.min() < 0.0 or v.max() > 1.0:
                raise ContractViolation("continuous values must lie in [0, 1]")
        elif self.kind == "binary":
            if not np.all((v == 0.0) | (v == 1.0)):
                raise ContractViolation("binary values must be 0 or 1")
        else:
            if self.catalog is None:
                raise ContractViolation("discrete kind requires a catalog")
            cat = np.ascontiguousarray(self.catalog, dtype=np.float64)
            cat.flags.writeable = False
            object.__setattr__(self, "catalog", cat)
            if not np.all(np.isin(v, cat)):
                raise ContractViolation("discrete values must be catalog members")

    @property
    def n(self) -> int:
        return self.values.size

    def same_space(self, other: "DesignVector") -> bool:
        if self.kind != other.kind or self.n != other.n:
            return False
        if self.kind == "discrete":
            return np.array_equal(self.catalog, other.catalog)
        return True

    def replace_values(self, values: np.ndarray) -> "DesignVector":
        return DesignVector(values, self.kind, self.catalog)


@dataclass(frozen=True)
class VolumeConstraint:
    """Weighted-volume bound sum(w_i * rho_i) <= limit (or == limit)."""

    weights: np.ndarray
    limit: float
    mode: str = "inequality"

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or np.any(w < 0) or w.sum() <= 0:
            raise ContractViolation("weights must be nonnegative with positive sum")
        if self.mode not in ("inequality", "equality"):
            raise ContractViolation(f"unknown mode {self.mode!r}")

    def satisfied(self, values: np.ndarray, tol: float = 1e-9) -> bool:
        vol = float(self.weights @ np.asarray(values, dtype=np.float64))
        if self.mode == "equality":
            return abs(vol - self.limit) <= tol
        return vol <= self.limit + tol


def weighted_volume(values, c: VolumeConstraint) -> float:
    """sum(w_i * v_i); lengths must match."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape != c.weights.shape:
        raise ContractViolation(
            f"length mismatch: design {v.shape} vs weights {c.weights.shape}"
        )
    return float(c.weights @ v)


def enforce_volume_constraint(values, c: VolumeConstraint) -> np.ndarray:
    """Project a continuous vector onto {v in [0,1]^N : w.v = limit}.

    Rescales to the target weighted average, clips overshoot at one, and
    redistributes the clipped surplus to the remaining elements in
    proportion to their headroom (1 - v_i), iterating until no element
    exceeds one.  Deterministic, order-independent and idempotent.
    """
    v = np.array(values, dtype=np.float64)
    if v.shape != c.weights.shape:
        raise ContractViolation("length mismatch between design and weights")
    w = c.weights
    v0 = float(c.limit)
    if v0 <= 0.0 or v0 > float(w.sum()) * (1.0 + 1e-12):
        raise InfeasibleConstraint(f"target volume {v0} outside (0, {w.sum()}]")
    v = np.clip(v, 0.0, None)
    cur = float(w @ v)
    if cur <= 0.0:
        # degenerate all-zero input: fall back to the uniform feasible point
        v = np.full_like(v, v0 / float(w.sum()))
    else:
        v *= v0 / cur
    for _ in range(v.size + 1):
        over = v > 1.0
        if not over.any():
            break
        v[over] = 1.0
        deficit = v0 - float(w @ v)
        if deficit <= 1e-15:
            break
        free = ~over
        headroom = 1.0 - v[free]
        denom = float(w[free] @ headroom)
        if denom <= 0.0:
            raise InfeasibleConstraint("no headroom left to absorb clipped surplus")
        v[free] += deficit * headroom / denom
    return np.clip(v, 0.0, 1.0)


@dataclass(frozen=True)
class EvaluationRecord:
    """One FEM-labelled sample: (design, objective) plus provenance."""

    design: DesignVector
    objective: float
    feasible: bool = True
    tag: str = "initial"

    def __post_init__(self):
        if not np.isfinite(self.objective) or self.objective <= 0.0:
            raise ContractViolation(
                f"objective must be finite and positive, got {self.objective}"
            )


class Dataset:
    """Append-only store of evaluation records sharing one design space."""

    def __init__(self):
        self.records: list[EvaluationRecord] = []

    def append(self, record: EvaluationRecord):
        if self.records and not self.records[0].design.same_space(record.design):
            raise ContractViolation("all records must share one design space")
        self.records.append(record)

    def extend(self, records):
        for r in records:
            self.append(r)

    @property
    def n_train(self) -> int:
        return len(self.records)

    def designs_matrix(self) -> np.ndarray:
        return np.array([r.design.values for r in self.records])

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    def best(self) -> EvaluationRecord:
        return min(self.records, key=lambda r: r.objective)

    def contains_design(self, values: np.ndarray) -> bool:
        return any(np.array_equal(r.design.values, values) for r in self.records)

    def save_jsonl(self, path):
        with open(path, "w") as fh:
            for r in self.records:
                row = {
                    "design": [float(x) for x in r.design.values],
                    "objective": float(r.objective),
                    "feasible": bool(r.feasible),
                    "tag": r.tag,
                }
                fh.write(json.dumps(row) + "\n")

    @classmethod
    def load_jsonl(cls, path, kind="continuous", catalog=None) -> "Dataset":
        ds = cls()
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                ds.append(
                    EvaluationRecord(
                        design=DesignVector(np.array(row["design"]), kind, catalog),
                        objective=row["objective"],
                        feasible=row["feasible"],
                        tag=row["tag"],
                    )
                )
        return ds
