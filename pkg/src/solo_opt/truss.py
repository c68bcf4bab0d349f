"""3D linear-elastic truss analysis by the direct stiffness method, the
parametric square-tower generator, and the weight objective with stress
and displacement constraints."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .core import ContractViolation
from .optimizers.common import penalize_truss


class AnalysisError(RuntimeError):
    """Singular stiffness (mechanism) or other analysis failure."""


# catalog spanning one order of magnitude: a1 = a16 / 10
DEFAULT_CATALOG = tuple(np.linspace(0.3, 3.0, 16))


@dataclass(frozen=True)
class TrussModel:
    nodes: np.ndarray          # (n_nodes, 3) coordinates
    bars: np.ndarray           # (n_bars, 2) node indices
    fixed_dofs: np.ndarray     # flat DOF indices held at zero
    loads: np.ndarray          # (n_nodes, 3) nodal forces
    elastic_modulus: float
    unit_weight: np.ndarray    # per-bar weight density
    catalog: np.ndarray        # allowed cross-sectional areas, increasing
    stress_limit: float
    displacement_limit: float
    # geometry derived at construction
    lengths: np.ndarray = field(init=False)
    dircos: np.ndarray = field(init=False)
    free_dofs: np.ndarray = field(init=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        bars = np.asarray(self.bars, dtype=np.int64)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "bars", bars)
        object.__setattr__(self, "fixed_dofs", np.asarray(self.fixed_dofs, dtype=np.int64))
        object.__setattr__(self, "loads", np.asarray(self.loads, dtype=np.float64))
        object.__setattr__(self, "unit_weight", np.asarray(self.unit_weight, dtype=np.float64))
        object.__setattr__(self, "catalog", np.asarray(self.catalog, dtype=np.float64))
        vec = nodes[bars[:, 1]] - nodes[bars[:, 0]]
        lengths = np.linalg.norm(vec, axis=1)
        if np.any(lengths <= 0):
            raise ContractViolation("zero-length bar in model")
        if self.fixed_dofs.size < 3:
            raise ContractViolation("supports must remove at least 3 DOFs")
        if np.any(np.diff(self.catalog) <= 0) or self.catalog[0] <= 0:
            raise ContractViolation("catalog must be strictly increasing and positive")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "dircos", vec / lengths[:, None])
        all_dofs = np.arange(3 * nodes.shape[0])
        object.__setattr__(self, "free_dofs", np.setdiff1d(all_dofs, self.fixed_dofs))

    @property
    def n_bars(self) -> int:
        return self.bars.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def max_weight(self) -> float:
        return float(np.sum(self.catalog[-1] * self.lengths * self.unit_weight))


@dataclass(frozen=True)
class TowerParams:
    bay_width: float = 120.0
    story_height: float = 60.0
    elastic_modulus: float = 1e7
    unit_weight: float = 0.1
    catalog: tuple = DEFAULT_CATALOG
    stress_limit: float = 25000.0
    displacement_limit: float = 0.25
    # load applied at one top corner node, classic lateral + vertical case
    top_load: tuple = (5000.0, 5000.0, -5000.0)


def build_tower(n_blocks: int, params: TowerParams = TowerParams()) -> TrussModel:
    """Square 4-column tower of repeated 18-bar stories.

    Each story adds 4 nodes and 18 bars: 4 columns, 8 face diagonals,
    4 top-ring horizontals and 2 top-ring plan diagonals.  The 4 base
    nodes are fully fixed; loads act on the top ring.
    """
    if n_blocks < 1:
        raise ContractViolation("need at least one block")
    b = params.bay_width
    ring = np.array([[0.0, 0.0], [b, 0.0], [b, b], [0.0, b]])
    nodes = []
    for level in range(n_blocks + 1):
        z = level * params.story_height
        for x, y in ring:
            nodes.append([x, y, z])
    nodes = np.array(nodes)

    bars = []
    for level in range(n_blocks):
        lo = 4 * level
        hi = lo + 4
        for i in range(4):
            bars.append((lo + i, hi + i))  # columns
        for i in range(4):
            j = (i + 1) % 4
            bars.append((lo + i, hi + j))  # face diagonals (both senses)
            bars.append((lo + j, hi + i))
        for i in range(4):
            bars.append((hi + i, hi + (i + 1) % 4))  # top-ring horizontals
        bars.append((hi + 0, hi + 2))  # plan diagonals
        bars.append((hi + 1, hi + 3))
    bars = np.array(bars, dtype=np.int64)

    loads = np.zeros((nodes.shape[0], 3))
    loads[4 * n_blocks] = params.top_load

    fixed = np.arange(12)  # base ring fully fixed
    return TrussModel(
        nodes=nodes,
        bars=bars,
        fixed_dofs=fixed,
        loads=loads,
        elastic_modulus=params.elastic_modulus,
        unit_weight=np.full(bars.shape[0], params.unit_weight),
        catalog=np.array(params.catalog),
        stress_limit=params.stress_limit,
        displacement_limit=params.displacement_limit,
    )


@dataclass(frozen=True)
class TrussResult:
    displacements: np.ndarray  # (n_nodes, 3)
    stresses: np.ndarray       # per bar
    weight: float
    weight_ratio: float        # W / W(all areas = max)
    penalized: float
    feasible: bool


def solve_truss(model: TrussModel, areas: np.ndarray) -> TrussResult:
    """Direct stiffness solve for the given bar areas (catalog values)."""
    a = np.asarray(areas, dtype=np.float64)
    if a.shape != (model.n_bars,):
        raise ContractViolation(f"expected {model.n_bars} areas, got {a.shape}")
    if not np.all(np.isin(a, model.catalog)):
        raise ContractViolation("areas must be catalog members")

    stiff = model.elastic_modulus * a / model.lengths
    n_dof = 3 * model.n_nodes
    k = kernels.assemble_truss(model.bars, model.dircos, stiff, n_dof)
    free = model.free_dofs
    kff = k[np.ix_(free, free)]
    f = model.loads.ravel()[free]
    try:
        uf = scipy.linalg.solve(kff, f, assume_a="pos")
    except (scipy.linalg.LinAlgError, ValueError):
        diag = np.abs(np.diag(kff))
        worst = free[int(np.argmin(diag))]
        raise AnalysisError(
            f"singular stiffness: DOF {worst} (node {worst // 3}, axis {worst % 3}) "
            "appears unconstrained"
        )
    u = np.zeros(n_dof)
    u[free] = uf

    forces = kernels.axial_forces(model.bars, model.dircos, stiff, u)
    stresses = forces / a
    weight = float(np.sum(a * model.lengths * model.unit_weight))
    w_ratio = weight / model.max_weight()
    disp = u.reshape(-1, 3)
    penalized = penalize_truss(
        w_ratio, stresses, disp, model.stress_limit, model.displacement_limit
    )
    feasible = bool(
        np.all(np.abs(stresses) <= model.stress_limit)
        and np.all(np.abs(disp).max(axis=1) <= model.displacement_limit)
    )
    return TrussResult(
        displacements=disp,
        stresses=stresses,
        weight=weight,
        weight_ratio=w_ratio,
        penalized=penalized,
        feasible=feasible,
    )


def truss_objective(model: TrussModel, areas: np.ndarray):
    """(dimensionless weight, penalized objective) for a design."""
    res = solve_truss(model, areas)
    return res.weight_ratio, res.penalized


def save_model(model: TrussModel, path):
    data = {
        "nodes": model.nodes.tolist(),
        "bars": model.bars.tolist(),
        "fixed_dofs": model.fixed_dofs.tolist(),
        "loads": model.loads.tolist(),
        "elastic_modulus": model.elastic_modulus,
        "unit_weight": model.unit_weight.tolist(),
        "catalog": model.catalog.tolist(),
        "stress_limit": model.stress_limit,
        "displacement_limit": model.displacement_limit,
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)


def load_model(path) -> TrussModel:
    with open(path) as fh:
        data = json.load(fh)
    return TrussModel(
        nodes=np.array(data["nodes"]),
        bars=np.array(data["bars"], dtype=np.int64),
        fixed_dofs=np.array(data["fixed_dofs"], dtype=np.int64),
        loads=np.array(data["loads"]),
        elastic_modulus=data["elastic_modulus"],
        unit_weight=np.array(data["unit_weight"]),
        catalog=np.array(data["catalog"]),
        stress_limit=data["stress_limit"],
        displacement_limit=data["displacement_limit"],
    )
