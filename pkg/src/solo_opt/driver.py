"""Orchestration of the self-directed online learning loop and the
baseline runners (offline surrogate, stochastic search, direct heuristics)."""
from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import surrogate as sg
from .compliance import ComplianceProblem
from .core import Dataset, DesignVector, EvaluationRecord, RngStream
from .optimizers import (
    BaConfig,
    BbaConfig,
    GsaConfig,
    Tracker,
    ba_minimize,
    bba_minimize,
    gsa_minimize,
    penalize_volume,
    penalize_volume_batch,
    snap_to_catalog,
)
from .sampling import (
    DisturbanceTable,
    GridShape,
    compliance_table,
    generate_batch,
    initial_batch,
    truss_table,
)
from .truss import TowerParams, build_tower, solve_truss

REPORT_HEADER = [
    "loop", "n_train", "best_F", "F_rho_hat", "e_rho_hat", "rel_err",
    "eps_mse", "t_fem", "t_train", "t_search",
]


class BudgetExhausted(RuntimeError):
    pass


@dataclass
class Problem:
    """Everything the driver needs: a design space and an evaluator.

    Design values live in the optimizer/sampler coordinates: [0,1] for
    continuous and binary spaces, normalized catalog values for discrete.
    evaluate() returns (positive objective, feasible flag).
    """

    name: str
    n: int
    kind: str
    evaluate: callable
    shape: GridShape | None = None
    constraint: object = None
    table: DisturbanceTable | None = None
    catalog_norm: np.ndarray | None = None
    binary_threshold: bool = False

    def design(self, values: np.ndarray) -> DesignVector:
        if self.kind == "discrete":
            # disturbances produce continuous coordinates; store the same
            # snapped design the evaluator sees
            snapped = snap_to_catalog(np.asarray(values), self.catalog_norm)
            return DesignVector(snapped, "discrete", self.catalog_norm)
        return DesignVector(values, self.kind)


def make_compliance_problem(n: int) -> Problem:
    fem = ComplianceProblem(n=n)
    constraint = fem.volume_weights()

    def evaluate(values):
        res = fem.solve(np.asarray(values))
        return res.energy_ratio, constraint.satisfied(values)

    return Problem(
        name=f"compliance-{n}",
        n=n * n,
        kind="continuous",
        evaluate=evaluate,
        shape=GridShape(n, n),
        constraint=constraint,
        table=compliance_table(),
    )


def make_truss_problem(n_blocks: int, params: TowerParams = TowerParams()) -> Problem:
    model = build_tower(n_blocks, params)
    cat = model.catalog
    cat_norm = (cat - cat[0]) / (cat[-1] - cat[0])

    def to_areas(values):
        norm = snap_to_catalog(np.asarray(values), cat_norm)
        return cat[0] + norm * (cat[-1] - cat[0])

    def evaluate(values):
        res = solve_truss(model, to_areas(values))
        return res.penalized, res.feasible

    problem = Problem(
        name=f"truss-{model.n_bars}",
        n=model.n_bars,
        kind="discrete",
        evaluate=evaluate,
        table=truss_table(),
        catalog_norm=cat_norm,
    )
    problem.model = model
    problem.to_areas = to_areas
    return problem


def make_analytic_problem(n: int = 5, kind: str = "continuous") -> Problem:
    center = 0.3

    def evaluate(values):
        return 1.0 + float(np.sum((np.asarray(values) - center) ** 2)), True

    return Problem(
        name="analytic-smoke",
        n=n,
        kind=kind,
        evaluate=evaluate,
        shape=GridShape(1, n),
        table=DisturbanceTable((
            ("mutate", 1, 0.4),
            ("crossover", 0, 0.3),
            ("random", 0, 0.3),
        )),
        binary_threshold=(kind == "binary"),
    )


@dataclass(frozen=True)
class SoloConfig:
    variant: str = "regular"           # regular | greedy | mixed-truss
    initial_batch: int = 100
    samples_per_loop: int = 100        # total additions per loop, incl. rho_hat
    max_train: int = 1000              # FEM budget (n_train ceiling)
    max_loops: int = 10_000
    tol: float = 1e-3
    patience: int = 3
    retrain: str = "cold"              # cold | warm
    seed: int = 0
    optimizer: str = "gsa"             # gsa | ba | bba
    gsa: GsaConfig = GsaConfig()
    ba: BaConfig = BaConfig()
    bba: BbaConfig = BbaConfig()
    hidden: tuple = (64, 128, 64)
    dropout: float = 0.1
    batchnorm: bool = True
    epochs: int = 300
    batch_size: int = 1024
    learning_rate: float = 0.01
    penalty_scale: float = 100.0       # penalty constant = scale * best F
    threads: int = 1

    def __post_init__(self):
        if self.samples_per_loop < 1 or self.max_train < self.initial_batch:
            raise ValueError("budget must cover the initial batch")
        if self.variant not in ("regular", "greedy", "mixed-truss"):
            raise ValueError(f"unknown variant {self.variant!r}")


def default_solo_config(problem_name: str, seed: int = 0, budget: int | None = None,
                        **overrides) -> SoloConfig:
    presets = {
        "compliance-5": dict(initial_batch=100, samples_per_loop=100, max_train=1000,
                             hidden=(64, 128, 64), epochs=300,
                             gsa=GsaConfig(t_max=20000)),
        "compliance-11": dict(initial_batch=500, samples_per_loop=250, max_train=4000,
                              hidden=(128, 256, 128), epochs=300,
                              gsa=GsaConfig(t_max=40000)),
        "truss-72": dict(variant="mixed-truss", optimizer="ba",
                         initial_batch=100, samples_per_loop=100, max_train=2000,
                         hidden=(128, 128), epochs=300, patience=10,
                         ba=BaConfig(M=40, t_max=1000)),
        "truss-432": dict(variant="mixed-truss", optimizer="ba",
                          initial_batch=500, samples_per_loop=100, max_train=4000,
                          hidden=(256, 256), epochs=300, patience=10,
                          ba=BaConfig(M=40, t_max=1000)),
        "truss-1008": dict(variant="mixed-truss", optimizer="ba",
                           initial_batch=1000, samples_per_loop=200, max_train=6000,
                           hidden=(256, 256), epochs=300, patience=10,
                           ba=BaConfig(M=40, t_max=1000)),
        "analytic-smoke": dict(initial_batch=100, samples_per_loop=50, max_train=600,
                               hidden=(64, 64), epochs=500, tol=1e-5,
                               gsa=GsaConfig(t_max=3000),
                               bba=BbaConfig(M=20, t_max=200)),
    }
    kwargs = presets.get(problem_name, {})
    kwargs.update(overrides)
    cfg = SoloConfig(seed=seed, **kwargs)
    if budget is not None:
        cfg = replace(cfg, max_train=budget)
    return cfg


@dataclass
class RunReport:
    method: str
    problem: str
    rows: list = field(default_factory=list)
    best_design: np.ndarray | None = None
    best_objective: float = np.inf
    dataset: Dataset | None = None

    def add_row(self, **kwargs):
        self.rows.append({k: kwargs.get(k, 0.0) for k in REPORT_HEADER})

    def best_series(self):
        return [(r["n_train"], r["best_F"]) for r in self.rows]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=REPORT_HEADER)
            writer.writeheader()
            for row in self.rows:
                out = {}
                for k, v in row.items():
                    if isinstance(v, float):
                        out[k] = repr(v)
                    else:
                        out[k] = v
                writer.writerow(out)


def check_convergence(best_values, tol: float, patience: int) -> bool:
    """True iff the relative change of best-F over the last `patience`
    loop records is below tol."""
    if len(best_values) < patience:
        return False
    tail = best_values[-patience:]
    lo, hi = min(tail), max(tail)
    return (hi - lo) <= tol * max(abs(hi), 1e-300)


def _parallel_eval(problem: Problem, designs, threads: int):
    if threads > 1 and len(designs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(problem.evaluate, designs))
    return [problem.evaluate(d) for d in designs]


def _append_evals(problem: Problem, dataset: Dataset, designs, tags, threads):
    results = _parallel_eval(problem, designs, threads)
    for values, tag, (obj, feas) in zip(designs, tags, results):
        dataset.append(EvaluationRecord(problem.design(values), obj, feas, tag))
    return results


def _train_surrogate(problem: Problem, dataset: Dataset, cfg: SoloConfig,
                     loop_index: int, warm_params=None):
    spec = sg.MlpSpec(problem.n, hidden=cfg.hidden, dropout=cfg.dropout,
                      batchnorm=cfg.batchnorm)
    if cfg.retrain == "warm" and warm_params is not None:
        params = warm_params
    else:
        params = sg.init_network(spec, RngStream(cfg.seed + loop_index, 5))
    hyper = sg.TrainHyper(learning_rate=cfg.learning_rate, epochs=cfg.epochs,
                          batch_size=cfg.batch_size, seed=cfg.seed + loop_index)
    params, trace = sg.train(params, dataset, hyper)
    return params, trace


def _search_surrogate(problem: Problem, params, cfg: SoloConfig, loop_index: int,
                      best_f: float):
    """Minimize the surrogate objective; returns (rho_hat, trace)."""
    h, h_batch = sg.folded_objective(params)
    if problem.constraint is not None:
        penalty_c = cfg.penalty_scale * max(best_f, 1e-12)
        h = penalize_volume(h, problem.constraint, penalty_c)
        h_batch = penalize_volume_batch(h_batch, problem.constraint, penalty_c)
    rng = RngStream(cfg.seed + loop_index, {"gsa": 2, "ba": 3, "bba": 4}[cfg.optimizer])
    if cfg.optimizer == "gsa":
        return gsa_minimize(h, problem.n, cfg.gsa, rng)
    if cfg.optimizer == "ba":
        return ba_minimize(h, problem.n, cfg.ba, rng,
                           catalog=problem.catalog_norm, h_batch=h_batch)
    return bba_minimize(h, problem.n, cfg.bba, rng, h_batch=h_batch)


def _next_batch(problem: Problem, cfg: SoloConfig, rho_hat: np.ndarray,
                trace, dataset: Dataset, loop_index: int):
    """Designs (beyond rho_hat itself) to evaluate next, with tags."""
    rng = RngStream(cfg.seed + loop_index, 1)
    count = cfg.samples_per_loop - 1  # rho_hat takes one slot
    existing = [r.design.values for r in dataset.records]
    if cfg.variant == "greedy":
        picks = [x for _, x in trace.top_k[1:cfg.samples_per_loop]]
        return picks, ["search-optimum"] * len(picks)
    designs, tags = [], []
    if cfg.variant == "mixed-truss":
        n_opt = max(1, int(round(0.1 * cfg.samples_per_loop))) - 1
        picks = [x for _, x in trace.top_k[1:1 + n_opt]]
        designs.extend(picks)
        tags.extend(["search-optimum"] * len(picks))
        count -= len(picks)
    for values, tag in generate_batch(
        rho_hat, problem.table, count, problem.constraint, rng,
        shape=problem.shape, binary_threshold=problem.binary_threshold,
        existing=existing,
    ):
        designs.append(values)
        tags.append(tag)
    return designs, tags


def run_solo(problem: Problem, cfg: SoloConfig) -> RunReport:
    report = RunReport(method=f"solo-{cfg.variant}", problem=problem.name)
    dataset = Dataset()
    rng0 = RngStream(cfg.seed, 1)
    init = initial_batch(
        cfg.initial_batch, problem.shape or problem.n, problem.kind,
        problem.constraint, rng0,
        one_hot=(cfg.variant == "greedy" and problem.kind == "binary"),
        n_levels=len(problem.catalog_norm) if problem.catalog_norm is not None else None,
    )
    t0 = time.perf_counter()
    _append_evals(problem, dataset, init, ["initial"] * len(init), cfg.threads)
    t_fem = time.perf_counter() - t0

    best_f = float(np.min(dataset.objectives()))
    params = None
    loop = 0
    best_track = []
    while dataset.n_train < cfg.max_train and loop < cfg.max_loops:
        loop += 1
        t0 = time.perf_counter()
        params, _ = _train_surrogate(problem, dataset, cfg, loop, warm_params=params)
        t_train = time.perf_counter() - t0

        t0 = time.perf_counter()
        rho_hat, trace = _search_surrogate(problem, params, cfg, loop, best_f)
        if problem.kind == "discrete":
            rho_hat = snap_to_catalog(rho_hat, problem.catalog_norm)
        t_search = time.perf_counter() - t0

        e_pred = sg.predict_objective(params, rho_hat)

        t0 = time.perf_counter()
        (f_hat, _feas) = _append_evals(
            problem, dataset, [rho_hat], ["search-optimum"], cfg.threads
        )[0]
        remaining = cfg.max_train - dataset.n_train
        designs, tags = _next_batch(problem, cfg, rho_hat, trace, dataset, loop)
        designs, tags = designs[:remaining], tags[:remaining]
        _append_evals(problem, dataset, designs, tags, cfg.threads)
        t_fem = time.perf_counter() - t0

        best_f = float(np.min(dataset.objectives()))
        best_track.append(best_f)
        report.add_row(
            loop=loop, n_train=dataset.n_train, best_F=best_f, F_rho_hat=f_hat,
            e_rho_hat=e_pred, rel_err=(e_pred - f_hat) / f_hat,
            eps_mse=sg.empirical_mse(params, dataset),
            t_fem=t_fem, t_train=t_train, t_search=t_search,
        )
        if check_convergence(best_track, cfg.tol, cfg.patience):
            break

    best = dataset.best()
    report.best_design = best.design.values
    report.best_objective = best.objective
    report.dataset = dataset
    report.surrogate = params
    return report


def run_offline_baseline(problem: Problem, n_train: int, cfg: SoloConfig) -> RunReport:
    """One-shot: random samples, one training, one search, one FEM check."""
    report = RunReport(method="offline", problem=problem.name)
    dataset = Dataset()
    rng0 = RngStream(cfg.seed, 1)
    init = initial_batch(
        max(1, n_train), problem.shape or problem.n, problem.kind,
        problem.constraint, rng0,
        n_levels=len(problem.catalog_norm) if problem.catalog_norm is not None else None,
    )
    t0 = time.perf_counter()
    _append_evals(problem, dataset, init, ["initial"] * len(init), cfg.threads)
    t_fem = time.perf_counter() - t0

    best_f = float(np.min(dataset.objectives()))
    t0 = time.perf_counter()
    params, _ = _train_surrogate(problem, dataset, cfg, 1)
    t_train = time.perf_counter() - t0
    t0 = time.perf_counter()
    rho_hat, _trace = _search_surrogate(problem, params, cfg, 1, best_f)
    if problem.kind == "discrete":
        rho_hat = snap_to_catalog(rho_hat, problem.catalog_norm)
    t_search = time.perf_counter() - t0
    e_pred = sg.predict_objective(params, rho_hat)
    (f_hat, _) = _append_evals(problem, dataset, [rho_hat], ["search-optimum"], cfg.threads)[0]

    best_f = float(np.min(dataset.objectives()))
    report.add_row(
        loop=1, n_train=dataset.n_train, best_F=best_f, F_rho_hat=f_hat,
        e_rho_hat=e_pred, rel_err=(e_pred - f_hat) / f_hat,
        eps_mse=sg.empirical_mse(params, dataset),
        t_fem=t_fem, t_train=t_train, t_search=t_search,
    )
    best = dataset.best()
    report.best_design = best.design.values
    report.best_objective = best.objective
    report.dataset = dataset
    report.surrogate = params
    return report


def run_stochastic_search(problem: Problem, cfg: SoloConfig) -> RunReport:
    """SOLO loop without a surrogate: the base design is the current
    dataset minimum."""
    report = RunReport(method="ss", problem=problem.name)
    dataset = Dataset()
    rng0 = RngStream(cfg.seed, 1)
    init = initial_batch(
        cfg.initial_batch, problem.shape or problem.n, problem.kind,
        problem.constraint, rng0,
        n_levels=len(problem.catalog_norm) if problem.catalog_norm is not None else None,
    )
    t0 = time.perf_counter()
    _append_evals(problem, dataset, init, ["initial"] * len(init), cfg.threads)
    t_fem = time.perf_counter() - t0

    loop = 0
    best_track = []
    while dataset.n_train < cfg.max_train and loop < cfg.max_loops:
        loop += 1
        incumbent = dataset.best()
        rho_hat = incumbent.design.values
        remaining = cfg.max_train - dataset.n_train
        rng = RngStream(cfg.seed + loop, 1)
        t0 = time.perf_counter()
        batch = generate_batch(
            rho_hat, problem.table, min(cfg.samples_per_loop, remaining),
            problem.constraint, rng, shape=problem.shape,
            binary_threshold=problem.binary_threshold,
            existing=[r.design.values for r in dataset.records],
        )
        _append_evals(problem, dataset, [v for v, _ in batch], [t for _, t in batch],
                      cfg.threads)
        t_fem = time.perf_counter() - t0
        best_f = float(np.min(dataset.objectives()))
        best_track.append(best_f)
        report.add_row(
            loop=loop, n_train=dataset.n_train, best_F=best_f,
            F_rho_hat=incumbent.objective, e_rho_hat=incumbent.objective,
            rel_err=0.0, eps_mse=0.0, t_fem=t_fem, t_train=0.0, t_search=0.0,
        )
        if check_convergence(best_track, cfg.tol, cfg.patience):
            break

    best = dataset.best()
    report.best_design = best.design.values
    report.best_objective = best.objective
    report.dataset = dataset
    return report


class BudgetedObjective:
    """Counts true-objective calls, tracks bests, stops at the budget."""

    def __init__(self, problem: Problem, budget: int):
        self.problem = problem
        self.budget = budget
        self.n = 0
        self.best = np.inf
        self.best_x = None
        self.best_feasible = np.inf
        self.best_feasible_x = None
        self.history = []

    def __call__(self, values):
        if self.n >= self.budget:
            raise BudgetExhausted()
        self.n += 1
        obj, feas = self.problem.evaluate(values)
        if obj < self.best:
            self.best = obj
            self.best_x = np.array(values)
            self.history.append((self.n, obj))
        if feas and obj < self.best_feasible:
            self.best_feasible = obj
            self.best_feasible_x = np.array(values)
        return obj


def run_direct_heuristic(problem: Problem, optimizer: str, budget: int,
                         cfg: SoloConfig) -> RunReport:
    """Run GSA/BA/BBA straight against the expensive objective."""
    if optimizer not in ("gsa", "ba", "bba"):
        raise ValueError(f"unknown optimizer {optimizer!r}")
    report = RunReport(method=f"direct-{optimizer}", problem=problem.name)
    wrapped = BudgetedObjective(problem, budget)
    h = wrapped
    if problem.constraint is not None:
        # keep the counter outside the penalty: penalty reuses the same call
        base = wrapped

        def h(x):
            f = base(x)
            w, v0 = problem.constraint.weights, problem.constraint.limit
            c = cfg.penalty_scale * max(base.best, 1e-12)
            return f + c * (float(w @ x) - v0) ** 2

    rng = RngStream(cfg.seed, {"gsa": 2, "ba": 3, "bba": 4}[optimizer])
    try:
        if optimizer == "gsa":
            gsa_cfg = replace(cfg.gsa, t_max=max(1, budget - 1))
            gsa_minimize(h, problem.n, gsa_cfg, rng)
        elif optimizer == "ba":
            ba_cfg = replace(cfg.ba, t_max=max(1, (budget - cfg.ba.M) // cfg.ba.M))
            ba_minimize(h, problem.n, ba_cfg, rng, catalog=problem.catalog_norm)
        elif optimizer == "bba":
            bba_cfg = replace(cfg.bba, t_max=max(1, (budget - cfg.bba.M) // cfg.bba.M))
            bba_minimize(h, problem.n, bba_cfg, rng)
        else:
            raise ValueError(f"unknown optimizer {optimizer!r}")
    except BudgetExhausted:
        pass

    for idx, val in wrapped.history:
        report.add_row(loop=idx, n_train=idx, best_F=val, F_rho_hat=val,
                       e_rho_hat=val, rel_err=0.0, eps_mse=0.0,
                       t_fem=0.0, t_train=0.0, t_search=0.0)
    if wrapped.history and wrapped.history[-1][0] != wrapped.n:
        report.add_row(loop=wrapped.n, n_train=wrapped.n, best_F=wrapped.best,
                       F_rho_hat=wrapped.best, e_rho_hat=wrapped.best,
                       rel_err=0.0, eps_mse=0.0, t_fem=0.0, t_train=0.0, t_search=0.0)
    report.best_design = wrapped.best_x
    report.best_objective = wrapped.best
    report.n_evals = wrapped.n
    report.best_feasible = wrapped.best_feasible
    report.best_feasible_design = wrapped.best_feasible_x
    return report


def best_feasible_objective(dataset: Dataset) -> float:
    vals = [r.objective for r in dataset.records if r.feasible]
    return float(min(vals)) if vals else np.inf
