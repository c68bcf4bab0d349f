"""Command-line entry point: run optimizations, self-test the numerics,
and export plot-ready series from run reports."""
from __future__ import annotations

import argparse
import csv
import os
import sys
import traceback

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import driver, surrogate as sg
from .compliance import export_density_field
from .core import RngStream
from .interpolation import rbf_eval, rbf_fit
from .optimizers import gsa_acceptance, gsa_acceptance_probability
from .truss import TrussModel, solve_truss

OUTPUT_ROOT_ENV = "SOLO_OPT_OUTPUT_ROOT"

PROBLEMS = ("compliance-5", "compliance-11", "truss-72", "truss-432",
            "truss-1008", "analytic-smoke")
METHODS = ("solo", "solo-g", "solo-r", "offline", "ss",
           "direct-gsa", "direct-ba", "direct-bba")

#: which methods are meaningful on which problem's design space
COMPATIBLE = {
    "compliance-5": {"solo", "offline", "ss", "direct-gsa", "direct-ba"},
    "compliance-11": {"solo", "offline", "ss", "direct-gsa", "direct-ba"},
    "truss-72": {"solo", "offline", "ss", "direct-ba"},
    "truss-432": {"solo", "offline", "ss", "direct-ba"},
    "truss-1008": {"solo", "offline", "ss", "direct-ba"},
    "analytic-smoke": set(METHODS),
}

#: methods that require a binary design space
BINARY_METHODS = {"solo-g", "solo-r", "direct-bba"}


# ---------------------------------------------------------------------------
# config files (TOML subset: flat sections of scalars and lists)

def read_config(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_format_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)}")


def write_config(config: dict, path):
    """Serialize a two-level dict of scalars/lists; inverse of read_config."""
    lines = []
    scalars = {k: v for k, v in config.items() if not isinstance(v, dict)}
    for k, v in scalars.items():
        lines.append(f"{k} = {_format_value(v)}")
    for section, body in config.items():
        if not isinstance(body, dict):
            continue
        lines.append("")
        lines.append(f"[{section}]")
        for k, v in body.items():
            lines.append(f"{k} = {_format_value(v)}")
    Path(path).write_text("\n".join(lines).strip() + "\n")


def _apply_section(obj, section: dict):
    fields = {f for f in getattr(obj, "__dataclass_fields__", {})}
    unknown = set(section) - fields
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    coerced = {}
    for k, v in section.items():
        if isinstance(v, list):
            v = tuple(v)
        coerced[k] = v
    return replace(obj, **coerced)


def build_solo_config(problem: str, seed: int, budget: int | None,
                      threads: int, file_cfg: dict) -> driver.SoloConfig:
    cfg = driver.default_solo_config(problem, seed=seed, budget=budget)
    cfg = replace(cfg, threads=threads)
    if "solo" in file_cfg:
        cfg = _apply_section(cfg, file_cfg["solo"])
    for name in ("gsa", "ba", "bba"):
        if name in file_cfg:
            cfg = replace(cfg, **{name: _apply_section(getattr(cfg, name),
                                                       file_cfg[name])})
    return cfg


def config_as_dict(cfg: driver.SoloConfig) -> dict:
    def plain(dc, skip=()):
        out = {}
        for k in dc.__dataclass_fields__:
            if k in skip:
                continue
            v = getattr(dc, k)
            if isinstance(v, tuple):
                v = list(v)
            out[k] = v
        return out

    return {
        "solo": plain(cfg, skip=("gsa", "ba", "bba")),
        "gsa": plain(cfg.gsa),
        "ba": plain(cfg.ba),
        "bba": plain(cfg.bba),
    }


# ---------------------------------------------------------------------------
# run command

def make_problem(problem_id: str, method: str) -> driver.Problem:
    if problem_id.startswith("compliance-"):
        return driver.make_compliance_problem(int(problem_id.split("-")[1]))
    if problem_id.startswith("truss-"):
        blocks = {"truss-72": 4, "truss-432": 24, "truss-1008": 56}[problem_id]
        return driver.make_truss_problem(blocks)
    kind = "binary" if method in BINARY_METHODS else "continuous"
    return driver.make_analytic_problem(kind=kind)


def run_method(problem: driver.Problem, method: str,
               cfg: driver.SoloConfig, budget: int) -> driver.RunReport:
    if method == "solo":
        return driver.run_solo(problem, cfg)
    if method == "solo-g":
        cfg = replace(cfg, variant="greedy", optimizer="bba", samples_per_loop=10)
        return driver.run_solo(problem, cfg)
    if method == "solo-r":
        cfg = replace(cfg, variant="regular", optimizer="bba", samples_per_loop=100)
        return driver.run_solo(problem, cfg)
    if method == "offline":
        return driver.run_offline_baseline(problem, budget - 1, cfg)
    if method == "ss":
        return driver.run_stochastic_search(problem, cfg)
    optimizer = method.split("-")[1]
    return driver.run_direct_heuristic(problem, optimizer, budget, cfg)


def _export_design(problem: driver.Problem, values: np.ndarray, path):
    if problem.name.startswith("compliance-"):
        export_density_field(values, problem.shape.rows, path)
    elif problem.name.startswith("truss-"):
        areas = problem.to_areas(values)
        with open(path, "w") as fh:
            for a in areas:
                fh.write(repr(float(a)) + "\n")
    else:
        with open(path, "w") as fh:
            for v in values:
                fh.write(repr(float(v)) + "\n")


def cmd_run(args) -> int:
    problem_id, method = args.problem, args.method
    if method not in COMPATIBLE[problem_id]:
        print(f"error: method {method!r} is not applicable to {problem_id!r} "
              f"(valid: {', '.join(sorted(COMPATIBLE[problem_id]))})",
              file=sys.stderr)
        return 2
    file_cfg = read_config(args.config) if args.config else {}
    out_root = args.output or os.environ.get(OUTPUT_ROOT_ENV, ".")
    out_dir = Path(out_root) / f"{problem_id}-{method}-seed{args.seed}"
    try:
        cfg = build_solo_config(problem_id, args.seed, args.budget,
                                args.threads, file_cfg)
        problem = make_problem(problem_id, method)
        report = run_method(problem, method, cfg, cfg.max_train)
        out_dir.mkdir(parents=True, exist_ok=True)
        report.to_csv(out_dir / "report.csv")
        if report.dataset is not None:
            report.dataset.save_jsonl(out_dir / "dataset.jsonl")
        params = getattr(report, "surrogate", None)
        if params is not None:
            sg.save_checkpoint(params, out_dir / "checkpoint.npz")
        if report.best_design is not None:
            _export_design(problem, report.best_design, out_dir / "design.txt")
        write_config(config_as_dict(cfg), out_dir / "config.toml")
        print(f"{problem_id} {method} seed={args.seed}: "
              f"best objective {report.best_objective:.6g} "
              f"({len(report.rows)} report rows) -> {out_dir}")
        return 0
    except Exception:
        traceback.print_exc()
        return 1


# ---------------------------------------------------------------------------
# selftest command

def _check_gradient() -> tuple[bool, str]:
    spec = sg.MlpSpec(4, hidden=(8, 8))
    params = sg.init_network(spec, RngStream(0, 5))
    err = sg.gradient_check(params, np.array([0.2, 0.8, 0.5, 0.1]))
    return err < 1e-4, f"max relative gradient error {err:.2e}"


def _check_truss() -> tuple[bool, str]:
    # vertical bar, axial load: u = PL/EA, stress = P/A
    length, area, modulus, p = 100.0, 2.0, 1e7, 5000.0
    model = TrussModel(
        nodes=np.array([[0.0, 0.0, 0.0], [0.0, 0.0, length]]),
        bars=np.array([[0, 1]]),
        fixed_dofs=np.array([0, 1, 2, 3, 4]),
        loads=np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -p]]),
        elastic_modulus=modulus,
        unit_weight=np.array([0.1]),
        catalog=np.array([area]),
        stress_limit=1e9,
        displacement_limit=1e9,
    )
    res = solve_truss(model, np.array([area]))
    u_exact = -p * length / (modulus * area)
    ok = (abs(res.displacements[1, 2] - u_exact) <= 1e-8 * abs(u_exact)
          and abs(res.stresses[0] + p / area) <= 1e-8 * p / area)
    return ok, f"tip displacement {res.displacements[1, 2]:.6e} vs {u_exact:.6e}"


def _check_rbf() -> tuple[bool, str]:
    rng = RngStream(3, 0).generator
    centers = rng.random((30, 2))
    rho = rng.random(30)
    model = rbf_fit(centers, rho)
    err = float(np.max(np.abs(rbf_eval(model, centers) - rho)))
    return err < 1e-8, f"max interpolation residual {err:.2e}"


def _check_gsa_acceptance() -> tuple[bool, str]:
    rng = RngStream(11, 2)
    worst = 0.0
    for delta in (5.0, 12.0):  # analytic p ~ 0.94 and 0.81 here
        p = gsa_acceptance_probability(delta, t=10, T=1000.0, qa=-5.0)
        hits = np.mean([gsa_acceptance(delta, 10, 1000.0, -5.0, rng)
                        for _ in range(20_000)])
        worst = max(worst, abs(hits - p))
    return worst < 0.02, f"max acceptance frequency deviation {worst:.4f}"


#: name -> zero-arg check returning (ok, detail); tests may patch entries
SELFTEST_CHECKS = [
    ("surrogate-gradient", _check_gradient),
    ("truss-analytic", _check_truss),
    ("rbf-interpolation", _check_rbf),
    ("gsa-acceptance", _check_gsa_acceptance),
]


def cmd_selftest(_args) -> int:
    failures = 0
    for name, check in SELFTEST_CHECKS:
        try:
            ok, detail = check()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        status = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
        print(f"{status}  {name:<20} {detail}")
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# export-plotdata command

def cmd_export_plotdata(args) -> int:
    path = Path(args.report)
    if not path.exists():
        print(f"error: report not found: {path}", file=sys.stderr)
        return 1
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = sys.stdout if args.out is None else open(args.out, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(["n_train", "best_F"])
        for row in rows:
            writer.writerow([row["n_train"], row["best_F"]])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solo-opt",
        description="Surrogate-assisted non-gradient topology optimization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an optimization method on a problem")
    p_run.add_argument("--problem", required=True, choices=PROBLEMS)
    p_run.add_argument("--method", required=True, choices=METHODS)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--budget", type=int, default=None,
                       help="total FEM evaluation budget (default: per-problem preset)")
    p_run.add_argument("--output", "-o", default=None,
                       help=f"output root (default: ${OUTPUT_ROOT_ENV} or cwd)")
    p_run.add_argument("--config", default=None, help="TOML config file")
    p_run.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="parallel FEM evaluations per batch")
    p_run.set_defaults(func=cmd_run)

    p_self = sub.add_parser("selftest", help="run built-in numerical checks")
    p_self.set_defaults(func=cmd_selftest)

    p_plot = sub.add_parser("export-plotdata",
                            help="emit (n_train, best_F) series from a report")
    p_plot.add_argument("report")
    p_plot.add_argument("--out", default=None)
    p_plot.set_defaults(func=cmd_export_plotdata)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
