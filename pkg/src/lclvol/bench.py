"""Experiment harness: sweep instance sizes, run solvers from every vertex,
gate cost reporting on validity, and fit log-log scaling exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .generators import (gen_complete_binary, gen_hh_instance,
                         gen_hier_balanced, gen_hybrid_instance,
                         gen_random_tree_labeling)
from .graph import Instance, normalize_labeling
from .probe import aggregate_costs, run_all
from .problems import PROBLEMS
from .solvers import SolverConfig, make_solver

CSV_SCHEMA = "n,seed,max_dist,mean_dist,max_vol,mean_vol,valid_fraction,truncations"


@dataclass
class ExperimentConfig:
    problem: str
    solver: str
    generator: str
    n_list: list[int]
    seeds: int = 1
    master_seed: int = 0
    k: int = 2
    l: int | None = None
    tau: int = 32
    c_const: float = 3.0
    p_defect: float = 0.0
    leaf_color: str = "R"
    instance_seed: int = 0
    cycles: bool = False
    use_batch: bool = True

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.n_list != sorted(set(self.n_list)):
            raise ValueError("the size sweep must be strictly increasing")
        make_solver(self.solver, self.solver_cfg())  # verifies the name

    def solver_cfg(self) -> SolverConfig:
        return SolverConfig(k=self.k, l=self.l, tau=self.tau,
                            c_const=self.c_const)

    def build_instance(self, n: int) -> Instance:
        if self.generator == "complete-binary":
            depth = max(0, round(math.log2(n + 1)) - 1)
            return gen_complete_binary(depth, self.leaf_color)
        if self.generator == "random-tree":
            return gen_random_tree_labeling(n, self.p_defect, self.instance_seed)
        if self.generator == "hier-balanced":
            return gen_hier_balanced(self.k, n, self.instance_seed,
                                     cycles=self.cycles)
        if self.generator == "hybrid":
            return gen_hybrid_instance(self.k, n, self.instance_seed)
        if self.generator == "hh":
            return gen_hh_instance(self.k, self.l or self.k, n,
                                   self.instance_seed)
        raise ValueError(f"unknown generator {self.generator!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Flat key=value lines; `#` starts a comment."""
    fields: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "n_list":
            fields[key] = [int(x) for x in value.split(",") if x]
        elif key in ("seeds", "master_seed", "k", "l", "tau", "instance_seed"):
            fields[key] = int(value)
        elif key in ("c_const", "p_defect"):
            fields[key] = float(value)
        elif key in ("cycles", "use_batch"):
            fields[key] = value.lower() in ("1", "true", "yes")
        else:
            fields[key] = value
    return ExperimentConfig(**fields)


@dataclass
class Row:
    n: int
    seed: int | None
    max_dist: int | None
    mean_dist: float | None
    max_vol: int | None
    mean_vol: float | None
    valid_fraction: float
    truncations: int

    def csv(self) -> str:
        def num(x, fmt="{}"):
            return "" if x is None else fmt.format(x)
        return ",".join([str(self.n), "" if self.seed is None else str(self.seed),
                         num(self.max_dist), num(self.mean_dist, "{:.4f}"),
                         num(self.max_vol), num(self.mean_vol, "{:.4f}"),
                         f"{self.valid_fraction:.6f}", str(self.truncations)])


def run_cell(problem: str, g, lab, solver, seed, k: int, l: int,
             use_batch: bool = True) -> tuple[Row, list]:
    outputs, costs = run_all(g, lab, solver, seed, use_batch=use_batch)
    verdict = PROBLEMS[problem].validate(g, lab, outputs, k=k, l=l or k)
    bad = {vid for vid, _, _ in verdict.violations}
    valid_fraction = 1.0 - len(bad) / g.n
    agg = aggregate_costs(costs)
    if verdict.valid:
        row = Row(g.n, seed, int(agg["max_dist"]), agg["mean_dist"],
                  int(agg["max_vol"]), agg["mean_vol"], valid_fraction,
                  int(agg["truncations"]))
    else:
        row = Row(g.n, seed, None, None, None, None, valid_fraction,
                  int(agg["truncations"]))
    return row, costs


def run_experiment(cfg: ExperimentConfig) -> list[Row]:
    """One row per (n, seed); costs are only recorded for valid runs."""
    rows: list[Row] = []
    solver = make_solver(cfg.solver, cfg.solver_cfg())
    deterministic = solver.deterministic
    for n in cfg.n_list:
        inst = cfg.build_instance(n)
        g = inst.graph
        lab = normalize_labeling(g, inst.labeling)
        seeds = [None] if deterministic else \
            [cfg.master_seed + i for i in range(cfg.seeds)]
        for seed in seeds:
            row, _ = run_cell(cfg.problem, g, lab, solver, seed, cfg.k, cfg.l,
                              use_batch=cfg.use_batch)
            rows.append(row)
    return rows


def rows_to_csv(cfg: ExperimentConfig | None, rows: list[Row]) -> str:
    head = ["# lclvol bench csv schema=1"]
    if cfg is not None:
        head.append(f"# problem={cfg.problem} solver={cfg.solver} "
                    f"generator={cfg.generator} k={cfg.k} l={cfg.l} "
                    f"seeds={cfg.seeds} master_seed={cfg.master_seed}")
    return "\n".join(head + [CSV_SCHEMA] + [r.csv() for r in rows]) + "\n"


def parse_csv(text: str) -> list[dict]:
    rows = []
    header: list[str] | None = None
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        vals = line.split(",")
        rows.append({k: v for k, v in zip(header, vals)})
    return rows


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    residual: float
    points: int


def fit_exponent(rows: list[dict], cost_column: str) -> ScalingFit:
    """Least squares on (log2 n, log2 cost) over rows with recorded costs."""
    xs, ys = [], []
    for row in rows:
        value = row.get(cost_column)
        if value in (None, ""):
            continue
        xs.append(math.log2(float(row["n"])))
        ys.append(math.log2(max(1e-12, float(value))))
    if len(xs) < 2:
        raise ValueError("need at least two sized points to fit a slope")
    coeffs, res = np.polyfit(xs, ys, 1), None
    pred = np.polyval(coeffs, xs)
    residual = float(np.sqrt(np.mean((np.asarray(ys) - pred) ** 2)))
    return ScalingFit(slope=float(coeffs[0]), intercept=float(coeffs[1]),
                      residual=residual, points=len(xs))


def fit_rows(rows: list[Row], cost_column: str) -> ScalingFit:
    dicts = [{"n": r.n, "max_dist": r.max_dist, "mean_dist": r.mean_dist,
              "max_vol": r.max_vol, "mean_vol": r.mean_vol} for r in rows]
    return fit_exponent(dicts, cost_column)
