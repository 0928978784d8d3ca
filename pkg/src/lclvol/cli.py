"""Command line entry point.

Subcommands: gen, solve, validate, bench, adversary, mpc, fit.
Exit codes: 0 ok, 1 an invalid output was encountered, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .adversary import hthc_adversary, leafcolor_adversary, replay_transcript
from .bench import (fit_exponent, parse_config, parse_csv, rows_to_csv,
                    run_experiment)
from .generators import (gen_complete_binary, gen_disjointness_btl,
                         gen_hh_instance, gen_hier_balanced,
                         gen_hybrid_instance, gen_random_tree_labeling)
from .graph import normalize_labeling, parse_instance, serialize_instance
from .mpc import MpcConfig, mpc_simulate
from .probe import run_all
from .problems import PROBLEMS
from .solvers import SOLVER_NAMES, SolverConfig, make_solver


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def _solver_cfg(args) -> SolverConfig:
    return SolverConfig(k=args.k, l=args.l, tau=args.tau, c_const=args.c_const)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--solver", required=True, choices=SOLVER_NAMES)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--tau", type=int, default=32)
    p.add_argument("--c-const", dest="c_const", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=None)


def cmd_gen(args) -> int:
    if args.family == "complete-binary":
        inst = gen_complete_binary(args.depth, args.leaf_color)
    elif args.family == "random-tree":
        inst = gen_random_tree_labeling(args.n, args.p_defect, args.gen_seed)
    elif args.family == "disjointness-btl":
        a = [int(ch) for ch in args.a]
        b = [int(ch) for ch in args.b]
        inst = gen_disjointness_btl(a, b)
    elif args.family == "hier-balanced":
        inst = gen_hier_balanced(args.k, args.n, args.gen_seed,
                                 cycles=args.cycles)
    elif args.family == "hybrid":
        inst = gen_hybrid_instance(args.k, args.n, args.gen_seed)
    else:
        inst = gen_hh_instance(args.k, args.l or args.k, args.n, args.gen_seed)
    _write(args.out, serialize_instance(inst))
    return 0


def cmd_solve(args) -> int:
    inst = parse_instance(_read(args.instance))
    g = inst.graph
    lab = normalize_labeling(g, inst.labeling)
    solver = make_solver(args.solver, _solver_cfg(args))
    outputs, _ = run_all(g, lab, solver, args.seed)
    _write(args.out, "".join(f"{g.ids[v]} {outputs[v]}\n" for v in range(g.n)))
    return 0


def cmd_validate(args) -> int:
    inst = parse_instance(_read(args.instance))
    g = inst.graph
    lab = normalize_labeling(g, inst.labeling)
    by_id = {}
    for line in _read(args.outputs).splitlines():
        if line.strip():
            vid, _, out = line.partition(" ")
            by_id[int(vid)] = out.strip()
    try:
        outputs = [by_id[g.ids[v]] for v in range(g.n)]
    except KeyError as missing:
        sys.stderr.write(f"missing output for id {missing}\n")
        return 2
    verdict = PROBLEMS[args.problem].validate(g, lab, outputs, k=args.k,
                                              l=args.l or args.k)
    sys.stdout.write(verdict.report())
    return 0 if verdict.valid else 1


def cmd_bench(args) -> int:
    cfg = parse_config(_read(args.config))
    rows = run_experiment(cfg)
    _write(args.out, rows_to_csv(cfg, rows))
    return 0 if all(r.valid_fraction == 1.0 for r in rows) else 1


def cmd_adversary(args) -> int:
    solver = make_solver(args.solver, _solver_cfg(args))
    if args.problem == "leafcolor":
        t = leafcolor_adversary(solver, args.budget)
    else:
        t = hthc_adversary(solver, args.k, args.budget)
    sys.stdout.write(t.transcript_text())
    if t.success and args.replay:
        replay_transcript(make_solver(args.solver, _solver_cfg(args)), t)
        sys.stdout.write("replay reproduced the failure\n")
    if t.instance is not None and args.out:
        _write(args.out, serialize_instance(t.instance))
    return 0 if t.success else 1


def cmd_mpc(args) -> int:
    inst = parse_instance(_read(args.instance))
    g = inst.graph
    lab = normalize_labeling(g, inst.labeling)
    solver = make_solver(args.solver, _solver_cfg(args))
    cfg = MpcConfig(c=args.c, space=args.space)
    outputs, trace = mpc_simulate(g, lab, solver, cfg, args.seed)
    _write(args.out, trace.csv())
    sys.stdout.write(f"rounds {trace.rounds} max_sent {trace.max_sent} "
                     f"max_received {trace.max_received} "
                     f"peak_stored {trace.peak_stored}\n")
    return 0


def cmd_fit(args) -> int:
    rows = parse_csv(_read(args.csv))
    fit = fit_exponent(rows, args.column)
    sys.stdout.write(f"slope {fit.slope:.6f} intercept {fit.intercept:.6f} "
                     f"residual {fit.residual:.6f} points {fit.points}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lclvol",
                                 description="probe-model simulator for "
                                             "locally checkable labelings")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--family", required=True,
                   choices=["complete-binary", "random-tree",
                            "disjointness-btl", "hier-balanced", "hybrid", "hh"])
    g.add_argument("--depth", type=int, default=3)
    g.add_argument("--leaf-color", dest="leaf_color", default="R",
                   choices=["R", "B"])
    g.add_argument("--n", type=int, default=63)
    g.add_argument("--p-defect", dest="p_defect", type=float, default=0.0)
    g.add_argument("--gen-seed", dest="gen_seed", type=int, default=0)
    g.add_argument("--a", default="10")
    g.add_argument("--b", default="01")
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--l", type=int, default=None)
    g.add_argument("--cycles", action="store_true")
    g.add_argument("-o", "--out", default="-")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run a solver from every vertex")
    s.add_argument("--instance", required=True)
    _add_solver_flags(s)
    s.add_argument("-o", "--out", default="-")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="check an output labeling")
    v.add_argument("--instance", required=True)
    v.add_argument("--outputs", required=True)
    v.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    v.add_argument("--k", type=int, default=2)
    v.add_argument("--l", type=int, default=None)
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench", help="run a sweep from a key=value config")
    b.add_argument("--config", required=True)
    b.add_argument("-o", "--out", default="-")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("adversary", help="attack a deterministic solver")
    a.add_argument("--problem", required=True, choices=["leafcolor", "hthc"])
    a.add_argument("--budget", type=int, required=True)
    a.add_argument("--replay", action="store_true")
    _add_solver_flags(a)
    a.add_argument("-o", "--out", default=None)
    a.set_defaults(func=cmd_adversary)

    m = sub.add_parser("mpc", help="simulate a solver in the machine model")
    m.add_argument("--instance", required=True)
    _add_solver_flags(m)
    m.add_argument("--c", type=float, default=0.5)
    m.add_argument("--space", type=int, default=None)
    m.add_argument("-o", "--out", default="-")
    m.set_defaults(func=cmd_mpc)

    f = sub.add_parser("fit", help="fit a log-log scaling exponent")
    f.add_argument("--csv", required=True)
    f.add_argument("--column", default="max_vol")
    f.set_defaults(func=cmd_fit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError) as err:
        sys.stderr.write(f"error: {err}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
