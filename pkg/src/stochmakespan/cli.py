"""Command-line front end.

Exit codes: 0 success, 2 unreadable or invalid input, 3 resource limit hit,
4 no feasible selection found.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from typing import Sequence

import numpy as np

from .evaluation import ACCEPTANCE_SAMPLES, brute_force_opt, check_lp_constraints, evaluate, evaluate_mc
from .exceptions import InfeasibleError, ResourceLimitError, ValidationError
from .instances import (
    FAMILY_KINDS,
    PROFILES,
    dumps,
    gen_general_gap,
    gen_line_gap,
    gen_random,
    load_instance,
    result_document,
    save_instance,
    save_result,
)
from .lp import LpRelaxation, separate
from .rounding import SolverConfig, solve_end_to_end
from .stochastic import scale, split_at_one

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RESOURCE = 3
EXIT_INFEASIBLE = 4
TABLE_HEADER = ("parameter", "lp_bound", "certified", "empirical_makespan", "stderr", "ratio")


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    p.add_argument("--volume-constant", type=float, default=4.0,
                   help="right-hand-side constant b of the effective-size constraints (default 4)")
    p.add_argument("--packing-factor", type=float, default=4.0,
                   help="rounding loss factor used for thresholds and budgets (default 4)")
    p.add_argument("--samples", type=int, default=ACCEPTANCE_SAMPLES,
                   help="Monte Carlo samples for makespan estimates (default 100000)")
    p.add_argument("--repetitions", type=int, default=64, help="tree rounding repetitions (default 64)")
    p.add_argument("--fast-k", action="store_true", help="separate only at the scales the rounding uses")
    p.add_argument("--threads", type=int, default=1, help="worker threads across optimum guesses")


def _config(args) -> SolverConfig:
    return SolverConfig(
        b=args.volume_constant,
        alpha_bar=args.packing_factor,
        samples=args.samples,
        repetitions=args.repetitions,
        seed=args.seed,
        fast_k=args.fast_k,
        threads=args.threads,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochmakespan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="select t tasks for an instance file")
    p.add_argument("instance", help="instance JSON file")
    p.add_argument("-o", "--output", help="result JSON path (default: stdout)")
    _solver_flags(p)

    p = sub.add_parser("generate", help="write a generated instance file")
    p.add_argument("kind", choices=FAMILY_KINDS + ("line-gap", "general-gap"))
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--n", type=int, default=10, help="task count for random families")
    p.add_argument("--t", type=int, default=None, help="target count (default n/2)")
    p.add_argument("--profile", choices=PROFILES, default="bernoulli")
    p.add_argument("--size-scale", type=float, default=1.0)
    p.add_argument("--depth", type=int, default=3, help="depth for line-gap")
    p.add_argument("--q", type=int, default=3, help="group size for general-gap")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gap-experiment", help="tabulate gap-instance makespans")
    p.add_argument("family", choices=("line", "general"))
    p.add_argument("--values", type=int, nargs="+", required=True, help="depths or group sizes to sweep")
    p.add_argument("--samples", type=int, default=ACCEPTANCE_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="also write the table here")

    p = sub.add_parser("compare-oracle", help="compare the solver with exhaustive search")
    p.add_argument("instance")
    p.add_argument("--ledger", help="CSV file to append a row to")
    _solver_flags(p)
    return parser


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    config = _config(args)
    sol = solve_end_to_end(inst.family, inst.distributions, inst.t, config)
    doc = result_document(sol, inst)
    if args.output:
        save_result(doc, args.output)
        print(f"chosen {len(sol.chosen)} tasks, expected makespan {sol.estimate.mean:.6g}; wrote {args.output}")
    else:
        sys.stdout.write(dumps(doc))
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.kind == "line-gap":
        inst = gen_line_gap(args.depth)
    elif args.kind == "general-gap":
        inst = gen_general_gap(args.q)
    else:
        inst = gen_random(args.kind, args.n, args.profile, args.t, args.seed, args.size_scale)
    save_instance(inst, args.output)
    print(f"wrote {args.kind} instance with {inst.family.n_tasks} tasks to {args.output}")
    return EXIT_OK


def certify_line_gap(depth: int) -> tuple[float, bool]:
    """Selecting every task is feasible for the relaxation at guess 1 with b = 4."""
    inst = gen_line_gap(depth)
    sys_ = inst.system()
    split = [split_at_one(d) for d in inst.distributions]
    relax = LpRelaxation.from_split(split, inst.t, 4.0)
    y = np.ones(sys_.n_tasks)
    mode = "exhaustive" if sys_.n_resources <= 12 else "sampled"
    report = check_lp_constraints(y, relax, sys_, mode=mode, samples=200)
    return 1.0, report["passed"]


def certify_general_gap(q: int, guess: float | None = None) -> bool:
    """Whether selecting every task is feasible at ``guess`` (default ``ln q``)
    with ``b = 2e^2``: budget check, greedy separation and all pairs."""
    inst = gen_general_gap(q)
    sys_ = inst.system()
    guess = math.log(q) if guess is None else guess
    split = [split_at_one(scale(d, guess)) for d in inst.distributions]
    relax = LpRelaxation.from_split(split, inst.t, 2 * math.e**2)
    y = np.ones(sys_.n_tasks)
    if any(s.exceptional_mean > 2.0 for s in split) or relax.exceptional_means @ y > 2.0:
        return False
    if separate(y, relax, sys_) is not None:
        return False
    return check_lp_constraints(y, relax, sys_, mode="exhaustive", max_k=2)["passed"]


def smallest_certified_guess(q: int) -> float:
    """First guess ``2^(j/4)``, ``j = -8, -7, ...``, at which all tasks certify."""
    for j in range(-8, 4 * q + 1):
        if certify_general_gap(q, 2.0 ** (j / 4.0)):
            return 2.0 ** (j / 4.0)
    return math.inf


def gap_rows(family: str, values: Sequence[int], samples: int, seed: int) -> list[tuple]:
    rows = []
    for v in values:
        if family == "line":
            inst = gen_line_gap(v)
            bound, ok = certify_line_gap(v)
        else:
            inst = gen_general_gap(v)
            bound, ok = smallest_certified_guess(v), certify_general_gap(v)
        est = evaluate_mc(range(inst.family.n_tasks), inst.system(), inst.distributions, samples, seed)
        rows.append((v, bound, ok, est.mean, est.stderr, est.mean / bound))
    return rows


def format_table(rows) -> str:
    lines = ["\t".join(TABLE_HEADER)]
    for v, bound, ok, mean, se, ratio in rows:
        lines.append(f"{v}\t{bound:.6f}\t{'yes' if ok else 'no'}\t{mean:.6f}\t{se:.6f}\t{ratio:.6f}")
    return "\n".join(lines) + "\n"


def cmd_gap_experiment(args) -> int:
    table = format_table(gap_rows(args.family, args.values, args.samples, args.seed))
    sys.stdout.write(table)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(table)
    return EXIT_OK


def cmd_compare_oracle(args) -> int:
    inst = load_instance(args.instance)
    config = _config(args)
    sys_ = inst.system()
    sol = solve_end_to_end(inst.family, inst.distributions, inst.t, config)
    alg = evaluate(sol.chosen, sys_, inst.distributions, args.samples, args.seed)
    best, opt = brute_force_opt(sys_, inst.distributions, inst.t, samples=args.samples, seed=args.seed)
    ratio = alg.mean / opt.mean if opt.mean > 0 else (1.0 if alg.mean == 0 else math.inf)
    print(f"algorithm {alg.mean:.6f}\toptimum {opt.mean:.6f}\tratio {ratio:.6f}")
    if args.ledger:
        new = not os.path.exists(args.ledger)
        with open(args.ledger, "a", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            if new:
                writer.writerow(["instance", "seed", "algorithm", "optimum", "ratio", "chosen", "optimal_set"])
            writer.writerow([
                args.instance, args.seed, f"{alg.mean:.10g}", f"{opt.mean:.10g}", f"{ratio:.10g}",
                " ".join(str(int(j)) for j in sol.chosen), " ".join(str(j) for j in best),
            ])
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "generate": cmd_generate,
    "gap-experiment": cmd_gap_experiment,
    "compare-oracle": cmd_compare_oracle,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
