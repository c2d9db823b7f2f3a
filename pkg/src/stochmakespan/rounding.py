"""From a fractional selection to an integral one, and the outer guessing loop.

Tasks are peeled into classes by scale ``k = 2^(2^l)``: a resource whose
remaining fractional load, measured with effective sizes at scale ``k^2``,
exceeds ``2b`` is declared dangerous and claims all remaining tasks on it.
Each class is widened to a safe resource set, the classes are glued into one
budgeted packing problem and rounded, and tasks with large fractional value
are taken outright.  Every run records the structural bounds it relies on.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .evaluation import MakespanEstimate, evaluate
from .exceptions import InfeasibleError, InternalConsistencyError, ValidationError
from .lp import KAPPA, LpRelaxation, LpSolution, solve_relaxation
from .packing import (
    DEFAULT_REPETITIONS,
    DetCostInstance,
    Rounder,
    default_rounder,
    solve_detcost,
)
from .setsystem import (
    SetSystemInstance,
    disjoint_union,
    extend,
    materialize,
    restrict,
    select_resources,
)
from .stochastic import (
    DiscreteDistribution,
    SplitDistribution,
    build_scaling_grid,
    effective_sizes,
    scale,
    split_at_one,
)

TOL = 1e-7
MAX_RETRIES = 5


@dataclass
class SolverConfig:
    b: float = 4.0
    alpha_bar: float = 4.0
    samples: int = 10**4
    repetitions: int = DEFAULT_REPETITIONS
    seed: int = 0
    fast_k: bool = False
    threads: int = 1
    max_cuts: int = 500
    strict: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TaskClass:
    k: int
    size_scale: int
    dangerous: np.ndarray
    tasks: np.ndarray
    safe: np.ndarray
    captures: dict


@dataclass
class ClassDecomposition:
    classes: list
    rho: int

    @property
    def task_partition(self) -> list:
        return [c.tasks for c in self.classes]


@dataclass
class Solution:
    chosen: np.ndarray
    raw_chosen: np.ndarray
    n_high: int
    n_low: int
    decomposition: ClassDecomposition | None
    metadata: dict = field(default_factory=dict)
    assertions: dict = field(default_factory=dict)
    estimate: MakespanEstimate | None = None


def class_count(m: int) -> int:
    """Number of peeling rounds before the leftover class (``ceil(log2 log2 m) + 1``)."""
    if m <= 1:
        return 0
    return math.ceil(math.log2(math.log2(m)) - 1e-12) + 1


def class_scales(m: int) -> tuple[list[int], int]:
    """Scale ``k`` of each peeling round and the effective-size scale of the
    leftover class.  Scales are capped at ``m^2``; a single resource uses
    plain means."""
    rounds = class_count(m)
    if rounds == 0:
        return [], 1
    cap = m * m
    ks = [2 ** (2**ell) for ell in range(rounds)]
    return ks, min(2 ** (2**rounds), cap)


def _size_scale(k: int, m: int) -> int:
    return min(k, m * m)


def decompose(y, sys: SetSystemInstance, split: Sequence[SplitDistribution], b: float) -> ClassDecomposition:
    """Peel dangerous resources class by class, scanning resources by id."""
    y = np.asarray(y, dtype=np.float64)
    n, m = sys.n_tasks, sys.n_resources
    truncated = [s.truncated for s in split]
    remaining = np.ones(n, dtype=bool)
    ks, last_scale = class_scales(m)
    classes = []
    for k in ks:
        weights = effective_sizes(truncated, _size_scale(k * k, m)) * y
        dangerous, captures = [], {}
        progress = True
        while progress:
            progress = False
            for i in range(m):
                lst = sys.incidence[i]
                live = lst[remaining[lst]]
                if live.size and weights[live].sum() > 2 * b:
                    dangerous.append(i)
                    captures[i] = live
                    remaining[live] = False
                    progress = True
        tasks = np.unique(np.concatenate(list(captures.values()))) if captures else np.zeros(0, np.int64)
        if dangerous:
            ext = extend(restrict(sys, tasks), dangerous)
            safe = ext.safe
        else:
            safe = np.zeros(0, dtype=np.int64)
        classes.append(TaskClass(k, _size_scale(k, m), np.asarray(dangerous, dtype=np.int64), tasks, safe, captures))
    claimed = np.concatenate([c.dangerous for c in classes]) if classes else np.zeros(0, np.int64)
    leftover_res = np.setdiff1d(np.arange(m), claimed)
    leftover = np.flatnonzero(remaining)
    classes.append(TaskClass(2 ** (2 ** len(ks)) if ks else 1, last_scale, leftover_res, leftover, leftover_res, {}))
    return ClassDecomposition(classes, len(ks))


def _pad_cardinality(chosen: np.ndarray, y: np.ndarray, means: np.ndarray, t: int) -> np.ndarray:
    extra = np.setdiff1d(np.arange(y.size), chosen)
    order = extra[np.lexsort((extra, means[extra], -y[extra]))]
    return np.union1d(chosen, order[: max(0, t - chosen.size)])


def trim_to_target(chosen: np.ndarray, y: np.ndarray, means: np.ndarray, t: int) -> np.ndarray:
    """Keep ``t`` tasks, preferring large ``y``, then small mean, then small id."""
    chosen = np.asarray(chosen, dtype=np.int64)
    if chosen.size <= t:
        return np.sort(chosen)
    order = chosen[np.lexsort((chosen, means[chosen], -y[chosen]))]
    return np.sort(order[:t])


def assemble_and_round(
    dec: ClassDecomposition,
    y,
    sys: SetSystemInstance,
    split: Sequence[SplitDistribution],
    t: int,
    alpha_bar: float,
    b: float,
    rounder: Rounder | None = None,
    seed: int = 0,
    strict: bool = True,
) -> Solution:
    """Glue the classes into one budgeted packing problem, round it and add
    the tasks with ``y > 1 / alpha_bar``."""
    y = np.asarray(y.y if isinstance(y, LpSolution) else y, dtype=np.float64)
    rounder = rounder or default_rounder()
    truncated = [s.truncated for s in split]
    costs = np.array([s.exceptional_mean for s in split])
    means = np.array([s.truncated.mean + s.exceptional_mean for s in split])

    blocks, union_ids, sizes = [], [], []
    for cls in dec.classes:
        if cls.tasks.size == 0:
            continue
        blocks.append(select_resources(restrict(sys, cls.tasks), cls.safe))
        union_ids.append(cls.tasks)
        sizes.append(effective_sizes([truncated[j] for j in cls.tasks], cls.size_scale))
    union_ids = np.concatenate(union_ids) if union_ids else np.zeros(0, np.int64)
    sizes = np.concatenate(sizes) if sizes else np.zeros(0)
    theta = KAPPA * 2 * alpha_bar * b
    psi = 2 * alpha_bar
    combined = disjoint_union(blocks) if blocks else SetSystemInstance(0, ())

    high = np.flatnonzero(y > 1.0 / alpha_bar)
    y_bar = np.where(y > 1.0 / alpha_bar, 0.0, alpha_bar * y)
    y_union = y_bar[union_ids]
    detcost = DetCostInstance(combined, sizes, costs[union_ids], theta, psi)

    report = {}
    loads = combined.loads(sizes * y_union)
    cost_mass = float(costs @ y_bar)
    ok = bool((loads.size == 0 or loads.max() <= theta + TOL) and cost_mass <= psi + TOL)
    report["detcost_lp_feasible"] = {"passed": ok, "value": float(loads.max()) if loads.size else 0.0, "bound": theta}
    if not ok and strict:
        raise InternalConsistencyError("scaled fractional solution is infeasible for the budgeted packing problem")

    attempts = []
    low = np.zeros(0, dtype=np.int64)
    for attempt in range(MAX_RETRIES + 1):
        attempt_seed = int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0])
        rounded = solve_detcost(detcost, y_union, rounder, alpha_bar, attempt_seed)
        low = union_ids[rounded.chosen]
        attempts.append({"branch": rounded.info.get("branch"), "size": int(low.size),
                         "reward_shortfall": rounded.info.get("reward_shortfall", False)})
        if high.size + low.size >= t:
            break
    raw = np.union1d(high, low)
    padded = raw.size < t
    if padded:
        raw = _pad_cardinality(raw, y, means, t)
    report["cardinality"] = {
        "passed": not padded,
        "value": int(high.size + low.size),
        "bound": int(t),
        "attempts": len(attempts),
    }
    report.update(_structural_checks(dec, sys, truncated, y, raw, costs, b, alpha_bar))
    failed = [k for k, v in report.items() if not v["passed"] and k != "cardinality"]
    if failed and strict:
        raise InternalConsistencyError(f"structural bounds violated: {failed}")
    return Solution(
        chosen=trim_to_target(raw, y, means, t),
        raw_chosen=raw,
        n_high=int(high.size),
        n_low=int(low.size),
        decomposition=dec,
        metadata={"attempts": attempts, "padded": bool(padded)},
        assertions=report,
    )


def _structural_checks(dec, sys, truncated, y, chosen, costs, b, alpha_bar) -> dict:
    n = sys.n_tasks
    owner = np.full(n, -1, dtype=np.int64)
    overlap = False
    for idx, cls in enumerate(dec.classes):
        overlap |= bool(np.any(owner[cls.tasks] >= 0))
        owner[cls.tasks] = idx
    partition_ok = not overlap and bool(np.all(owner >= 0))

    picked = np.zeros(n)
    picked[chosen] = 1.0
    frac_worst, int_worst, size_ok = 0.0, 0.0, True
    for cls in dec.classes[:-1]:
        size_ok &= cls.dangerous.size <= cls.k * cls.k
    for cls in dec.classes:
        if cls.tasks.size == 0:
            continue
        beta = np.zeros(n)
        beta[cls.tasks] = effective_sizes([truncated[j] for j in cls.tasks], cls.size_scale)
        frac_worst = max(frac_worst, float(sys.loads(beta * y).max()))
        if cls.safe.size:
            int_worst = max(int_worst, float(sys.loads(beta * picked)[cls.safe].max()))
    frac_bound = KAPPA * 2 * b
    int_bound = KAPPA * 4 * alpha_bar * b
    exc = float(costs[chosen].sum())
    return {
        "partition": {"passed": partition_ok, "value": int(len(dec.classes)), "bound": None},
        "class_size": {
            "passed": bool(size_ok),
            "value": [int(c.dangerous.size) for c in dec.classes[:-1]],
            "bound": [int(c.k * c.k) for c in dec.classes[:-1]],
        },
        "fractional_class_load": {"passed": frac_worst <= frac_bound + TOL, "value": frac_worst, "bound": frac_bound},
        "integral_class_load": {"passed": int_worst <= int_bound + TOL, "value": int_worst, "bound": int_bound},
        "exceptional_budget": {"passed": exc <= 4 * alpha_bar + TOL, "value": exc, "bound": 4 * alpha_bar},
    }


@dataclass
class GuessOutcome:
    guess: float
    status: str
    solution: Solution | None = None
    estimate: MakespanEstimate | None = None
    dropped: int = 0
    lp_rounds: int = 0


def _solve_guess(guess, sys, dists, candidates, t, config: SolverConfig, base_chosen) -> GuessOutcome:
    split_all = [split_at_one(scale(dists[j], guess)) for j in candidates]
    keep_mask = np.array([s.exceptional_mean <= 2.0 for s in split_all], dtype=bool)
    kept = candidates[keep_mask]
    dropped = int((~keep_mask).sum())
    if kept.size < t:
        return GuessOutcome(guess, "too-few-tasks", dropped=dropped)
    split = [s for s, k in zip(split_all, keep_mask) if k]
    sub = restrict(sys, kept)
    relaxation = LpRelaxation.from_split(split, t, config.b)
    lp = solve_relaxation(relaxation, sub, max_cuts=config.max_cuts, fast_k=config.fast_k)
    if not lp.feasible:
        return GuessOutcome(guess, "lp-infeasible", dropped=dropped, lp_rounds=len(lp.trace))
    dec = decompose(lp.y, sub, split, config.b)
    sol = assemble_and_round(dec, lp.y, sub, split, t, config.alpha_bar, config.b,
                             default_rounder(config.repetitions), config.seed, config.strict)
    chosen = np.union1d(base_chosen, kept[sol.chosen])
    sol.chosen = chosen
    sol.raw_chosen = np.union1d(base_chosen, kept[sol.raw_chosen])
    est = evaluate(chosen, sys, dists, config.samples, config.seed)
    sol.estimate = est
    sol.metadata.update(guess=guess, lp_objective=lp.objective, lp_rounds=len(lp.trace),
                        lp_cuts=len(lp.cuts), dropped_tasks=dropped)
    return GuessOutcome(guess, "solved", sol, est, dropped, len(lp.trace))


def solve_end_to_end(instance, distributions: Sequence[DiscreteDistribution], t: int,
                     config: SolverConfig | None = None) -> Solution:
    """Try every guess of the optimum and keep the best rounded selection."""
    config = config or SolverConfig()
    sys = instance if isinstance(instance, SetSystemInstance) else materialize(instance)
    dists = list(distributions)
    n = sys.n_tasks
    if len(dists) != n:
        raise ValidationError(f"{len(dists)} distributions for {n} tasks")
    if not 0 <= t <= n:
        raise ValidationError(f"t={t} outside [0, {n}]")
    means = np.array([d.mean for d in dists])
    zero = np.flatnonzero(means == 0.0)
    meta = {"config": config.to_dict(), "preselected_zero_mean": int(min(zero.size, t))}
    if zero.size >= t:
        chosen = zero[:t]
        est = evaluate(chosen, sys, dists, config.samples, config.seed)
        return Solution(chosen, chosen, 0, 0, None, dict(meta, guess=None, guesses=[]), {}, est)
    candidates = np.flatnonzero(means > 0.0)
    remaining_t = t - zero.size
    grid = build_scaling_grid([dists[j] for j in candidates], n)

    def run(guess):
        return _solve_guess(guess, sys, dists, candidates, remaining_t, config, zero)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(run, grid.guesses))
    else:
        outcomes = [run(g) for g in grid.guesses]
    solved = [o for o in outcomes if o.status == "solved"]
    if not solved:
        raise InfeasibleError("no guess of the optimum produced a feasible relaxation")
    best = min(solved, key=lambda o: o.estimate.mean)
    sol = best.solution
    sol.metadata.update(meta)
    sol.metadata["guesses"] = [
        {"guess": o.guess, "status": o.status, "dropped": o.dropped,
         "estimate": o.estimate.mean if o.estimate else None}
        for o in outcomes
    ]
    return sol
