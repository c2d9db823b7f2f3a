"""Rounding fractional packings into integral ones.

A packing instance asks for a task set of large total reward such that every
resource carries size at most ``theta``.  Rounders take a fractional ``y``
satisfying the capacity constraints and return a feasible subset of its
support.  :func:`solve_detcost` uses any such rounder to pick many tasks under
both per-resource size budgets and a global cost budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .exceptions import ValidationError
from .setsystem import (
    LineFamily,
    SetSystemInstance,
    TreeFamily,
    restrict,
)

FEASIBILITY_TOL = 1e-7
DEFAULT_REPETITIONS = 64
# summation order differs between rounding and checking; allow one rounding step
_CAPACITY_ULP = 1e-12


@dataclass(frozen=True, eq=False)
class PackingInstance:
    sys: SetSystemInstance
    sizes: np.ndarray
    rewards: np.ndarray
    theta: float

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=np.float64)
        rewards = np.asarray(self.rewards, dtype=np.float64)
        if sizes.size != self.sys.n_tasks or rewards.size != self.sys.n_tasks:
            raise ValidationError("sizes and rewards need one entry per task")
        if not np.all(np.isfinite(sizes)) or np.any(sizes < 0):
            raise ValidationError("sizes must be finite and nonnegative")
        if sizes.size and sizes.max() > self.theta:
            raise ValidationError("every size must fit within theta")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "rewards", rewards)


@dataclass(frozen=True, eq=False)
class DetCostInstance:
    sys: SetSystemInstance
    sizes: np.ndarray
    costs: np.ndarray
    theta: float
    psi: float

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=np.float64)
        costs = np.asarray(self.costs, dtype=np.float64)
        if sizes.size != self.sys.n_tasks or costs.size != self.sys.n_tasks:
            raise ValidationError("sizes and costs need one entry per task")
        if sizes.size and sizes.max() > self.theta:
            raise ValidationError("every size must fit within theta")
        if costs.size and (costs.min() < 0 or costs.max() > self.psi):
            raise ValidationError("costs must lie in [0, psi]")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "costs", costs)


@dataclass
class RoundedSet:
    chosen: np.ndarray
    achieved_reward: float
    feasible: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)


Rounder = Callable[[PackingInstance, np.ndarray, int], RoundedSet]


def capacity_ok(inst: PackingInstance, chosen) -> bool:
    mask = np.zeros(inst.sys.n_tasks)
    mask[np.asarray(chosen, dtype=np.int64)] = 1.0
    loads = inst.sys.loads(inst.sizes * mask)
    return bool(np.all(loads <= inst.theta * (1.0 + _CAPACITY_ULP)))


def fractional_ok(inst: PackingInstance, y) -> bool:
    loads = inst.sys.loads(inst.sizes * np.asarray(y, dtype=np.float64))
    return bool(np.all(loads <= inst.theta + FEASIBILITY_TOL))


def _finish(inst: PackingInstance, y, chosen, **info) -> RoundedSet:
    chosen = np.unique(np.asarray(chosen, dtype=np.int64))
    y = np.asarray(y, dtype=np.float64)
    return RoundedSet(
        chosen,
        float(inst.rewards[chosen].sum()),
        {"capacity": capacity_ok(inst, chosen), "support": bool(np.all(y[chosen] > 0))},
        info,
    )


def _tree_of(family) -> TreeFamily:
    if isinstance(family, LineFamily):
        return family.as_tree()
    if isinstance(family, TreeFamily):
        return family
    raise ValidationError("tree rounding needs a line or tree family")


def round_tree_ufp(
    inst: PackingInstance,
    y,
    tree,
    repetitions: int = DEFAULT_REPETITIONS,
    rng_seed: int = 0,
) -> RoundedSet:
    """Randomised path rounding on a tree, best of ``repetitions`` runs.

    Capacities are enforced on the vertices that are resources of
    ``inst.sys``.  Paths are visited from the root outwards by the depth of
    their top vertex; small (``s <= theta/2``) and large paths fill separate
    pools and each run keeps the richer pool.
    """
    tree = _tree_of(tree)
    y = np.asarray(y, dtype=np.float64)
    if y.size != inst.sys.n_tasks:
        raise ValidationError("y needs one entry per task")
    if not fractional_ok(inst, y):
        raise ValueError("fractional solution violates a capacity constraint")
    n = inst.sys.n_tasks
    fam_ids = inst.sys.family_task_ids()
    paths = [tree.task_paths[int(f)] for f in fam_ids]
    tops = np.array([tree.depth[tree.top_vertex(int(f))] for f in fam_ids], dtype=np.int64)
    order = np.lexsort((np.arange(n), tops)).astype(np.int64)
    p_indptr = np.concatenate([[0], np.cumsum([p.size for p in paths])]).astype(np.int64)
    p_vertices = np.concatenate(paths).astype(np.int64) if n else np.zeros(0, np.int64)
    constrained = np.zeros(tree.n_vertices, dtype=np.bool_)
    constrained[inst.sys.family_resource_ids()] = True
    live_y = np.where(inst.rewards >= 0, y, 0.0)
    large = inst.sizes > inst.theta / 2.0
    reps = max(1, int(repetitions))
    uniforms = np.random.default_rng(rng_seed).random((reps, n))
    chosen, value = kernels.tree_round(
        order, p_indptr, p_vertices, inst.sizes, inst.rewards, live_y,
        float(inst.theta), large, constrained, uniforms, tree.n_vertices,
    )
    best = int(np.argmax(value)) if reps else 0
    return _finish(inst, y, np.flatnonzero(chosen[best]), repetition=best, repetitions=reps)


def greedy_independent_set(inst: PackingInstance, y, rng_seed: int = 0) -> RoundedSet:
    """Tasks pairwise sharing no resource, picked by decreasing ``r_j y_j``."""
    y = np.asarray(y, dtype=np.float64)
    score = inst.rewards * y
    order = np.lexsort((np.arange(y.size), -score))
    used = np.zeros(inst.sys.n_resources, dtype=bool)
    chosen = []
    for j in order:
        if y[j] <= 0 or inst.rewards[j] < 0:
            continue
        res = inst.sys.memberships[j]
        if not used[res].any():
            used[res] = True
            chosen.append(int(j))
    return _finish(inst, y, chosen)


def _alteration(inst: PackingInstance, chosen: np.ndarray) -> np.ndarray:
    """Drop lowest-reward tasks from overloaded resources until all fit."""
    keep = chosen.copy()
    for i, lst in enumerate(inst.sys.incidence):
        members = lst[keep[lst]]
        load = inst.sizes[members].sum()
        if load <= inst.theta:
            continue
        # evict cheapest first, larger ids first on ties
        order = np.lexsort((-members, inst.rewards[members]))
        for j in members[order]:
            if load <= inst.theta:
                break
            keep[j] = False
            load -= inst.sizes[j]
    return keep


def round_size_groups(
    inst: PackingInstance,
    y,
    indep_rounder: Rounder = greedy_independent_set,
    rng_seed: int = 0,
) -> RoundedSet:
    """Size-grouped rounding driven by an independent-set plug-in.

    Tasks below ``tau = theta / (2 ln m)`` are rounded independently with
    probability ``y/2`` and repaired by eviction.  Larger tasks are grouped
    by powers of two above ``tau``; inside a group whose largest size is
    ``s`` up to ``floor(theta / s)`` independent sets are peeled off the
    quartered fractional solution.  The best group wins.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.size != inst.sys.n_tasks:
        raise ValidationError("y needs one entry per task")
    if not fractional_ok(inst, y):
        raise ValueError("fractional solution violates a capacity constraint")
    n = inst.sys.n_tasks
    if n == 0:
        return _finish(inst, y, [], group=None)
    tau = inst.theta / (2.0 * math.log(max(inst.sys.n_resources, 2)))
    rng = np.random.default_rng(rng_seed)
    active = (y > 0) & (inst.rewards >= 0)
    candidates = []

    small = active & (inst.sizes < tau)
    u = rng.random(n)
    picked = _alteration(inst, small & (u < y / 2.0))
    candidates.append((0, np.flatnonzero(picked)))

    group = np.zeros(n, dtype=np.int64)
    big = inst.sizes >= tau
    group[big] = np.floor(np.log2(inst.sizes[big] / tau)).astype(np.int64) + 1
    for g in sorted(set(group[active & big].tolist())):
        members = np.flatnonzero(active & (group == g))
        copies = max(1, int(math.floor(inst.theta / inst.sizes[members].max())))
        z = np.zeros(n)
        z[members] = y[members] / 4.0
        taken: list[int] = []
        remaining = members
        for it in range(copies):
            if remaining.size == 0:
                break
            sub = restrict(inst.sys, remaining)
            sub_inst = PackingInstance(sub, inst.sizes[remaining], inst.rewards[remaining], inst.theta)
            part = indep_rounder(sub_inst, z[remaining], int(rng.integers(2**31)))
            got = remaining[part.chosen]
            if got.size == 0:
                break
            taken.extend(got.tolist())
            remaining = np.setdiff1d(remaining, got)
        candidates.append((g, np.asarray(taken, dtype=np.int64)))

    rewards = [inst.rewards[c].sum() for _, c in candidates]
    best = int(np.argmax(rewards))
    return _finish(inst, y, candidates[best][1], group=candidates[best][0], groups=len(candidates))


def default_rounder(repetitions: int = DEFAULT_REPETITIONS) -> Rounder:
    """Tree rounding for line and tree blocks, the grouped rounder elsewhere.

    Disjoint unions are rounded block by block with seeds derived from the
    caller's seed and the block index.
    """

    def single(inst: PackingInstance, y, seed: int) -> RoundedSet:
        if isinstance(inst.sys.family, (LineFamily, TreeFamily)):
            return round_tree_ufp(inst, y, inst.sys.family, repetitions, seed)
        return round_size_groups(inst, y, greedy_independent_set, seed)

    def rounder(inst: PackingInstance, y, seed: int) -> RoundedSet:
        y = np.asarray(y, dtype=np.float64)
        if not inst.sys.parts:
            return single(inst, y, seed)
        chosen = []
        for idx, (t_off, _, part) in enumerate(inst.sys.parts):
            sl = slice(t_off, t_off + part.n_tasks)
            sub = PackingInstance(part, inst.sizes[sl], inst.rewards[sl], inst.theta)
            block_seed = int(np.random.SeedSequence([seed, idx]).generate_state(1)[0])
            chosen.append(single(sub, y[sl], block_seed).chosen + t_off)
        return _finish(inst, y, np.concatenate(chosen) if chosen else [])

    return rounder


def _merge_parts(chosen: np.ndarray, costs: np.ndarray, psi: float) -> tuple[list, int]:
    parts = [[int(j)] for j in chosen]
    cost = [float(costs[j]) for j in chosen]
    merges = 0
    while len(parts) >= 2:
        order = sorted(range(len(parts)), key=lambda p: (cost[p], parts[p][0]))
        a, b = order[0], order[1]
        if cost[a] + cost[b] > psi:
            break
        parts[a] = sorted(parts[a] + parts[b])
        cost[a] += cost[b]
        del parts[b], cost[b]
        merges += 1
    return parts, merges


def solve_detcost(
    inst: DetCostInstance,
    y,
    packable_rounder: Rounder,
    alpha_bar: float,
    rng_seed: int = 0,
) -> RoundedSet:
    """Many tasks under per-resource size and global cost budgets.

    Rewards ``1 - (T / 2 psi) c_j`` turn the cost budget into a penalty; the
    rounded set is kept when it fits the budget, otherwise it is split into
    budget-respecting parts and the part with most tasks is returned.
    """
    y = np.asarray(y, dtype=np.float64)
    total = float(y.sum())
    rewards = 1.0 - (total / (2.0 * inst.psi)) * inst.costs
    pinst = PackingInstance(inst.sys, inst.sizes, rewards, inst.theta)
    rounded = packable_rounder(pinst, y, rng_seed)
    chosen = rounded.chosen
    shortfall = rounded.achieved_reward < total / alpha_bar - FEASIBILITY_TOL
    info = {"lp_mass": total, "reward": rounded.achieved_reward, "reward_shortfall": bool(shortfall)}
    if inst.costs[chosen].sum() <= inst.psi:
        info.update(branch="within-budget", merges=0)
        out = chosen
    else:
        parts, merges = _merge_parts(chosen, inst.costs, inst.psi)
        sizes = [len(p) for p in parts]
        out = np.asarray(parts[int(np.argmax(sizes))], dtype=np.int64)
        info.update(branch="merged", merges=merges, parts=len(parts))
    result = _finish(pinst, y, out, **info)
    result.feasible["cost"] = bool(inst.costs[result.chosen].sum() <= inst.psi * (1.0 + _CAPACITY_ULP))
    return result
