"""Expected makespan estimators, a brute-force optimum and property checkers."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .exceptions import ResourceLimitError
from .lp import LpRelaxation, greedy_max_coverage
from .setsystem import ExtendResult, SetSystemInstance
from .stochastic import DiscreteDistribution, padded_support

EXACT_OUTCOME_CAP = 10**6
BRUTE_FORCE_CAP = 10**5
DEFAULT_SAMPLES = 10**4
ACCEPTANCE_SAMPLES = 10**5
_MC_CHUNK = 8192


@dataclass(frozen=True)
class MakespanEstimate:
    mean: float
    stderr: float
    samples: int
    method: str

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "samples": self.samples, "method": self.method}


def _selection(chosen, sys: SetSystemInstance, dists: Sequence[DiscreteDistribution]):
    chosen = np.unique(np.asarray(list(chosen), dtype=np.int64))
    if chosen.size and (chosen[0] < 0 or chosen[-1] >= sys.n_tasks):
        raise ValueError("task id out of range")
    if len(dists) != sys.n_tasks:
        raise ValueError("one distribution per task is required")
    members = [sys.memberships[j] for j in chosen]
    t_indptr = np.concatenate([[0], np.cumsum([m.size for m in members])]).astype(np.int64)
    t_indices = np.concatenate(members).astype(np.int64) if members else np.zeros(0, np.int64)
    if chosen.size == 0:
        return chosen, np.zeros((0, 1)), np.zeros((0, 1)), np.zeros(0, np.int64), t_indptr, t_indices
    values, probs = padded_support([dists[j] for j in chosen])
    support_len = np.array([len(dists[j]) for j in chosen], dtype=np.int64)
    return chosen, values, probs, support_len, t_indptr, t_indices


def outcome_count(chosen, dists) -> int:
    return math.prod(len(dists[j]) for j in chosen)


def evaluate_exact(chosen, sys: SetSystemInstance, dists) -> MakespanEstimate:
    """Expected makespan by enumerating every joint outcome of the chosen tasks."""
    chosen, values, probs, support_len, t_indptr, t_indices = _selection(chosen, sys, dists)
    count = outcome_count(chosen, dists)
    if count > EXACT_OUTCOME_CAP:
        raise ResourceLimitError(f"{count} outcomes exceed the cap of {EXACT_OUTCOME_CAP}")
    value = kernels.exact_expected_max(values, probs, support_len, t_indptr, t_indices)
    return MakespanEstimate(float(value), 0.0, count, "exact")


def sample_makespans(chosen, sys: SetSystemInstance, dists, samples: int, seed: int) -> np.ndarray:
    chosen, values, probs, support_len, t_indptr, t_indices = _selection(chosen, sys, dists)
    cdf = np.cumsum(probs, axis=1)
    for j, width in enumerate(support_len):
        cdf[j, width - 1 :] = 1.0
    rng = np.random.default_rng(seed)
    out = np.empty(samples)
    for lo in range(0, samples, _MC_CHUNK):
        hi = min(samples, lo + _MC_CHUNK)
        uniforms = rng.random((hi - lo, chosen.size))
        out[lo:hi] = kernels.sample_max_loads(values, cdf, support_len, t_indptr, t_indices, uniforms)
    return out


def evaluate_mc(chosen, sys: SetSystemInstance, dists, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> MakespanEstimate:
    """Monte Carlo estimate of the expected makespan; reproducible by ``seed``."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    draws = sample_makespans(chosen, sys, dists, samples, seed)
    stderr = float(draws.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return MakespanEstimate(float(draws.mean()), stderr, samples, "monte-carlo")


def evaluate(chosen, sys: SetSystemInstance, dists, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> MakespanEstimate:
    """Exact when the outcome space is small enough, Monte Carlo otherwise."""
    if outcome_count(np.unique(np.asarray(list(chosen), dtype=np.int64)), dists) <= EXACT_OUTCOME_CAP:
        return evaluate_exact(chosen, sys, dists)
    return evaluate_mc(chosen, sys, dists, samples, seed)


def brute_force_opt(sys: SetSystemInstance, dists, t: int, evaluator=None, samples: int = ACCEPTANCE_SAMPLES, seed: int = 0):
    """Best size-``t`` subset by exhaustive search; the first subset in
    lexicographic order wins ties.  Returns ``(subset, estimate)``."""
    n = sys.n_tasks
    if not 0 <= t <= n:
        raise ValueError(f"t={t} outside [0, {n}]")
    total = math.comb(n, t)
    if total > BRUTE_FORCE_CAP:
        raise ResourceLimitError(f"{total} subsets exceed the cap of {BRUTE_FORCE_CAP}")
    if evaluator is None:
        def evaluator(subset):
            return evaluate(subset, sys, dists, samples, seed)
    best, best_est = None, None
    for subset in itertools.combinations(range(n), t):
        est = evaluator(subset)
        if best_est is None or est.mean < best_est.mean:
            best, best_est = subset, est
    return tuple(best), best_est


def check_lambda_safe(sys: SetSystemInstance, dangerous, result: ExtendResult, lam: int | None = None) -> dict:
    """Brute-force check of an extension; reports the first counterexample."""
    lam = result.lam if lam is None else lam
    d = np.unique(np.asarray(list(dangerous), dtype=np.int64))
    safe = set(result.safe.tolist())
    missing = [int(i) for i in d if int(i) not in safe]
    if missing:
        return {"passed": False, "reason": "dangerous resource missing from M", "witness": {"resource": missing[0]}}
    if len(result.cover) != sys.n_resources:
        return {"passed": False, "reason": "cover map has wrong length", "witness": {}}
    in_d = np.zeros(sys.n_tasks, dtype=bool)
    in_d[sys.tasks_of(d)] = True
    for i in range(sys.n_resources):
        cover = result.cover[i]
        if len(cover) > lam:
            return {"passed": False, "reason": "cover too large", "witness": {"resource": i, "size": len(cover)}}
        outside = [int(r) for r in cover if int(r) not in safe]
        if outside:
            return {"passed": False, "reason": "cover leaves M", "witness": {"resource": i, "cover": outside[0]}}
        covered = np.zeros(sys.n_tasks, dtype=bool)
        covered[sys.tasks_of(cover)] = True
        lst = sys.incidence[i]
        bad = lst[in_d[lst] & ~covered[lst]]
        if bad.size:
            return {
                "passed": False,
                "reason": "dangerous task not covered",
                "witness": {"resource": i, "task": int(bad[0])},
            }
    return {"passed": True, "reason": None, "witness": None, "M_size": len(safe)}


def _lhs(relaxation: LpRelaxation, sys: SetSystemInstance, y, resources) -> float:
    tasks = sys.tasks_of(resources)
    return float(relaxation.beta(len(resources))[tasks] @ y[tasks])


def check_lp_constraints(
    y,
    relaxation: LpRelaxation,
    sys: SetSystemInstance,
    mode: str = "exhaustive",
    samples: int = 1000,
    seed: int = 0,
    max_k: int | None = None,
) -> dict:
    """Largest ratio ``sum_{L(K)} beta_k y / (b k)`` over the checked sets ``K``.

    ``exhaustive`` enumerates every ``K`` (at most 12 resources unless
    ``max_k`` bounds the set size); ``sampled`` draws ``samples`` random sets
    per size and adds the greedy max-coverage set.
    """
    y = np.asarray(y, dtype=np.float64)
    m = sys.n_resources
    top_k = m if max_k is None else min(max_k, m)
    worst = (0.0, None)
    checked = 0

    def consider(resources):
        nonlocal worst, checked
        checked += 1
        ratio = _lhs(relaxation, sys, y, resources) / (relaxation.b * len(resources))
        if ratio > worst[0]:
            worst = (ratio, tuple(int(r) for r in resources))

    if mode == "exhaustive":
        if max_k is None and m > 12:
            raise ValueError("exhaustive mode needs m <= 12 or a max_k bound")
        for k in range(1, top_k + 1):
            for K in itertools.combinations(range(m), k):
                consider(K)
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        for k in range(1, top_k + 1):
            for _ in range(samples):
                consider(np.sort(rng.choice(m, size=k, replace=False)))
            if np.any(y > 0):
                chosen, _ = greedy_max_coverage(relaxation.beta(k) * y, sys, k)
                consider(np.sort(chosen))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return {"max_ratio": worst[0], "worst_set": worst[1], "checked": checked, "passed": worst[0] <= 1.0 + 1e-9}
