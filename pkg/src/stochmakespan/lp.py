"""Cutting-plane solver for the fractional task-selection relaxation.

Variables ``y_j`` in ``[0, 1]`` must satisfy

* ``sum_j y_j >= t``,
* ``sum_j E[X''_j] y_j <= 2`` (exceptional mass budget),
* for every ``k`` and every set ``K`` of ``k`` resources,
  ``sum_{j in L(K)} beta_k(X'_j) y_j <= b k``.

The last family is exponential, so it is handled lazily: an explicit LP over
the cuts found so far is solved with HiGHS and a greedy max-coverage oracle
looks for a violated ``(k, K)``.  Because greedy coverage is a ``1 - 1/e``
approximation, a clean pass certifies the constraints up to the factor
``e / (e - 1)`` on the right-hand side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .exceptions import ResourceLimitError, ValidationError
from .setsystem import SetSystemInstance
from .stochastic import DiscreteDistribution, effective_sizes

KAPPA = math.e / (math.e - 1.0)
RESIDUAL_TOL = 1e-7
DEFAULT_MAX_CUTS = 500


@dataclass(frozen=True)
class Cut:
    k: int
    resources: tuple[int, ...]


@dataclass
class LpRelaxation:
    """Data of the relaxation; effective sizes are computed per ``k`` on demand."""

    truncated: Sequence[DiscreteDistribution]
    exceptional_means: np.ndarray
    t: int
    b: float
    cut_pool: list = field(default_factory=list)

    def __post_init__(self):
        self.exceptional_means = np.asarray(self.exceptional_means, dtype=np.float64)
        if len(self.truncated) != self.exceptional_means.size:
            raise ValidationError("one exceptional mean per task is required")
        if not 0 <= self.t <= self.n:
            raise ValidationError(f"target t={self.t} outside [0, {self.n}]")
        if not self.b > 0:
            raise ValidationError("b must be positive")
        self._beta: dict[int, np.ndarray] = {}

    @classmethod
    def from_split(cls, split, t: int, b: float) -> "LpRelaxation":
        return cls([s.truncated for s in split], [s.exceptional_mean for s in split], t, b)

    @property
    def n(self) -> int:
        return len(self.truncated)

    def beta(self, k: int) -> np.ndarray:
        """``beta_k(X'_j)`` for all tasks (cached)."""
        k = int(k)
        if k not in self._beta:
            values = effective_sizes(self.truncated, k)
            values.setflags(write=False)
            self._beta[k] = values
        return self._beta[k]

    def cut_lhs(self, cut: Cut, y: np.ndarray, sys: SetSystemInstance) -> float:
        tasks = sys.tasks_of(cut.resources)
        return float(self.beta(cut.k)[tasks] @ y[tasks])


@dataclass
class LpSolution:
    y: np.ndarray
    status: str
    violation_slack: float
    objective: float
    cuts: list
    trace: list

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def greedy_max_coverage(weights, sys: SetSystemInstance, k: int) -> tuple[np.ndarray, float]:
    """Greedy choice of ``k`` resources covering the most task weight.

    Ties go to the smallest resource id.  Returns ``(chosen, covered)``.
    """
    k = int(k)
    if k <= 0:
        raise ValueError("k must be positive")
    if k > sys.n_resources:
        raise ValueError(f"k={k} exceeds the {sys.n_resources} resources")
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if weights.size != sys.n_tasks or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite, one per task")
    indptr, indices = sys.csr
    chosen, covered = kernels.greedy_coverage(indptr, indices, weights, k)
    return np.asarray(chosen), float(covered)


def scale_sweep(m: int, fast: bool = False) -> list[int]:
    """Values of ``k`` checked by the separation oracle."""
    if m <= 0:
        return []
    if not fast:
        return list(range(1, m + 1))
    ks = {1}
    ell = 0
    while True:
        k = 2 ** (2**ell)
        ks.add(min(k, m))
        ks.add(min(k * k, m))
        if k >= m:
            break
        ell += 1
    return sorted(ks)


def separate(y, relaxation: LpRelaxation, sys: SetSystemInstance, fast_k: bool = False) -> Cut | None:
    """First ``(k, K)`` whose greedy coverage exceeds ``b k``, or ``None``."""
    y = np.asarray(y, dtype=np.float64)
    for k in scale_sweep(sys.n_resources, fast_k):
        weights = relaxation.beta(k) * y
        bound = relaxation.b * k + RESIDUAL_TOL
        if weights.sum() <= bound:
            continue
        chosen, covered = greedy_max_coverage(weights, sys, k)
        if covered > bound:
            return Cut(k, tuple(sorted(int(i) for i in chosen)))
    return None


def _solve_explicit(relaxation: LpRelaxation, rows: list, rhs: list):
    n = relaxation.n
    a_ub = np.vstack([relaxation.exceptional_means[None, :]] + [r[None, :] for r in rows])
    b_ub = np.array([2.0] + rhs)
    res = linprog(
        -np.ones(n),
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(0.0, 1.0)] * n,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9},
    )
    if res.status != 0:
        raise ResourceLimitError(f"explicit LP failed: {res.message}")
    return np.clip(res.x, 0.0, 1.0), -res.fun


def solve_relaxation(
    relaxation: LpRelaxation,
    sys: SetSystemInstance,
    max_cuts: int = DEFAULT_MAX_CUTS,
    fast_k: bool = False,
) -> LpSolution:
    """Cutting-plane loop; maximises ``sum y`` and compares it with ``t``."""
    if sys.n_tasks != relaxation.n:
        raise ValidationError("relaxation and set system disagree on the task count")
    n = relaxation.n
    if relaxation.t == 0:
        return LpSolution(np.zeros(n), "feasible", 0.0, 0.0, [], [])
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    seen: set[Cut] = set()
    trace = []
    for cut in relaxation.cut_pool:
        seen.add(cut)
        row = np.zeros(n)
        tasks = sys.tasks_of(cut.resources)
        row[tasks] = relaxation.beta(cut.k)[tasks]
        rows.append(row)
        rhs.append(relaxation.b * cut.k)
    for round_idx in range(max_cuts + 1):
        y, opt = _solve_explicit(relaxation, rows, rhs)
        if opt < relaxation.t - RESIDUAL_TOL:
            trace.append({"round": round_idx, "objective": opt, "cut": None})
            return LpSolution(y, "infeasible", _slack(rows, rhs, y), opt, list(relaxation.cut_pool), trace)
        cut = separate(y, relaxation, sys, fast_k)
        if cut is None or cut in seen:
            # a repeated cut means it is already enforced up to solver tolerance
            trace.append({"round": round_idx, "objective": opt, "cut": None})
            return LpSolution(y, "feasible", _slack(rows, rhs, y), opt, list(relaxation.cut_pool), trace)
        violation = relaxation.cut_lhs(cut, y, sys) - relaxation.b * cut.k
        trace.append(
            {"round": round_idx, "objective": opt, "cut": {"k": cut.k, "size": len(cut.resources), "violation": violation}}
        )
        seen.add(cut)
        relaxation.cut_pool.append(cut)
        row = np.zeros(n)
        tasks = sys.tasks_of(cut.resources)
        row[tasks] = relaxation.beta(cut.k)[tasks]
        rows.append(row)
        rhs.append(relaxation.b * cut.k)
    raise ResourceLimitError(f"cutting-plane loop exceeded {max_cuts} cuts")


def _slack(rows, rhs, y) -> float:
    if not rows:
        return 0.0
    return float(max(r @ y - c for r, c in zip(rows, rhs)))
