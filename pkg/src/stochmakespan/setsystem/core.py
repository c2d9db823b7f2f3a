from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from ..exceptions import ValidationError


def _as_id_array(ids, upper: int, what: str) -> np.ndarray:
    arr = np.asarray(sorted(set(int(i) for i in ids)), dtype=np.int64)
    if arr.size and (arr[0] < 0 or arr[-1] >= upper):
        raise ValueError(f"{what} id out of range [0, {upper})")
    return arr


@dataclass(frozen=True, eq=False)
class SetSystemInstance:
    """Tasks ``0..n_tasks-1`` and resources ``0..m-1``; ``incidence[i]`` lists
    the tasks loading resource ``i`` in increasing order.

    ``family``/``arrangement`` point back to the geometry that produced the
    system so extension queries can be answered geometrically.  ``task_ids``
    and ``resource_ids`` map local ids to the ids of that geometry; ``None``
    means identity.  Disjoint unions keep their blocks in ``parts`` as
    ``(task_offset, resource_offset, part)``.
    """

    n_tasks: int
    incidence: tuple
    family: Any = None
    arrangement: Any = None
    task_ids: np.ndarray | None = None
    resource_ids: np.ndarray | None = None
    parts: tuple = field(default=())

    def __post_init__(self):
        if self.n_tasks < 0:
            raise ValidationError("negative task count")
        cleaned = []
        for i, tasks in enumerate(self.incidence):
            arr = np.asarray(tasks, dtype=np.int64).reshape(-1)
            if arr.size:
                if np.any(np.diff(arr) <= 0):
                    raise ValidationError(f"resource {i}: task list not sorted/unique")
                if arr[0] < 0 or arr[-1] >= self.n_tasks:
                    raise ValidationError(f"resource {i}: task id out of range")
            arr.setflags(write=False)
            cleaned.append(arr)
        object.__setattr__(self, "incidence", tuple(cleaned))

    @classmethod
    def from_lists(cls, n_tasks: int, lists: Sequence[Sequence[int]], **kw) -> "SetSystemInstance":
        return cls(n_tasks, tuple(np.unique(np.asarray(lst, dtype=np.int64)) for lst in lists), **kw)

    @property
    def n_resources(self) -> int:
        return len(self.incidence)

    @cached_property
    def memberships(self) -> tuple:
        """Per task, the sorted resources it loads."""
        rows, cols = self.csr
        owner = np.repeat(np.arange(self.n_resources, dtype=np.int64), np.diff(rows))
        order = np.argsort(cols, kind="stable")
        counts = np.bincount(cols, minlength=self.n_tasks)
        splits = np.split(owner[order], np.cumsum(counts)[:-1]) if self.n_tasks else []
        return tuple(s for s in splits)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` of the resource -> task incidence."""
        sizes = np.array([a.size for a in self.incidence], dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        indices = (
            np.concatenate(self.incidence).astype(np.int64) if sizes.sum() else np.zeros(0, np.int64)
        )
        return indptr, indices

    @cached_property
    def task_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` of the task -> resource incidence."""
        sizes = np.array([a.size for a in self.memberships], dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        indices = (
            np.concatenate(self.memberships).astype(np.int64) if sizes.sum() else np.zeros(0, np.int64)
        )
        return indptr, indices

    def tasks_of(self, resources) -> np.ndarray:
        """Union of the task lists of ``resources``."""
        resources = list(resources)
        if not resources:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate([self.incidence[i] for i in resources]))

    def loads(self, weights) -> np.ndarray:
        """Per-resource sum of ``weights`` over incident tasks."""
        indptr, indices = self.csr
        weights = np.asarray(weights, dtype=np.float64)
        owner = np.repeat(np.arange(self.n_resources), np.diff(indptr))
        return np.bincount(owner, weights=weights[indices], minlength=self.n_resources)

    def family_task_ids(self) -> np.ndarray:
        if self.task_ids is None:
            return np.arange(self.n_tasks, dtype=np.int64)
        return self.task_ids

    def family_resource_ids(self) -> np.ndarray:
        if self.resource_ids is None:
            return np.arange(self.n_resources, dtype=np.int64)
        return self.resource_ids


@dataclass(frozen=True, eq=False)
class ExtendResult:
    """A safe superset ``M`` of the dangerous resources plus, for every
    resource, a small subset of ``M`` whose tasks cover its dangerous tasks."""

    dangerous: np.ndarray
    safe: np.ndarray
    cover: tuple
    lam: int

    def cover_of(self, i: int) -> np.ndarray:
        return self.cover[i]


def restrict(sys: SetSystemInstance, tasks) -> SetSystemInstance:
    """Project the system onto a task subset, renumbering tasks ``0..|X|-1``.

    All resources are kept; ``task_ids`` records the original ids so
    extension queries still go to the parent geometry.
    """
    keep = _as_id_array(tasks, sys.n_tasks, "task")
    local = np.full(sys.n_tasks, -1, dtype=np.int64)
    local[keep] = np.arange(keep.size)
    incidence = []
    for lst in sys.incidence:
        mapped = local[lst]
        incidence.append(mapped[mapped >= 0])
    return SetSystemInstance(
        keep.size,
        tuple(incidence),
        family=sys.family,
        arrangement=sys.arrangement,
        task_ids=sys.family_task_ids()[keep],
        resource_ids=sys.resource_ids,
    )


def select_resources(sys: SetSystemInstance, resources) -> SetSystemInstance:
    """Keep only the listed resources (tasks unchanged)."""
    keep = _as_id_array(resources, sys.n_resources, "resource")
    return SetSystemInstance(
        sys.n_tasks,
        tuple(sys.incidence[i] for i in keep),
        family=sys.family,
        arrangement=sys.arrangement,
        task_ids=sys.task_ids,
        resource_ids=sys.family_resource_ids()[keep],
    )


def disjoint_union(parts: Sequence[SetSystemInstance]) -> SetSystemInstance:
    """Block-diagonal union; every part gets its own task and resource copies."""
    parts = list(parts)
    if len(parts) == 1:
        return parts[0]
    incidence = []
    blocks = []
    task_offset = 0
    for part in parts:
        blocks.append((task_offset, len(incidence), part))
        incidence.extend(lst + task_offset for lst in part.incidence)
        task_offset += part.n_tasks
    return SetSystemInstance(task_offset, tuple(incidence), parts=tuple(blocks))
