"""Safe extensions of a dangerous resource set, one construction per family.

Given resources ``D``, each construction returns a superset ``M`` and, for
every resource ``i``, a small ``R_i`` inside ``M`` such that any task that
loads both ``i`` and some member of ``D`` also loads a member of ``R_i``.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from ..exceptions import ValidationError
from .core import ExtendResult, SetSystemInstance
from .geometry import DiskFamily, LineFamily, RectangleFamily, TreeFamily

LINE_LAMBDA = 2
TREE_LAMBDA = 2
RECTANGLE_LAMBDA = 4

# Disk grids: side 10*theta, cells of side 0.1*theta (100 per side) and the
# cover lattice of spacing cell/4 reaching one cell beyond the grid.
GRID_CELLS = 100
CELL_FRACTION = 0.1
Q_SPAN = 13
GRID_LATTICE = 4 * GRID_CELLS + 9
CLUSTER_CELLS = (39, 60)
_CLUSTER_SPAN = 4 * (CLUSTER_CELLS[1] - CLUSTER_CELLS[0]) + Q_SPAN
DISK_LAMBDA = _CLUSTER_SPAN**2 + Q_SPAN**2
DISK_GRID_POINTS = GRID_LATTICE**2


def _check_d(dangerous, m: int) -> np.ndarray:
    d = np.unique(np.asarray(list(dangerous), dtype=np.int64))
    if d.size == 0:
        raise ValueError("dangerous set must be nonempty")
    if d[0] < 0 or d[-1] >= m:
        raise ValueError("dangerous resource id out of range")
    return d


def _result(d, safe, cover, lam) -> ExtendResult:
    safe = np.unique(np.concatenate([d, np.asarray(safe, dtype=np.int64)]))
    cover = tuple(np.unique(np.asarray(c, dtype=np.int64)) for c in cover)
    return ExtendResult(d, safe, cover, lam)


def extend_line(dangerous, n_points: int) -> ExtendResult:
    """``M = D``; each point is covered by its nearest members of ``D`` on either side."""
    d = _check_d(dangerous, n_points)
    pts = np.arange(n_points)
    left_pos = np.searchsorted(d, pts, side="right") - 1
    right_pos = np.searchsorted(d, pts, side="left")
    cover = []
    for i in range(n_points):
        c = []
        if left_pos[i] >= 0:
            c.append(d[left_pos[i]])
        if right_pos[i] < d.size:
            c.append(d[right_pos[i]])
        cover.append(c)
    return _result(d, d, cover, LINE_LAMBDA)


def steiner_subtree(tree: TreeFamily, terminals) -> np.ndarray:
    """Boolean vertex mask of the minimal subtree spanning ``terminals``."""
    keep = np.ones(tree.n_vertices, dtype=bool)
    is_terminal = np.zeros(tree.n_vertices, dtype=bool)
    is_terminal[list(terminals)] = True
    degree = np.array([len(a) for a in tree.adjacency])
    queue = deque(v for v in range(tree.n_vertices) if degree[v] <= 1 and not is_terminal[v])
    while queue:
        v = queue.popleft()
        if not keep[v] or is_terminal[v]:
            continue
        keep[v] = False
        for u in tree.adjacency[v]:
            if keep[u]:
                degree[u] -= 1
                if degree[u] <= 1 and not is_terminal[u]:
                    queue.append(u)
    return keep


def extend_tree(dangerous, tree: TreeFamily) -> ExtendResult:
    """``M`` adds the branching vertices of the subtree spanned by ``D``."""
    d = _check_d(dangerous, tree.n_vertices)
    in_sub = steiner_subtree(tree, d)
    sub_adj = [tuple(u for u in tree.adjacency[v] if in_sub[u]) if in_sub[v] else () for v in range(tree.n_vertices)]
    in_m = np.zeros(tree.n_vertices, dtype=bool)
    in_m[d] = True
    for v in np.flatnonzero(in_sub):
        if len(sub_adj[v]) >= 3:
            in_m[v] = True

    # nearest subtree vertex of every vertex; BFS layers expand in id order so
    # equidistant candidates resolve to the smallest id
    anchor = np.full(tree.n_vertices, -1, dtype=np.int64)
    frontier = sorted(int(v) for v in np.flatnonzero(in_sub))
    for v in frontier:
        anchor[v] = v
    while frontier:
        proposals = {}
        for v in frontier:
            for u in tree.adjacency[v]:
                if anchor[u] < 0:
                    proposals[u] = min(proposals.get(u, anchor[v]), anchor[v])
        for u, a in proposals.items():
            anchor[u] = a
        frontier = sorted(proposals)

    def walk(start: int, first: int) -> int:
        prev, cur = start, first
        while not in_m[cur]:
            nxt = [u for u in sub_adj[cur] if u != prev]
            prev, cur = cur, nxt[0]
        return cur

    cache: dict[int, list] = {}
    cover = []
    for i in range(tree.n_vertices):
        v = int(anchor[i])
        if v not in cache:
            if in_m[v]:
                cache[v] = [v]
            else:
                # a non-M subtree vertex has exactly two subtree neighbours
                cache[v] = [walk(v, u) for u in sub_adj[v]]
        cover.append(cache[v])
    return _result(d, np.flatnonzero(in_m), cover, TREE_LAMBDA)


def _plane_arrangement(sys: SetSystemInstance):
    if sys.arrangement is None:
        raise ValidationError("plane extension needs a materialized arrangement")
    if sys.resource_ids is not None:
        raise ValidationError("plane extension is not defined on a resource subset")
    return sys.arrangement


def _located(ids: np.ndarray) -> np.ndarray:
    return np.unique(ids[ids >= 0])


def extend_rectangles(dangerous, sys: SetSystemInstance) -> ExtendResult:
    """``M`` is the coordinate grid of ``D``; ``R_p`` the corners of ``p``'s grid cell."""
    arr = _plane_arrangement(sys)
    d = _check_d(dangerous, sys.n_resources)
    pts = arr.points
    xs = np.unique(pts[d, 0])
    ys = np.unique(pts[d, 1])
    grid = np.stack([np.repeat(xs, ys.size), np.tile(ys, xs.size)], axis=1)
    safe = _located(arr.locate(grid))

    def brackets(axis: np.ndarray, v: float) -> list:
        lo = np.searchsorted(axis, v, side="right") - 1
        hi = np.searchsorted(axis, v, side="left")
        out = []
        if lo >= 0:
            out.append(axis[lo])
        if hi < axis.size and (not out or axis[hi] != out[0]):
            out.append(axis[hi])
        return out

    cover = []
    for p in pts:
        corners = [(x, y) for x in brackets(xs, p[0]) for y in brackets(ys, p[1])]
        cover.append(_located(arr.locate(np.asarray(corners))) if corners else [])
    return _result(d, safe, cover, RECTANGLE_LAMBDA)


def q_points(x: float, y: float, side: float) -> np.ndarray:
    """Cover points of the square ``[x, x+side] x [y, y+side]``.

    A 13 x 13 lattice of spacing ``side/4`` over the concentric square of side
    ``3*side``; any disk of diameter at least ``side`` meeting the square
    contains one of them.
    """
    if not side > 0:
        raise ValueError("square side must be positive")
    offs = np.arange(Q_SPAN) * (side / 4.0) - side
    return np.stack([np.repeat(x + offs, Q_SPAN), np.tile(y + offs, Q_SPAN)], axis=1)


class _DiskGrid:
    """Grid of side ``10*theta`` centred at ``center`` and its cover lattice.

    Lattice point ``(a, b)`` sits at ``origin + (a, b) * step``; the cover
    points of cell ``(cx, cy)`` are lattice indices ``4c .. 4c + 12`` per axis.
    """

    def __init__(self, center, theta: float):
        self.cell = CELL_FRACTION * theta
        self.step = self.cell / 4.0
        self.corner = np.asarray(center, dtype=np.float64) - 5.0 * theta
        self.origin = self.corner - self.cell

    def cell_of(self, p) -> tuple[int, int]:
        idx = np.floor((np.asarray(p) - self.corner) / self.cell).astype(np.int64)
        idx = np.clip(idx, 0, GRID_CELLS - 1)
        return int(idx[0]), int(idx[1])

    def masks(self, family: DiskFamily, lo: tuple[int, int], count: tuple[int, int]) -> np.ndarray:
        x0 = self.origin[0] + lo[0] * self.step
        y0 = self.origin[1] + lo[1] * self.step
        return family.lattice_signatures(x0, y0, self.step, count[0], count[1])

    def cell_masks(self, family: DiskFamily, cell: tuple[int, int]) -> np.ndarray:
        return self.masks(family, (4 * cell[0], 4 * cell[1]), (Q_SPAN, Q_SPAN))

    def cell_range_masks(self, family: DiskFamily, first: int, last: int) -> np.ndarray:
        first, last = max(first, 0), min(last, GRID_CELLS - 1)
        span = 4 * (last - first) + Q_SPAN
        return self.masks(family, (4 * first, 4 * first), (span, span))

    def all_masks(self, family: DiskFamily) -> np.ndarray:
        return self.masks(family, (0, 0), (GRID_LATTICE, GRID_LATTICE))


def extend_fat(dangerous, sys: SetSystemInstance) -> ExtendResult:
    """Grid-based extension for disks.

    For every point of ``D`` and every distance between two points of ``D``
    a grid is laid out and all its cover points join ``M``.  ``R_p`` is
    picked from one or two of those grids depending on how the distance from
    ``p`` to its nearest point of ``D`` compares with the available scales.
    """
    arr = _plane_arrangement(sys)
    family = arr.family
    if not isinstance(family, DiskFamily):
        raise ValidationError("extend_fat needs a disk family")
    d = _check_d(dangerous, sys.n_resources)
    pts = arr.points
    dp = pts[d]
    dist = np.hypot(dp[:, None, 0] - dp[None, :, 0], dp[:, None, 1] - dp[None, :, 1])
    scales = np.unique(dist[np.triu_indices(d.size, 1)])
    scales = scales[scales > 0]

    grids: dict[tuple[int, float], _DiskGrid] = {}

    def grid(a: int, theta: float) -> _DiskGrid:
        key = (a, float(theta))
        if key not in grids:
            grids[key] = _DiskGrid(dp[a], theta)
        return grids[key]

    safe = [d]
    if scales.size == 0:
        default = float(family.radii.min())
        for a in range(d.size):
            safe.append(_located(arr.locate_masks(grid(a, default).all_masks(family))))
        return _result(d, np.concatenate(safe), [[d[0]] for _ in range(len(pts))], DISK_LAMBDA)
    for a in range(d.size):
        for theta in scales:
            safe.append(_located(arr.locate_masks(grid(a, theta).all_masks(family))))

    log_scales = np.log(scales)
    cover = []
    for p in pts:
        to_d = np.hypot(dp[:, 0] - p[0], dp[:, 1] - p[1])
        a = int(np.argmin(to_d))
        near = float(to_d[a])
        if near == 0.0:
            cover.append([d[a]])
            continue
        ok = (scales >= near / 5.0) & (scales <= 5.0 * near)
        if ok.any():
            cand = np.flatnonzero(ok)
            theta = scales[cand[np.argmin(np.abs(log_scales[cand] - math.log(near)))]]
            g = grid(a, theta)
            cover.append(_located(arr.locate_masks(g.cell_masks(family, g.cell_of(p)))))
            continue
        close = np.flatnonzero(dist[a] <= near / 5.0)
        rest = np.setdiff1d(np.arange(d.size), close)
        picked = []
        if close.size == 1:
            picked.append(np.array([d[a]]))
        else:
            spread = float(dist[np.ix_(close, close)].max())
            g = grid(a, spread)
            picked.append(_located(arr.locate_masks(g.cell_range_masks(family, *CLUSTER_CELLS))))
        if rest.size:
            b = int(rest[np.argmin(to_d[rest])])
            g = grid(b, dist[a, b])
            picked.append(_located(arr.locate_masks(g.cell_masks(family, g.cell_of(p)))))
        cover.append(np.concatenate(picked))
    return _result(d, np.concatenate(safe), cover, DISK_LAMBDA)


def extend_explicit(dangerous, sys: SetSystemInstance) -> ExtendResult:
    """Fallback without geometry: ``M`` holds every resource meeting ``L(D)``
    and each such resource covers itself."""
    d = _check_d(dangerous, sys.n_resources)
    hit = np.zeros(sys.n_tasks, dtype=bool)
    hit[sys.tasks_of(d)] = True
    safe = [i for i, lst in enumerate(sys.incidence) if hit[lst].any()]
    in_safe = np.zeros(sys.n_resources, dtype=bool)
    in_safe[safe] = True
    cover = [[i] if in_safe[i] else [] for i in range(sys.n_resources)]
    return _result(d, safe, cover, 1)


def extend(sys: SetSystemInstance, dangerous) -> ExtendResult:
    """Dispatch to the construction matching the system's geometry."""
    family = sys.family
    if sys.resource_ids is not None:
        return extend_explicit(dangerous, sys)
    if isinstance(family, LineFamily):
        return extend_line(dangerous, family.n_points)
    if isinstance(family, TreeFamily):
        return extend_tree(dangerous, family)
    if isinstance(family, RectangleFamily):
        return extend_rectangles(dangerous, sys)
    if isinstance(family, DiskFamily):
        return extend_fat(dangerous, sys)
    return extend_explicit(dangerous, sys)
