"""Concrete geometric families and their reduction to explicit set systems.

Line and tree families use their vertices as resources directly.  Plane
families (axis-parallel rectangles, disks) have a continuum of points, so
they are reduced to one representative point per distinct containment
signature: the set of objects covering that point.  Points that lie in no
object carry no load and are dropped.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar

import numpy as np

from .. import kernels
from ..exceptions import ValidationError
from .core import SetSystemInstance


def _int_pairs(arr) -> np.ndarray:
    out = np.asarray(arr, dtype=np.int64).reshape(-1, 2)
    return out


@dataclass(frozen=True, eq=False)
class LineFamily:
    """Integer points ``0..n_points-1``; task ``j`` covers ``[a_j, b_j]``."""

    n_points: int
    intervals: np.ndarray
    kind: ClassVar[str] = "line"

    def __post_init__(self):
        iv = _int_pairs(self.intervals)
        if self.n_points < 1:
            raise ValidationError("line needs at least one point")
        if iv.size and (np.any(iv[:, 0] > iv[:, 1]) or iv.min() < 0 or iv.max() >= self.n_points):
            raise ValidationError("intervals must satisfy 0 <= a <= b < n_points")
        iv.setflags(write=False)
        object.__setattr__(self, "intervals", iv)

    @property
    def n_tasks(self) -> int:
        return len(self.intervals)

    def as_tree(self) -> "TreeFamily":
        """The same intervals as paths on a path graph rooted at point 0."""
        return self._tree

    @cached_property
    def _tree(self) -> "TreeFamily":
        edges = np.stack([np.arange(self.n_points - 1), np.arange(1, self.n_points)], axis=1)
        return TreeFamily(self.n_points, edges, self.intervals)

    def to_payload(self) -> dict:
        return {"n_points": int(self.n_points), "intervals": self.intervals.tolist()}

    @classmethod
    def from_payload(cls, payload: dict) -> "LineFamily":
        return cls(int(payload["n_points"]), np.asarray(payload["intervals"], dtype=np.int64))


@dataclass(frozen=True, eq=False)
class TreeFamily:
    """A tree on vertices ``0..n_vertices-1``; task ``j`` is the path between
    the two endpoints in ``paths[j]``."""

    n_vertices: int
    edges: np.ndarray
    paths: np.ndarray
    kind: ClassVar[str] = "tree"

    def __post_init__(self):
        edges = _int_pairs(self.edges)
        paths = _int_pairs(self.paths)
        nv = self.n_vertices
        if nv < 1:
            raise ValidationError("tree needs at least one vertex")
        if len(edges) != nv - 1:
            raise ValidationError(f"a tree on {nv} vertices needs {nv - 1} edges, got {len(edges)}")
        if edges.size and (edges.min() < 0 or edges.max() >= nv or np.any(edges[:, 0] == edges[:, 1])):
            raise ValidationError("edge endpoints out of range or self-loop")
        if paths.size and (paths.min() < 0 or paths.max() >= nv):
            raise ValidationError("path endpoint out of range")
        edges.setflags(write=False)
        paths.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "paths", paths)
        if np.any(self.depth < 0):
            raise ValidationError("tree is not connected")

    @property
    def n_tasks(self) -> int:
        return len(self.paths)

    @cached_property
    def adjacency(self) -> tuple:
        adj = [[] for _ in range(self.n_vertices)]
        for u, v in self.edges.tolist():
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def _rooted(self) -> tuple[np.ndarray, np.ndarray]:
        parent = np.full(self.n_vertices, -1, dtype=np.int64)
        depth = np.full(self.n_vertices, -1, dtype=np.int64)
        depth[0] = 0
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in self.adjacency[u]:
                if depth[v] < 0:
                    depth[v] = depth[u] + 1
                    parent[v] = u
                    queue.append(v)
        return parent, depth

    @property
    def parent(self) -> np.ndarray:
        return self._rooted[0]

    @property
    def depth(self) -> np.ndarray:
        return self._rooted[1]

    def path_vertices(self, u: int, v: int) -> np.ndarray:
        """Vertices on the tree path from ``u`` to ``v``, in walking order."""
        parent, depth = self._rooted
        left, right = [u], [v]
        while left[-1] != right[-1]:
            if depth[left[-1]] >= depth[right[-1]]:
                left.append(int(parent[left[-1]]))
            else:
                right.append(int(parent[right[-1]]))
        return np.asarray(left + right[-2::-1], dtype=np.int64)

    @cached_property
    def task_paths(self) -> tuple:
        return tuple(self.path_vertices(int(a), int(b)) for a, b in self.paths)

    def top_vertex(self, j: int) -> int:
        """Vertex of least depth on path ``j`` (the meeting point of its ends)."""
        verts = self.task_paths[j]
        return int(verts[np.argmin(self.depth[verts])])

    def to_payload(self) -> dict:
        return {
            "n_vertices": int(self.n_vertices),
            "edges": self.edges.tolist(),
            "paths": self.paths.tolist(),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "TreeFamily":
        return cls(
            int(payload["n_vertices"]),
            np.asarray(payload["edges"], dtype=np.int64).reshape(-1, 2),
            np.asarray(payload["paths"], dtype=np.int64).reshape(-1, 2),
        )


def _pack_bool(inside: np.ndarray) -> np.ndarray:
    """Pack an ``(N, n)`` boolean matrix into ``(N, words)`` uint64 bitmasks."""
    n_pts, n = inside.shape
    words = max(1, (n + 63) // 64)
    packed = np.packbits(inside, axis=1, bitorder="little")
    padded = np.zeros((n_pts, words * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view("<u8").astype(np.uint64)


@dataclass(frozen=True, eq=False)
class RectangleFamily:
    """Closed axis-parallel rectangles, one row ``(x1, y1, x2, y2)`` per task."""

    rects: np.ndarray
    kind: ClassVar[str] = "rectangles"

    def __post_init__(self):
        rects = np.asarray(self.rects, dtype=np.float64).reshape(-1, 4)
        if not np.all(np.isfinite(rects)):
            raise ValidationError("rectangle coordinates must be finite")
        if np.any(rects[:, 0] >= rects[:, 2]) or np.any(rects[:, 1] >= rects[:, 3]):
            raise ValidationError("rectangles must have x1 < x2 and y1 < y2")
        rects.setflags(write=False)
        object.__setattr__(self, "rects", rects)

    @property
    def n_tasks(self) -> int:
        return len(self.rects)

    def signatures(self, px, py) -> np.ndarray:
        px = np.asarray(px, dtype=np.float64)[:, None]
        py = np.asarray(py, dtype=np.float64)[:, None]
        r = self.rects
        inside = (r[:, 0] <= px) & (px <= r[:, 2]) & (r[:, 1] <= py) & (py <= r[:, 3])
        return _pack_bool(inside)

    def candidate_points(self) -> np.ndarray:
        """Every combination of edge coordinates and midpoints between them."""

        def axis(lo, hi):
            edges = np.unique(np.concatenate([lo, hi]))
            mids = (edges[:-1] + edges[1:]) / 2.0
            return np.unique(np.concatenate([edges, mids]))

        xs = axis(self.rects[:, 0], self.rects[:, 2])
        ys = axis(self.rects[:, 1], self.rects[:, 3])
        return np.stack([np.repeat(xs, ys.size), np.tile(ys, xs.size)], axis=1)

    def to_payload(self) -> dict:
        return {"rects": self.rects.tolist()}

    @classmethod
    def from_payload(cls, payload: dict) -> "RectangleFamily":
        return cls(np.asarray(payload["rects"], dtype=np.float64))


@dataclass(frozen=True, eq=False)
class DiskFamily:
    """Closed disks given by centers ``(n, 2)`` and radii ``(n,)``."""

    centers: np.ndarray
    radii: np.ndarray
    kind: ClassVar[str] = "disks"

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64).reshape(-1, 2)
        radii = np.asarray(self.radii, dtype=np.float64).reshape(-1)
        if len(centers) != len(radii):
            raise ValidationError("centers and radii differ in length")
        if not (np.all(np.isfinite(centers)) and np.all(np.isfinite(radii))):
            raise ValidationError("disk data must be finite")
        if np.any(radii <= 0):
            raise ValidationError("radii must be positive")
        centers.setflags(write=False)
        radii.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)

    @property
    def n_tasks(self) -> int:
        return len(self.radii)

    @property
    def words(self) -> int:
        return max(1, (self.n_tasks + 63) // 64)

    @cached_property
    def _kernel_args(self):
        c = np.ascontiguousarray(self.centers)
        return np.ascontiguousarray(c[:, 0]), np.ascontiguousarray(c[:, 1]), self.radii**2

    def signatures(self, px, py) -> np.ndarray:
        cx, cy, r2 = self._kernel_args
        px = np.ascontiguousarray(px, dtype=np.float64)
        py = np.ascontiguousarray(py, dtype=np.float64)
        return kernels.point_masks(px, py, cx, cy, r2, self.words)

    def lattice_signatures(self, x0: float, y0: float, step: float, nx: int, ny: int) -> np.ndarray:
        cx, cy, r2 = self._kernel_args
        return kernels.lattice_masks(float(x0), float(y0), float(step), int(nx), int(ny), cx, cy, r2)

    @property
    def epsilon(self) -> float:
        lo = (self.centers - self.radii[:, None]).min(axis=0)
        hi = (self.centers + self.radii[:, None]).max(axis=0)
        return 1e-6 * float(np.hypot(*(hi - lo)))

    def candidate_points(self) -> np.ndarray:
        """Centers, radially offset extreme points, and offset intersection points."""
        c, r, eps = self.centers, self.radii, self.epsilon
        pts = [c]
        axes = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        for sign in (-1.0, 1.0):
            reach = (r + sign * eps)[:, None, None]
            pts.append((c[:, None, :] + reach * axes[None, :, :]).reshape(-1, 2))
        n = len(r)
        for i in range(n):
            for j in range(i + 1, n):
                for p in _circle_intersections(c[i], r[i], c[j], r[j]):
                    pts.append(p + eps * axes)
                    ti = _unit(np.array([-(p - c[i])[1], (p - c[i])[0]]))
                    tj = _unit(np.array([-(p - c[j])[1], (p - c[j])[0]]))
                    for direction in (ti + tj, ti - tj):
                        u = _unit(direction)
                        if u is not None:
                            pts.append(np.stack([p + eps * u, p - eps * u]))
        return np.concatenate([np.asarray(q).reshape(-1, 2) for q in pts if q is not None])

    def to_payload(self) -> dict:
        return {"centers": self.centers.tolist(), "radii": self.radii.tolist()}

    @classmethod
    def from_payload(cls, payload: dict) -> "DiskFamily":
        return cls(np.asarray(payload["centers"], dtype=np.float64), np.asarray(payload["radii"], dtype=np.float64))


def _unit(v):
    if v is None:
        return None
    norm = float(np.hypot(v[0], v[1]))
    return None if norm < 1e-12 else v / norm


def _circle_intersections(c1, r1, c2, r2) -> list:
    delta = c2 - c1
    d = float(np.hypot(*delta))
    if d == 0.0 or d > r1 + r2 or d < abs(r1 - r2):
        return []
    a = (d * d + r1 * r1 - r2 * r2) / (2 * d)
    h = np.sqrt(max(r1 * r1 - a * a, 0.0))
    u = delta / d
    base = c1 + a * u
    perp = np.array([-u[1], u[0]])
    if h == 0.0:
        return [base]
    return [base + h * perp, base - h * perp]


FAMILIES = {cls.kind: cls for cls in (LineFamily, TreeFamily, RectangleFamily, DiskFamily)}


@dataclass(frozen=True, eq=False)
class PlaneArrangement:
    """Representative points of a plane family and a signature -> resource lookup."""

    family: object
    points: np.ndarray
    masks: np.ndarray

    @cached_property
    def _index(self) -> dict:
        return {row.tobytes(): i for i, row in enumerate(self.masks)}

    def locate_masks(self, masks: np.ndarray) -> np.ndarray:
        """Resource id for each mask row, ``-1`` when no resource has it."""
        if len(masks) == 0:
            return np.zeros(0, dtype=np.int64)
        index = self._index
        rows = np.ascontiguousarray(masks).view(np.dtype((np.void, masks.shape[1] * 8))).reshape(-1)
        uniq, inverse = np.unique(rows, return_inverse=True)
        ids = np.fromiter((index.get(u.tobytes(), -1) for u in uniq), dtype=np.int64, count=len(uniq))
        return ids[inverse.reshape(-1)]

    def locate(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return self.locate_masks(self.family.signatures(points[:, 0], points[:, 1]))


def _distinct_nonempty(masks: np.ndarray) -> np.ndarray:
    """Indices of the first occurrence of each nonempty mask row, in input order."""
    if len(masks) == 0:
        return np.zeros(0, dtype=np.int64)
    rows = np.ascontiguousarray(masks).view(np.dtype((np.void, masks.shape[1] * 8))).reshape(-1)
    _, first = np.unique(rows, return_index=True)
    first = np.sort(first)
    return first[masks[first].any(axis=1)]


def _incidence_from_masks(masks: np.ndarray, n_tasks: int) -> tuple:
    out = []
    for row in masks:
        bits = np.unpackbits(row.view(np.uint8), bitorder="little")[:n_tasks]
        out.append(np.flatnonzero(bits).astype(np.int64))
    return tuple(out)


def materialize(family) -> SetSystemInstance:
    """Explicit set system for a geometric family."""
    if isinstance(family, LineFamily):
        incidence = [[] for _ in range(family.n_points)]
        for j, (a, b) in enumerate(family.intervals.tolist()):
            for v in range(a, b + 1):
                incidence[v].append(j)
        return SetSystemInstance.from_lists(family.n_tasks, incidence, family=family)
    if isinstance(family, TreeFamily):
        incidence = [[] for _ in range(family.n_vertices)]
        for j, verts in enumerate(family.task_paths):
            for v in verts.tolist():
                incidence[v].append(j)
        return SetSystemInstance.from_lists(family.n_tasks, incidence, family=family)
    if isinstance(family, (RectangleFamily, DiskFamily)):
        if family.n_tasks == 0:
            arrangement = PlaneArrangement(family, np.zeros((0, 2)), np.zeros((0, 1), dtype=np.uint64))
            return SetSystemInstance(0, (), family=family, arrangement=arrangement)
        cand = family.candidate_points()
        masks = family.signatures(cand[:, 0], cand[:, 1])
        keep = _distinct_nonempty(masks)
        arrangement = PlaneArrangement(family, cand[keep], masks[keep])
        return SetSystemInstance(
            family.n_tasks,
            _incidence_from_masks(masks[keep], family.n_tasks),
            family=family,
            arrangement=arrangement,
        )
    raise ValidationError(f"unsupported family type {type(family).__name__}")
