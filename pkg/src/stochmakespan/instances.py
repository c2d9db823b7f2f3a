"""Instance generators and the JSON instance/result formats.

Both formats are plain JSON with a version tag, sorted keys and floats
written with full round-trip precision, so equal content gives equal bytes.
"""
from __future__ import annotations

import heapq
import itertools
import json
import os
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .exceptions import ValidationError
from .setsystem import FAMILIES, LineFamily, SetSystemInstance, materialize
from .stochastic import DiscreteDistribution

INSTANCE_FORMAT = "stochmakespan-instance/1"
RESULT_FORMAT = "stochmakespan-result/1"
FAMILY_KINDS = ("line", "tree", "rectangles", "disks")
PROFILES = ("bernoulli", "discrete")


@dataclass(eq=False)
class InstanceFile:
    family: Any
    distributions: list
    t: int
    known_optimum: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.family.n_tasks
        if len(self.distributions) != n:
            raise ValidationError(f"{len(self.distributions)} distributions for {n} tasks")
        if not 0 <= self.t <= n:
            raise ValidationError(f"t={self.t} outside [0, {n}]")

    @property
    def kind(self) -> str:
        return "explicit" if isinstance(self.family, SetSystemInstance) else self.family.kind

    def system(self) -> SetSystemInstance:
        if isinstance(self.family, SetSystemInstance):
            return self.family
        if "_sys" not in self.__dict__:
            self.__dict__["_sys"] = materialize(self.family)
        return self.__dict__["_sys"]

    def to_dict(self) -> dict:
        if isinstance(self.family, SetSystemInstance):
            payload = {"n_tasks": int(self.family.n_tasks), "incidence": [a.tolist() for a in self.family.incidence]}
        else:
            payload = self.family.to_payload()
        return {
            "format": INSTANCE_FORMAT,
            "family": {"kind": self.kind, **payload},
            "distributions": [[[v, p] for v, p in d.pairs()] for d in self.distributions],
            "t": int(self.t),
            "known_optimum": self.known_optimum,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceFile":
        if not isinstance(data, dict) or data.get("format") != INSTANCE_FORMAT:
            raise ValidationError(f"not a {INSTANCE_FORMAT} document")
        try:
            fam = dict(data["family"])
            kind = fam.pop("kind")
            if kind == "explicit":
                family = SetSystemInstance.from_lists(int(fam["n_tasks"]), fam["incidence"])
            elif kind in FAMILIES:
                family = FAMILIES[kind].from_payload(fam)
            else:
                raise ValidationError(f"unknown family kind {kind!r}")
            dists = [DiscreteDistribution.from_pairs(pairs) for pairs in data["distributions"]]
            return cls(family, dists, int(data["t"]), data.get("known_optimum"), data.get("metadata") or {})
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed instance: {exc}") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(data: dict) -> str:
    return json.dumps(_jsonable(data), sort_keys=True, indent=1) + "\n"


def save_instance(inst: InstanceFile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(inst.to_dict()))


def load_instance(path) -> InstanceFile:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{os.fspath(path)}: invalid JSON ({exc})") from exc
    return InstanceFile.from_dict(data)


def result_document(solution, instance: InstanceFile | None = None, extra: dict | None = None) -> dict:
    est = solution.estimate
    doc = {
        "format": RESULT_FORMAT,
        "chosen": [int(j) for j in solution.chosen],
        "n_high": solution.n_high,
        "n_low": solution.n_low,
        "selected_before_trim": [int(j) for j in solution.raw_chosen],
        "estimate": est.to_dict() if est is not None else None,
        "assertions": solution.assertions,
        "guess": solution.metadata.get("guess"),
        "metadata": {k: v for k, v in solution.metadata.items() if k != "guess"},
    }
    if instance is not None:
        doc["instance"] = {"kind": instance.kind, "n_tasks": instance.family.n_tasks, "t": instance.t}
    if extra:
        doc.update(extra)
    return doc


def save_result(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc))


def gen_line_gap(depth: int) -> InstanceFile:
    """Dyadic intervals on ``2^depth`` points; a depth-``d`` interval has size
    ``Ber(2^-d)`` and every task must be selected."""
    if not 1 <= depth <= 20:
        raise ValidationError("depth must lie in [1, 20]")
    m = 2**depth
    intervals, dists = [], []
    for d in range(depth + 1):
        width = m >> d
        for idx in range(2**d):
            intervals.append((idx * width, (idx + 1) * width - 1))
            dists.append(DiscreteDistribution.bernoulli(2.0**-d))
    family = LineFamily(m, np.asarray(intervals, dtype=np.int64))
    return InstanceFile(family, dists, len(dists), metadata={"generator": "line-gap", "depth": depth})


def gen_general_gap(q: int) -> InstanceFile:
    """``q`` groups of ``q`` tasks; one resource per way of picking a single
    task from every group.  Task ``a`` of group ``g`` has id ``g*q + a``."""
    if not 2 <= q <= 6:
        raise ValidationError("q must lie in [2, 6]")
    incidence = [[g * q + a for g, a in enumerate(choice)] for choice in itertools.product(range(q), repeat=q)]
    sys = SetSystemInstance.from_lists(q * q, incidence)
    dists = [DiscreteDistribution.bernoulli(1.0 / q) for _ in range(q * q)]
    return InstanceFile(sys, dists, q * q, metadata={"generator": "general-gap", "q": q})


def prufer_to_edges(seq: Sequence[int], n_vertices: int) -> np.ndarray:
    """Decode a Pruefer sequence of length ``n_vertices - 2`` into tree edges."""
    if n_vertices == 1:
        return np.zeros((0, 2), dtype=np.int64)
    if n_vertices == 2:
        return np.array([[0, 1]], dtype=np.int64)
    degree = np.ones(n_vertices, dtype=np.int64)
    for v in seq:
        degree[v] += 1
    leaves = [v for v in range(n_vertices) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, v))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    u, w = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, w))
    return np.asarray(edges, dtype=np.int64)


def _random_distribution(rng: np.random.Generator, profile: str, size_scale: float) -> DiscreteDistribution:
    if profile == "bernoulli":
        return DiscreteDistribution.bernoulli(float(rng.uniform(0.05, 0.95)), size_scale)
    support = int(rng.integers(2, 5))
    values = np.sort(rng.choice(np.arange(0, 9), size=support, replace=False)) * (size_scale / 4.0)
    probs = rng.dirichlet(np.ones(support))
    return DiscreteDistribution.merged(values, probs)


def gen_random(kind: str, n: int, profile: str = "bernoulli", t: int | None = None,
               seed: int = 0, size_scale: float = 1.0) -> InstanceFile:
    """Seeded random geometry with independent random sizes."""
    if kind not in FAMILY_KINDS:
        raise ValidationError(f"kind must be one of {FAMILY_KINDS}")
    if profile not in PROFILES:
        raise ValidationError(f"profile must be one of {PROFILES}")
    if n < 1:
        raise ValidationError("n must be positive")
    if not size_scale > 0:
        raise ValidationError("size scale must be positive")
    t = n // 2 if t is None else t
    rng = np.random.default_rng(seed)
    if kind == "line":
        points = 2 * n
        ends = np.sort(rng.integers(0, points, size=(n, 2)), axis=1)
        family = FAMILIES["line"](points, ends)
    elif kind == "tree":
        nv = max(2, n)
        edges = prufer_to_edges(rng.integers(0, nv, size=nv - 2).tolist(), nv)
        family = FAMILIES["tree"](nv, edges, rng.integers(0, nv, size=(n, 2)))
    elif kind == "rectangles":
        xs = np.sort(np.stack([rng.choice(17, 2, replace=False) for _ in range(n)]), axis=1)
        ys = np.sort(np.stack([rng.choice(17, 2, replace=False) for _ in range(n)]), axis=1)
        family = FAMILIES["rectangles"](np.stack([xs[:, 0], ys[:, 0], xs[:, 1], ys[:, 1]], axis=1).astype(float))
    else:
        centers = rng.uniform(0.0, 10.0, size=(n, 2))
        radii = np.exp(rng.uniform(np.log(0.5), np.log(3.0), size=n))
        family = FAMILIES["disks"](centers, radii)
    dists = [_random_distribution(rng, profile, size_scale) for _ in range(n)]
    meta = {"generator": "random", "kind": kind, "profile": profile, "seed": int(seed), "size_scale": size_scale}
    return InstanceFile(family, dists, t, metadata=meta)
