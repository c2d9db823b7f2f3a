"""Discrete task-size distributions and their log-mgf based effective sizes.

A task size is a finite-support random variable given as ordered
``(value, probability)`` pairs.  The pipeline works on instances scaled so that
the target makespan is one; every distribution is then split into a part
supported on ``[0, 1]`` (the *truncated* part) and the mean of the mass above
one (the *exceptional* part).

Effective sizes are evaluated in log-space so that very large scale parameters
do not overflow::

    beta_k(X) = log(E[k ** X]) / log(k)  for k >= 2,    beta_1(X) = E[X]
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import ValidationError

PROBABILITY_TOLERANCE = 1e-9
MAX_SUPPORT_SIZE = 4096


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finite-support distribution with strictly increasing nonnegative values."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        probs = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        if values.size == 0:
            raise ValidationError("distribution needs at least one support point")
        if values.size != probs.size:
            raise ValidationError("values and probabilities differ in length")
        if values.size > MAX_SUPPORT_SIZE:
            raise ValidationError(
                f"support size {values.size} exceeds cap {MAX_SUPPORT_SIZE}"
            )
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValidationError("values must be finite and nonnegative")
        if np.any(np.diff(values) <= 0):
            raise ValidationError("values must be strictly increasing")
        if np.any(~np.isfinite(probs)) or np.any(probs <= 0) or np.any(probs > 1 + PROBABILITY_TOLERANCE):
            raise ValidationError("probabilities must lie in (0, 1]")
        total = math.fsum(probs.tolist())
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")
        probs = np.minimum(probs / total, 1.0)
        values.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "DiscreteDistribution":
        pairs = [(float(v), float(p)) for v, p in pairs]
        if not pairs:
            raise ValidationError("distribution needs at least one support point")
        values, probs = zip(*pairs)
        return cls(np.array(values), np.array(probs))

    @classmethod
    def constant(cls, value: float) -> "DiscreteDistribution":
        return cls(np.array([float(value)]), np.array([1.0]))

    @classmethod
    def bernoulli(cls, p: float, value: float = 1.0) -> "DiscreteDistribution":
        """``value`` with probability ``p``, zero otherwise."""
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"Bernoulli parameter {p} outside [0, 1]")
        if p == 1.0 or value == 0.0:
            return cls.constant(value if p == 1.0 else 0.0)
        if p == 0.0:
            return cls.constant(0.0)
        return cls(np.array([0.0, float(value)]), np.array([1.0 - p, p]))

    @classmethod
    def merged(cls, values, probs) -> "DiscreteDistribution":
        """Build from unsorted pairs, summing the mass of repeated values."""
        values = np.asarray(values, dtype=np.float64)
        probs = np.asarray(probs, dtype=np.float64)
        keep = probs > 0
        uniq, inverse = np.unique(values[keep], return_inverse=True)
        mass = np.zeros(uniq.size)
        np.add.at(mass, inverse, probs[keep])
        return cls(uniq, mass)

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    @property
    def mean(self) -> float:
        return math.fsum((self.values * self.probs).tolist())

    @property
    def max_value(self) -> float:
        return float(self.values[-1])

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(
            self.probs, other.probs
        )

    def __hash__(self) -> int:
        return hash((self.values.tobytes(), self.probs.tobytes()))

    def __repr__(self) -> str:
        return f"DiscreteDistribution({self.pairs()!r})"


@dataclass(frozen=True)
class SplitDistribution:
    """A distribution cut at one: the part in ``[0, 1]`` and the mean above one."""

    truncated: DiscreteDistribution
    exceptional_mean: float


@dataclass(frozen=True)
class ScalingGrid:
    lower: float
    upper: float
    guesses: tuple[float, ...]


def _log_k(k) -> float:
    if k < 1:
        raise ValueError(f"scale parameter must be >= 1, got {k}")
    return math.log(k)


def effective_size(dist: DiscreteDistribution, k) -> float:
    """Effective size of ``dist`` at scale ``k`` (``k = 1`` gives the mean)."""
    if not isinstance(dist, DiscreteDistribution):
        raise ValidationError("expected a DiscreteDistribution")
    if k == 1:
        return dist.mean
    log_k = _log_k(k)
    exponents = log_k * dist.values + np.log(dist.probs)
    top = exponents.max()
    lse = top + math.log(float(np.exp(exponents - top).sum()))
    return lse / log_k


def effective_sizes(dists: Sequence[DiscreteDistribution], k) -> np.ndarray:
    """Vectorised :func:`effective_size` over a list of distributions."""
    if len(dists) == 0:
        return np.zeros(0)
    if k == 1:
        return np.array([d.mean for d in dists])
    values, probs = padded_support(dists)
    log_k = _log_k(k)
    with np.errstate(divide="ignore"):
        exponents = log_k * values + np.log(probs)
    top = exponents.max(axis=1, keepdims=True)
    lse = top[:, 0] + np.log(np.exp(exponents - top).sum(axis=1))
    return lse / log_k


def padded_support(dists: Sequence[DiscreteDistribution]) -> tuple[np.ndarray, np.ndarray]:
    """Stack supports into ``(n, width)`` arrays; padding has probability 0."""
    width = max(len(d) for d in dists)
    values = np.zeros((len(dists), width))
    probs = np.zeros((len(dists), width))
    for j, d in enumerate(dists):
        values[j, : len(d)] = d.values
        probs[j, : len(d)] = d.probs
    return values, probs


def split_at_one(dist: DiscreteDistribution) -> SplitDistribution:
    """Move the mass above one to zero and record its mean separately."""
    big = dist.values > 1.0
    exceptional = math.fsum((dist.values[big] * dist.probs[big]).tolist())
    if not big.any():
        return SplitDistribution(dist, 0.0)
    values = np.where(big, 0.0, dist.values)
    return SplitDistribution(DiscreteDistribution.merged(values, dist.probs), exceptional)


def scale(dist: DiscreteDistribution, factor: float) -> DiscreteDistribution:
    """Divide every support value by ``factor``."""
    if not factor > 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    return DiscreteDistribution(dist.values / factor, dist.probs)


def build_scaling_grid(tasks: Sequence[DiscreteDistribution], n: int | None = None) -> ScalingGrid:
    """Doubling guesses ``L, 2L, 4L, ...`` for the optimum.

    ``L`` is the smallest positive task mean and ``U`` is ``n`` times the
    largest mean.  Exponents run over ``0 .. floor(log2(U / L)) + 1`` so the
    last guess is at least ``U`` and any optimum in ``[L, U]`` lies within a
    factor two below some guess.
    """
    if len(tasks) == 0:
        raise ValueError("cannot build a scaling grid without tasks")
    n = len(tasks) if n is None else n
    means = [d.mean for d in tasks]
    positive = [mu for mu in means if mu > 0]
    if not positive:
        raise ValueError("all tasks have zero mean; no grid needed")
    lower = min(positive)
    upper = n * max(positive)
    top = math.floor(math.log2(upper / lower) + 1e-12) + 1
    guesses = tuple(lower * 2.0**ell for ell in range(top + 1))
    return ScalingGrid(lower, upper, guesses)
