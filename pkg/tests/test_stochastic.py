import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochmakespan import (
    DiscreteDistribution,
    ValidationError,
    build_scaling_grid,
    effective_size,
    effective_sizes,
    scale,
    split_at_one,
)
from stochmakespan.stochastic import MAX_SUPPORT_SIZE

from oracles import bernoulli_closed_form, effective_size_direct, tail_probability


@st.composite
def distributions(draw, max_value=5.0, max_support=6):
    size = draw(st.integers(1, max_support))
    values = draw(
        st.lists(st.floats(0.0, max_value, allow_nan=False), min_size=size, max_size=size, unique=True)
    )
    weights = draw(st.lists(st.floats(0.05, 1.0), min_size=size, max_size=size))
    values = sorted(values)
    total = sum(weights)
    return DiscreteDistribution(np.array(values), np.array(weights) / total)


# -- construction ---------------------------------------------------------


def test_rejects_bad_supports():
    with pytest.raises(ValidationError):
        DiscreteDistribution.from_pairs([(1.0, 0.5), (0.5, 0.5)])
    with pytest.raises(ValidationError):
        DiscreteDistribution.from_pairs([(-1.0, 1.0)])
    with pytest.raises(ValidationError):
        DiscreteDistribution.from_pairs([(0.0, 0.5), (1.0, 0.4)])
    with pytest.raises(ValidationError):
        DiscreteDistribution.from_pairs([])
    with pytest.raises(ValidationError):
        DiscreteDistribution(np.arange(MAX_SUPPORT_SIZE + 1.0), np.full(MAX_SUPPORT_SIZE + 1, 1.0 / (MAX_SUPPORT_SIZE + 1)))


def test_probabilities_are_renormalised_within_tolerance():
    d = DiscreteDistribution.from_pairs([(0.0, 0.5 + 4e-10), (1.0, 0.5)])
    assert math.fsum(d.probs) == pytest.approx(1.0, abs=1e-15)


# -- effective size ---------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2, 7, 2**16])
def test_effective_size_of_constant(k):
    assert effective_size(DiscreteDistribution.constant(0.37), k) == pytest.approx(0.37, abs=1e-12)


def test_effective_size_bernoulli_half_at_two():
    # frozen from the direct-summation oracle
    assert effective_size_direct([(0.0, 0.5), (1.0, 0.5)], 2) == pytest.approx(0.5849625007211562, abs=1e-15)
    assert effective_size(DiscreteDistribution.bernoulli(0.5), 2) == pytest.approx(0.5849625007211562, abs=1e-12)


@pytest.mark.parametrize("d", [0, 1, 3, 6])
@pytest.mark.parametrize("k", [2, 4, 256])
def test_effective_size_dyadic_bernoulli(d, k):
    p = 2.0**-d
    expected = math.log(1 + (k - 1) * p) / math.log(k)
    assert effective_size(DiscreteDistribution.bernoulli(p), k) == pytest.approx(expected, abs=1e-12)


def test_effective_size_huge_scale_does_not_overflow():
    d = DiscreteDistribution.from_pairs([(0.0, 0.9), (900.0, 0.1)])
    # 10^6 ** 900 overflows a double; the log-space form must not
    value = effective_size(d, 10**6)
    expected = 900.0 + math.log(0.1) / math.log(10**6)
    assert value == pytest.approx(expected, rel=1e-12)


def test_effective_sizes_vectorised_matches_scalar():
    dists = [
        DiscreteDistribution.bernoulli(0.3),
        DiscreteDistribution.from_pairs([(0.1, 0.2), (0.5, 0.3), (0.9, 0.5)]),
        DiscreteDistribution.constant(0.0),
    ]
    for k in (1, 2, 16, 1000):
        vec = effective_sizes(dists, k)
        for d, v in zip(dists, vec):
            assert v == pytest.approx(effective_size(d, k), abs=1e-13)


@given(distributions(), st.integers(2, 2**16))
def test_effective_size_matches_direct_summation(d, k):
    assert effective_size(d, k) == pytest.approx(effective_size_direct(d.pairs(), k), rel=1e-10, abs=1e-12)


@given(distributions(), st.integers(2, 5000), st.integers(2, 5000))
def test_effective_size_monotone_in_scale(d, k1, k2):
    k1, k2 = min(k1, k2), max(k1, k2)
    assert effective_size(d, k1) <= effective_size(d, k2) + 1e-9


@given(distributions(), st.integers(1, 10**6))
def test_effective_size_sandwich(d, k):
    beta = effective_size(d, k)
    assert d.mean - 1e-9 <= beta <= d.max_value + 1e-9


@pytest.mark.parametrize("p", [0.01, 0.1, 0.5, 0.9])
@pytest.mark.parametrize("k", [2, 4, 16, 2**16])
def test_bernoulli_closed_form(p, k):
    assert effective_size(DiscreteDistribution.bernoulli(p), k) == pytest.approx(bernoulli_closed_form(p, k), abs=1e-12)


# -- tail bound ---------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.lists(distributions(max_value=1.0, max_support=3), min_size=1, max_size=6), st.sampled_from([2, 4, 8]))
def test_tail_bound_from_effective_sizes(dists, k):
    b = math.fsum(effective_size(d, k) for d in dists)
    for c in (b + 1, b + 2):
        assert tail_probability([d.pairs() for d in dists], c) <= k ** -(c - b) + 1e-12


# -- split at one -----------------------------------------------------------


def test_split_constant_below_one():
    s = split_at_one(DiscreteDistribution.constant(0.5))
    assert s.truncated == DiscreteDistribution.constant(0.5)
    assert s.exceptional_mean == 0.0


def test_split_mixed_support():
    s = split_at_one(DiscreteDistribution.from_pairs([(0.5, 0.5), (3.0, 0.5)]))
    assert s.truncated.pairs() == [(0.0, 0.5), (0.5, 0.5)]
    assert s.exceptional_mean == 1.5
    assert s.truncated.mean + s.exceptional_mean == 1.75


def test_split_all_exceptional():
    s = split_at_one(DiscreteDistribution.constant(2.0))
    assert s.truncated == DiscreteDistribution.constant(0.0)
    assert s.exceptional_mean == 2.0


@given(distributions())
def test_split_invariants(d):
    s = split_at_one(d)
    assert np.all(s.truncated.values <= 1.0)
    assert s.exceptional_mean == pytest.approx(math.fsum(v * p for v, p in d.pairs() if v > 1.0), abs=1e-12)
    assert s.truncated.mean + s.exceptional_mean == pytest.approx(d.mean, abs=1e-12)


@given(distributions(max_value=3.0), st.floats(3.0, 50.0))
def test_split_commutes_with_scale_when_values_fit(d, factor):
    direct = split_at_one(scale(d, factor))
    assert direct.exceptional_mean == 0.0
    assert direct.truncated == scale(d, factor)


# -- scale ------------------------------------------------------------------


def test_scale_examples():
    assert scale(DiscreteDistribution.constant(2.0), 2.0) == DiscreteDistribution.constant(1.0)
    scaled = scale(DiscreteDistribution.bernoulli(0.25), 2.0)
    assert scaled.pairs() == [(0.0, 0.75), (0.5, 0.25)]


def test_scale_composition():
    x = DiscreteDistribution.from_pairs([(1.0, 0.6), (3.0, 0.4)])
    lhs = scale(scale(x, 2.0), 1.5)
    rhs = scale(x, 3.0)
    np.testing.assert_allclose(lhs.values, rhs.values, rtol=1e-15)
    np.testing.assert_array_equal(lhs.probs, rhs.probs)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_scale_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        scale(DiscreteDistribution.constant(1.0), bad)


# -- scaling grid -----------------------------------------------------------


def test_grid_single_unit_task():
    grid = build_scaling_grid([DiscreteDistribution.constant(1.0)], 1)
    assert (grid.lower, grid.upper) == (1.0, 1.0)
    assert grid.guesses == (1.0, 2.0)


def test_grid_two_tasks():
    grid = build_scaling_grid([DiscreteDistribution.constant(0.5), DiscreteDistribution.constant(2.0)], 2)
    assert (grid.lower, grid.upper) == (0.5, 4.0)
    assert grid.guesses == (0.5, 1.0, 2.0, 4.0, 8.0)


def test_grid_equal_means_covers_total():
    grid = build_scaling_grid([DiscreteDistribution.constant(3.0)] * 5, 5)
    assert grid.guesses[0] == 3.0 and grid.guesses[-1] >= 15.0


def test_grid_rejects_empty_and_all_zero():
    with pytest.raises(ValueError):
        build_scaling_grid([], 0)
    with pytest.raises(ValueError):
        build_scaling_grid([DiscreteDistribution.constant(0.0)], 1)


@given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=8))
def test_grid_brackets_every_possible_optimum(means):
    tasks = [DiscreteDistribution.constant(m) for m in means]
    grid = build_scaling_grid(tasks, len(tasks))
    g = np.array(grid.guesses)
    np.testing.assert_allclose(g[1:] / g[:-1], 2.0)
    assert g[0] == grid.lower and g[-1] >= grid.upper
    for opt in np.linspace(grid.lower, grid.upper, 17):
        assert np.any((g / 2 <= opt * (1 + 1e-12)) & (opt <= g * (1 + 1e-12)))
