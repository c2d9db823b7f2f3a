import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochmakespan import DiscreteDistribution, ResourceLimitError, split_at_one
from stochmakespan.evaluation import (
    brute_force_opt,
    check_lambda_safe,
    check_lp_constraints,
    evaluate,
    evaluate_exact,
    evaluate_mc,
)
from stochmakespan.instances import gen_general_gap, gen_line_gap, gen_random
from stochmakespan.lp import LpRelaxation
from stochmakespan.setsystem import ExtendResult, SetSystemInstance, extend, materialize

from oracles import best_subset, expected_max_load

HALF = DiscreteDistribution.bernoulli(0.5)


def pairs_of(dists):
    return [d.pairs() for d in dists]


def test_single_deterministic_task():
    sys = SetSystemInstance.from_lists(1, [[0]])
    est = evaluate_exact([0], sys, [DiscreteDistribution.constant(2.5)])
    assert (est.mean, est.stderr, est.method) == (2.5, 0.0, "exact")
    assert evaluate_mc([0], sys, [DiscreteDistribution.constant(2.5)], samples=100, seed=9).mean == 2.5


def test_two_disjoint_halves():
    sys = SetSystemInstance.from_lists(2, [[0], [1]])
    assert evaluate_exact([0, 1], sys, [HALF, HALF]).mean == pytest.approx(0.75, abs=1e-15)
    est = evaluate_mc([0, 1], sys, [HALF, HALF], samples=10**5, seed=1)
    assert abs(est.mean - 0.75) <= 4 * est.stderr


def test_two_halves_sharing_a_resource():
    sys = SetSystemInstance.from_lists(2, [[0, 1]])
    assert evaluate_exact([0, 1], sys, [HALF, HALF]).mean == pytest.approx(1.0, abs=1e-15)


def test_empty_selection():
    sys = SetSystemInstance.from_lists(2, [[0, 1]])
    assert evaluate_exact([], sys, [HALF, HALF]).mean == 0.0


def test_outcome_cap():
    n = 21
    sys = SetSystemInstance.from_lists(n, [list(range(n))])
    dists = [HALF] * n
    with pytest.raises(ResourceLimitError):
        evaluate_exact(range(n), sys, dists)
    assert evaluate(range(n), sys, dists, samples=500).method == "monte-carlo"


def test_general_gap_all_tasks_unscaled():
    inst = gen_general_gap(4)
    est = evaluate_mc(range(16), inst.system(), inst.distributions, samples=10**5, seed=0)
    assert est.mean >= (1 - 1 / math.e) * 4 - 4 * est.stderr


def test_mc_is_reproducible_by_seed():
    inst = gen_random("tree", 10, seed=3)
    sys = inst.system()
    a = evaluate_mc(range(10), sys, inst.distributions, samples=3000, seed=12)
    b = evaluate_mc(range(10), sys, inst.distributions, samples=3000, seed=12)
    assert a == b


@pytest.mark.parametrize("seed", range(10))
def test_exact_matches_oracle_and_mc_converges(seed):
    inst = gen_random("line", 6, profile="discrete", seed=seed)
    sys = inst.system()
    subset = list(range(0, 6, 2)) + [1]
    exact = evaluate_exact(subset, sys, inst.distributions)
    oracle = expected_max_load(subset, [l.tolist() for l in sys.incidence], pairs_of(inst.distributions))
    assert exact.mean == pytest.approx(oracle, abs=1e-12)
    mc = evaluate_mc(subset, sys, inst.distributions, samples=10**5, seed=seed)
    assert abs(mc.mean - exact.mean) <= 5 * mc.stderr + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 7))
def test_adding_a_task_never_decreases_makespan(seed, extra):
    inst = gen_random("tree", 8, profile="discrete", seed=seed)
    sys = inst.system()
    rng = np.random.default_rng(seed)
    base = sorted(rng.choice(8, size=3, replace=False).tolist())
    bigger = sorted(set(base) | {extra})
    assert evaluate_exact(bigger, sys, inst.distributions).mean >= evaluate_exact(base, sys, inst.distributions).mean - 1e-12


# -- brute force ---------------------------------------------------------------------


def test_brute_force_full_set():
    inst = gen_random("line", 5, seed=0)
    best, _ = brute_force_opt(inst.system(), inst.distributions, 5)
    assert best == (0, 1, 2, 3, 4)


def test_brute_force_picks_smaller_mean():
    sys = SetSystemInstance.from_lists(2, [[0], [1]])
    best, est = brute_force_opt(sys, [DiscreteDistribution.constant(1.0), DiscreteDistribution.constant(2.0)], 1)
    assert best == (0,) and est.mean == 1.0


def test_brute_force_subset_cap():
    sys = SetSystemInstance.from_lists(40, [list(range(40))])
    with pytest.raises(ResourceLimitError):
        brute_force_opt(sys, [HALF] * 40, 20)


@pytest.mark.parametrize("seed", range(5))
def test_brute_force_matches_naive_enumerator(seed):
    inst = gen_random("line", 6, seed=seed)
    sys = inst.system()
    incidence = [l.tolist() for l in sys.incidence]
    pairs = pairs_of(inst.distributions)
    best, est = brute_force_opt(sys, inst.distributions, 3)
    naive_best, naive_value = best_subset(6, 3, lambda s: expected_max_load(s, incidence, pairs))
    assert est.mean == pytest.approx(naive_value, abs=1e-12)
    # ties may be broken differently only if values agree to rounding
    assert best == naive_best or evaluate_exact(naive_best, sys, inst.distributions).mean == pytest.approx(est.mean, abs=1e-12)


def test_brute_force_beats_random_subsets():
    inst = gen_random("tree", 9, seed=7)
    sys = inst.system()
    _, est = brute_force_opt(sys, inst.distributions, 4)
    rng = np.random.default_rng(0)
    for _ in range(20):
        subset = rng.choice(9, size=4, replace=False)
        assert est.mean <= evaluate(subset, sys, inst.distributions).mean + 1e-12


# -- lambda safety checker ------------------------------------------------------------


def test_lambda_checker_accepts_trivial_cover_on_lines():
    sys = gen_random("line", 7, seed=1).system()
    everything = np.arange(sys.n_resources)
    result = ExtendResult(everything, everything, tuple(np.array([i]) for i in everything), 2)
    assert check_lambda_safe(sys, [0, 3], result)["passed"]


def test_lambda_checker_reports_witness():
    sys = materialize(gen_random("line", 7, seed=1).family)
    d = [i for i, l in enumerate(sys.incidence) if l.size][:1]
    good = extend(sys, d)
    broken = ExtendResult(good.dangerous, good.safe, tuple(np.zeros(0, np.int64) for _ in good.cover), good.lam)
    report = check_lambda_safe(sys, d, broken)
    assert not report["passed"]
    assert report["reason"] == "dangerous task not covered"
    assert report["witness"]["task"] in sys.incidence[d[0]].tolist()


# -- LP constraint checker --------------------------------------------------------------


def gap_relaxation(inst, b):
    return LpRelaxation.from_split([split_at_one(d) for d in inst.distributions], inst.t, b)


def test_lp_check_zero_vector():
    inst = gen_line_gap(2)
    report = check_lp_constraints(np.zeros(inst.t), gap_relaxation(inst, 4.0), inst.system())
    assert report["max_ratio"] == 0.0 and report["passed"]


def test_lp_check_line_gap_passes_with_b_four():
    inst = gen_line_gap(3)
    report = check_lp_constraints(np.ones(inst.t), gap_relaxation(inst, 4.0), inst.system(), mode="exhaustive")
    assert report["passed"] and report["checked"] == 2**8 - 1


def test_lp_check_detects_doubled_vector():
    inst = gen_line_gap(2)
    relax = gap_relaxation(inst, 1.0)
    sys = inst.system()
    tight = check_lp_constraints(np.ones(inst.t), relax, sys)
    y = np.ones(inst.t) / tight["max_ratio"]
    assert check_lp_constraints(y, relax, sys)["max_ratio"] == pytest.approx(1.0)
    doubled = check_lp_constraints(2 * y, relax, sys)
    assert not doubled["passed"] and doubled["max_ratio"] == pytest.approx(2.0)


def test_lp_check_exhaustive_requires_small_m():
    inst = gen_line_gap(4)
    with pytest.raises(ValueError):
        check_lp_constraints(np.ones(inst.t), gap_relaxation(inst, 4.0), inst.system())
    sampled = check_lp_constraints(np.ones(inst.t), gap_relaxation(inst, 4.0), inst.system(), mode="sampled", samples=50)
    assert sampled["passed"]
