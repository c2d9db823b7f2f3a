import numpy as np
import pytest

from stochmakespan import DiscreteDistribution, InternalConsistencyError, ValidationError, split_at_one
from stochmakespan.instances import gen_random
from stochmakespan.lp import LpRelaxation, solve_relaxation
from stochmakespan.rounding import (
    SolverConfig,
    assemble_and_round,
    class_count,
    class_scales,
    decompose,
    solve_end_to_end,
    trim_to_target,
)
from stochmakespan.setsystem import LineFamily, SetSystemInstance

STRUCTURAL = ("partition", "class_size", "fractional_class_load", "integral_class_load", "exceptional_budget")


def splits(dists):
    return [split_at_one(d) for d in dists]


@pytest.mark.parametrize("m, rounds", [(1, 0), (2, 1), (3, 2), (4, 2), (16, 3), (17, 4), (256, 4), (257, 5)])
def test_class_count(m, rounds):
    assert class_count(m) == rounds


def test_class_scales_are_capped():
    assert class_scales(1) == ([], 1)
    assert class_scales(2) == ([2], 4)
    assert class_scales(16) == ([2, 4, 16], 256)
    assert class_scales(5) == ([2, 4, 16], 25)


def test_decompose_zero_vector():
    inst = gen_random("line", 6, seed=0)
    sys = inst.system()
    dec = decompose(np.zeros(6), sys, splits(inst.distributions), 1.0)
    assert all(c.dangerous.size == 0 for c in dec.classes[:-1])
    assert dec.classes[-1].tasks.tolist() == list(range(6))
    assert dec.rho == class_count(sys.n_resources)


def test_decompose_heavy_resource_becomes_dangerous():
    # three unit tasks on resource 0 give load 3 > 2b with b = 1
    sys = SetSystemInstance.from_lists(4, [[0, 1, 2], [3]])
    dists = [DiscreteDistribution.constant(1.0)] * 3 + [DiscreteDistribution.constant(0.5)]
    dec = decompose(np.ones(4), sys, splits(dists), 1.0)
    first = dec.classes[0]
    assert first.k == 2 and first.dangerous.tolist() == [0]
    assert first.tasks.tolist() == [0, 1, 2]
    assert dec.classes[-1].tasks.tolist() == [3]


def test_decompose_threshold_is_strict():
    sys = SetSystemInstance.from_lists(2, [[0, 1], []])
    dec = decompose(np.ones(2), sys, splits([DiscreteDistribution.constant(1.0)] * 2), 1.0)
    # load exactly 2b is not dangerous
    assert dec.classes[0].dangerous.size == 0


def test_trim_prefers_large_y_then_small_mean_then_id():
    y = np.array([0.2, 0.9, 0.9, 0.5, 0.9])
    means = np.array([1.0, 2.0, 1.0, 0.1, 1.0])
    assert trim_to_target(np.arange(5), y, means, 2).tolist() == [2, 4]
    assert trim_to_target(np.array([3, 0]), y, means, 5).tolist() == [0, 3]


def _line_setup(seed, n=8, t=4, b=4.0):
    inst = gen_random("line", n, seed=seed)
    sys = inst.system()
    sp = splits(inst.distributions)
    lp = solve_relaxation(LpRelaxation.from_split(sp, t, b), sys)
    return inst, sys, sp, lp


def test_high_threshold_is_strict():
    inst = gen_random("line", 5, seed=1)
    sys = inst.system()
    sp = splits(inst.distributions)
    y = np.ones(5)
    dec = decompose(y, sys, sp, 4.0)
    at_one = assemble_and_round(dec, y, sys, sp, 5, alpha_bar=1.0, b=4.0, strict=False)
    assert at_one.n_high == 0
    at_four = assemble_and_round(dec, y, sys, sp, 5, alpha_bar=4.0, b=4.0, strict=False)
    assert at_four.n_high == 5 and at_four.chosen.tolist() == list(range(5))


def test_integral_full_selection():
    inst = gen_random("tree", 6, seed=2)
    sys = inst.system()
    sp = splits(inst.distributions)
    y = np.ones(6)
    sol = assemble_and_round(decompose(y, sys, sp, 4.0), y, sys, sp, 6, 4.0, 4.0, strict=False)
    assert sol.chosen.size == 6


@pytest.mark.parametrize("seed", range(20))
def test_small_line_instances_meet_every_bound(seed):
    inst = gen_random("line", 8, seed=seed % 5)
    sol = solve_end_to_end(inst.family, inst.distributions, 4, SolverConfig(seed=seed, samples=2000))
    assert sol.chosen.size == 4
    assert sol.raw_chosen.size >= 4
    for key in STRUCTURAL + ("cardinality", "detcost_lp_feasible"):
        assert sol.assertions[key]["passed"], (key, sol.assertions[key])


def test_strict_mode_raises_on_broken_decomposition():
    inst, sys, sp, lp = _line_setup(0)
    dec = decompose(lp.y, sys, sp, 4.0)
    # corrupt the partition by listing a task in two classes
    dec.classes[-1].tasks = np.union1d(dec.classes[-1].tasks, [0, 1])
    dec.classes[0].tasks = np.union1d(dec.classes[0].tasks, [0])
    with pytest.raises(InternalConsistencyError):
        assemble_and_round(dec, lp.y, sys, sp, 4, 4.0, 4.0, seed=0, strict=True)


# -- end to end -------------------------------------------------------------------


def test_single_task():
    sys = SetSystemInstance.from_lists(1, [[0]])
    d = DiscreteDistribution.from_pairs([(0.0, 0.4), (3.0, 0.6)])
    sol = solve_end_to_end(sys, [d], 1)
    assert sol.chosen.tolist() == [0]
    assert sol.estimate.mean == pytest.approx(d.mean)


def test_two_disjoint_unit_tasks_pick_one():
    fam = LineFamily(2, [[0, 0], [1, 1]])
    sol = solve_end_to_end(fam, [DiscreteDistribution.constant(1.0)] * 2, 1)
    assert sol.chosen.size == 1 and sol.estimate.mean == 1.0


def test_zero_mean_tasks_are_taken_first():
    sys = SetSystemInstance.from_lists(3, [[0, 1, 2]])
    dists = [DiscreteDistribution.constant(0.0), DiscreteDistribution.constant(1.0), DiscreteDistribution.constant(0.0)]
    sol = solve_end_to_end(sys, dists, 2)
    assert sol.chosen.tolist() == [0, 2] and sol.estimate.mean == 0.0
    sol = solve_end_to_end(sys, dists, 3)
    assert sol.chosen.tolist() == [0, 1, 2]


def test_argument_validation():
    sys = SetSystemInstance.from_lists(2, [[0, 1]])
    with pytest.raises(ValidationError):
        solve_end_to_end(sys, [DiscreteDistribution.constant(1.0)], 1)
    with pytest.raises(ValidationError):
        solve_end_to_end(sys, [DiscreteDistribution.constant(1.0)] * 2, 3)


def test_metadata_records_every_guess():
    inst = gen_random("tree", 8, seed=3)
    sol = solve_end_to_end(inst.family, inst.distributions, 4, SolverConfig(samples=1000))
    guesses = sol.metadata["guesses"]
    assert len(guesses) >= 2
    assert sol.metadata["guess"] in [g["guess"] for g in guesses if g["status"] == "solved"]
    solved = [g["estimate"] for g in guesses if g["status"] == "solved"]
    assert sol.estimate.mean == min(solved)


def test_solutions_are_deterministic_and_thread_independent():
    inst = gen_random("rectangles", 8, seed=4)
    cfg = SolverConfig(seed=7, samples=1000)
    a = solve_end_to_end(inst.family, inst.distributions, 4, cfg)
    b = solve_end_to_end(inst.family, inst.distributions, 4, cfg)
    c = solve_end_to_end(inst.family, inst.distributions, 4, SolverConfig(seed=7, samples=1000, threads=3))
    assert a.chosen.tolist() == b.chosen.tolist() == c.chosen.tolist()
    assert a.estimate == b.estimate == c.estimate


@pytest.mark.parametrize("kind", ["disks", "rectangles"])
def test_plane_families_solve(kind):
    inst = gen_random(kind, 8, seed=5)
    sol = solve_end_to_end(inst.family, inst.distributions, 3, SolverConfig(samples=1000))
    assert sol.chosen.size == 3
    assert all(sol.assertions[k]["passed"] for k in STRUCTURAL)
