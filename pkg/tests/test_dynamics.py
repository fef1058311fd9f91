import numpy as np
import pytest

from anticoord.dynamics import (
    Action,
    ConvergenceError,
    Profile,
    initial_profile,
    run,
    run_selection_rule,
    run_staged,
    step,
)
from anticoord.instance import Instance, child_seed, draw_well_behaved_c, fig1
from helpers import random_partition, random_subset, random_uniform_instance, random_wb_instance, rng_for
from reference import ONE, UND, ZERO, reference_run, reference_selection_rule

_REF_STATE = {Action.ZERO: ZERO, Action.ONE: ONE, Action.UNDECIDED: UND}


def assert_matches_reference(inst, control):
    trace = run(inst, control)
    ref = reference_run(inst.n0, inst.n1, inst.edges, inst.c, control)
    assert len(trace.steps) == len(ref)
    for prof, ref_state in zip(trace.steps, ref):
        got = {i: _REF_STATE[prof.action(i)] for i in range(1, inst.n + 1)}
        assert got == ref_state


def test_action_ceil_floor():
    assert Action.ZERO.ceil == 0 and Action.ZERO.floor == 0
    assert Action.ONE.ceil == 1 and Action.ONE.floor == 1
    assert Action.UNDECIDED.ceil == 1 and Action.UNDECIDED.floor == 0


def test_profile_requires_controlled_zero():
    with pytest.raises(ValueError):
        Profile(actions=(Action.UNDECIDED, Action.ONE), controlled=frozenset({1}))


def test_step_fig1_first_update():
    f = fig1()
    after = step(f, initial_profile(f, {3, 4}))
    assert after.zeros == frozenset({3, 4})
    assert after.ones == frozenset({6, 7, 8})
    assert after.undecided == frozenset({1, 2, 5})


def test_step_no_control_keeps_all_undecided():
    f = fig1()
    after = step(f, initial_profile(f))
    assert after.undecided == frozenset(range(1, 9))


def test_step_dominance_solvable_star():
    # center 1 with three leaves; c_1 * 3 < 1 forces the preferred action
    star = Instance(n0=1, n1=3, edges=((1, 2), (1, 3), (1, 4)), c=(0.2, 0.5, 0.5, 0.5))
    after = step(star, initial_profile(star))
    assert after.action(1) is Action.ONE


def test_step_dimension_mismatch():
    f = fig1()
    with pytest.raises(ValueError, match="profile has"):
        step(f, Profile(actions=(Action.UNDECIDED,) * 4))


def test_run_unknown_control_agent():
    with pytest.raises(ValueError, match="unknown agents"):
        run(fig1(), {99})


def test_run_fig1_examples():
    f = fig1()
    t = run(f, {3, 4})
    assert t.converged_at == 2
    assert t.final.zeros == frozenset({3, 4})
    assert t.final.ones == frozenset({6, 7, 8})
    t_empty = run(f)
    assert t_empty.converged_at == 1
    assert t_empty.final.undecided == frozenset(range(1, 9))
    t1 = run(f, {1})
    assert t1.final.zeros == frozenset({1, 2, 3, 4})
    assert t1.final.ones == frozenset({5, 6, 7, 8})


def test_run_fig1_cascade_order():
    # agent 3 flips first (floor-sum 2, 0.57*2 > 1), then 4, then 5 -> one, then 2
    t = run(fig1(), {1})
    first_zero = {}
    for t_idx, zs in enumerate(t.zero_sets):
        for a in zs:
            first_zero.setdefault(a, t_idx)
    assert first_zero[3] < first_zero[4] < first_zero[2]


def test_run_matches_reference_on_examples():
    f = fig1()
    for control in [set(), {1}, {3, 4}, {2}, {1, 2, 3, 4}, {5}, {6, 2}]:
        assert_matches_reference(f, control)


def test_run_matches_reference_randomized():
    rng = rng_for(10)
    for _ in range(150):
        inst = random_uniform_instance(rng)
        control = random_subset(rng, range(1, inst.n + 1), p=0.3)
        assert_matches_reference(inst, control)


def test_trace_format_lines():
    t = run(fig1(), {3, 4})
    assert t.format_lines() == [
        "t=0 zeros=[3,4] ones=[]",
        "t=1 zeros=[3,4] ones=[6,7,8]",
        "t=2 zeros=[3,4] ones=[6,7,8]",
    ]


def test_commitment_and_convergence_bound_randomized():
    rng = rng_for(11)
    for _ in range(200):
        inst = random_uniform_instance(rng)
        control = random_subset(rng, range(1, inst.n + 1), p=0.25)
        trace = run(inst, control)
        assert trace.converged_at <= inst.n + 1
        for agent in range(1, inst.n + 1):
            seq = [p.action(agent) for p in trace.steps]
            for prev, cur in zip(seq, seq[1:]):
                if prev is not Action.UNDECIDED:
                    assert cur is prev
        for prev, cur in zip(trace.zero_sets, trace.zero_sets[1:]):
            assert prev <= cur
        for prev, cur in zip(trace.one_sets, trace.one_sets[1:]):
            assert prev <= cur


def test_alternating_cascade_parity():
    # one-sided control on well-behaved instances: new zeros only in S0 on
    # even steps, new ones only in S1 on odd steps; final sets stay one-sided
    rng = rng_for(12)
    for _ in range(100):
        inst = random_wb_instance(rng)
        control = random_subset(rng, inst.s0, p=0.4)
        trace = run(inst, control)
        s0, s1 = set(inst.s0), set(inst.s1)
        assert trace.final.zeros <= s0
        assert trace.final.ones <= s1
        for t in range(1, len(trace.steps)):
            new_zeros = trace.zero_sets[t] - trace.zero_sets[t - 1]
            new_ones = trace.one_sets[t] - trace.one_sets[t - 1]
            if new_zeros:
                assert new_zeros <= s0 and t % 2 == 0
            if new_ones:
                assert new_ones <= s1 and t % 2 == 1


def test_staged_single_cell_equals_run():
    f = fig1()
    a = run_staged(f, [{3, 4}])
    b = run(f, {3, 4})
    assert a.steps == b.steps
    assert a.converged_at == b.converged_at


def test_staged_fig1_examples():
    f = fig1()
    staged = run_staged(f, [{3}, {4}])
    assert staged.final.zeros == frozenset({3, 4})
    assert staged.final.ones == frozenset({6, 7, 8})
    assert staged.final.actions == run(f, {3, 4}).final.actions
    assert run_staged(f, [{1}, {3}]).final.zeros == run(f, {1, 3}).final.zeros == frozenset({1, 2, 3, 4})


def test_staged_rejects_overlap():
    with pytest.raises(ValueError, match="overlaps"):
        run_staged(fig1(), [{1, 2}, {2}])


def test_staged_equivalence_randomized():
    rng = rng_for(13)
    for _ in range(150):
        inst = random_wb_instance(rng)
        control = random_subset(rng, inst.s0, p=0.5)
        cells = random_partition(rng, control)
        staged = run_staged(inst, cells)
        direct = run(inst, control)
        assert staged.final.actions == direct.final.actions
        assert staged.final.controlled == direct.final.controlled


def test_staged_zero_one_sets_monotone():
    rng = rng_for(14)
    for _ in range(50):
        inst = random_wb_instance(rng)
        cells = random_partition(rng, random_subset(rng, inst.s0, p=0.5))
        trace = run_staged(inst, cells)
        for prev, cur in zip(trace.zero_sets, trace.zero_sets[1:]):
            assert prev <= cur
        for prev, cur in zip(trace.one_sets, trace.one_sets[1:]):
            assert prev <= cur
        last_injection = trace.injections[-1][0]
        assert trace.converged_at - last_injection <= inst.n


def test_selection_rule_empty_tail_matches_staged():
    rng = rng_for(15)
    for _ in range(50):
        inst = random_wb_instance(rng)
        cells = random_partition(rng, random_subset(rng, inst.s0, p=0.5))
        rule = run_selection_rule(inst, cells, set())
        staged = run_staged(inst, cells)
        assert rule.final.zeros == staged.final.zeros


def test_selection_rule_requires_well_behaved():
    f = fig1()
    bad = f.with_c((0.1,) * 8)
    with pytest.raises(ValueError, match="well-behaved"):
        run_selection_rule(bad, [{3}], {4})


def test_selection_rule_rejects_bad_sets():
    f = fig1()
    with pytest.raises(ValueError, match="S0"):
        run_selection_rule(f, [{5}], set())
    with pytest.raises(ValueError, match="S0"):
        run_selection_rule(f, [{1}], {6})
    with pytest.raises(ValueError, match="overlaps"):
        run_selection_rule(f, [{3}], {3})


def test_selection_rule_golden_draws_and_reference():
    # frozen final zero-sets for 10 fixed well-behaved draws on the fig1
    # topology, partition [{3}], tail {4}; cross-checked against the
    # straight-line re-implementation of the staged+rule process
    golden = [
        {1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4},
        {1, 2, 3, 4}, {3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4},
    ]
    f = fig1()
    for k, want in enumerate(golden):
        rng = np.random.default_rng(child_seed(5, k))
        wb = draw_well_behaved_c(f, rng)
        got = run_selection_rule(wb, [{3}], {4}).final.zeros
        ref = reference_selection_rule(wb.n0, wb.n1, wb.edges, wb.c, [[3]], [4])
        assert got == frozenset(want)
        assert got == frozenset(ref)


def test_selection_rule_zero_influence_guard():
    # agents whose one-step influence stays 0 are never added by the rule
    # (their commit condition c*0 > 1 is impossible in the real dynamics
    # too): two disjoint K_{2,2} blocks, all control in the first block
    inst = Instance(
        n0=4,
        n1=4,
        edges=((1, 5), (1, 6), (2, 5), (2, 6), (3, 7), (3, 8), (4, 7), (4, 8)),
        c=(0.6,) * 8,
    )
    rng = rng_for(16)
    for _ in range(50):
        wb = draw_well_behaved_c(inst, rng)
        trace = run_selection_rule(wb, [{1}], {2})
        assert not trace.final.zeros & {3, 4}
        assert not trace.final.ones & {7, 8}


def test_trace_injections_recorded():
    t = run_staged(fig1(), [{3}, {4}])
    assert t.injections[0] == (0, frozenset({3}))
    assert t.injections[1][1] == frozenset({4})
