"""Designer decomposition: state transformations and the two solvers."""

import pytest

import decseq
from decseq import (UnreachableBranchError, exact_cost, q1_p1, q2_p1,
                    reachable_beliefs, solve_p1, solve_p2)
from decseq.seq_decomp import state_belief

from conftest import ASYM, make_spec


def start_state(problem):
    return ((problem.prior, 1.0, 1.0),)


def test_q2_advances_and_conserves(asym_p1):
    state = q2_p1(start_state(asym_p1), asym_p1.channel1.row_pair(1))
    assert sum(m0 for _, m0, _ in state) == pytest.approx(1.0, abs=1e-12)
    assert sum(m1 for _, _, m1 in state) == pytest.approx(1.0, abs=1e-12)
    beliefs = [b for b, _, _ in state]
    assert beliefs == sorted(beliefs)


def test_q1_conditions_and_normalizes(asym_p1):
    state = q2_p1(start_state(asym_p1), asym_p1.channel1.row_pair(1))
    rule = decseq.StageRule(send=((0.5, 1.0), (0.0, 0.5)))
    low = q1_p1(state, rule, 1)
    # conditioning reweights to unit total mass across hypotheses
    assert sum(m0 + m1 for _, m0, m1 in low) == pytest.approx(1.0, abs=1e-12)
    assert all(b < 0.5 for b, _, _ in low)


def test_q1_unreachable_branch_raises(asym_p1):
    state = q2_p1(start_state(asym_p1), asym_p1.channel1.row_pair(1))
    never = decseq.StageRule(send=((0.999, 1.0), (0.0, 0.001)))
    with pytest.raises(UnreachableBranchError):
        q1_p1(state, never, 0)


def test_state_belief_recovers_prior(asym_p1):
    # before any conditioning the state belief is the prior itself
    st = tuple((b, asym_p1.prior * u0, (1 - asym_p1.prior) * u1)
               for b, u0, u1 in
               zip(*[(lv.atoms, lv.w0, lv.w1)
                     for lv in [reachable_beliefs(asym_p1.prior,
                                                  asym_p1.channel1, 1).level(1)]][0]))
    assert state_belief(st) == pytest.approx(asym_p1.prior, abs=1e-12)


def test_designer_matches_exact_evaluation(solved_battery_p1, solved_battery_p2):
    for prob, sol in solved_battery_p1 + solved_battery_p2:
        check = exact_cost((sol.o1, sol.o2), prob).total
        assert check == pytest.approx(sol.total, abs=1e-9)


def test_designer_beats_or_ties_immediate_heuristic(solved_battery_p2):
    for prob, sol in solved_battery_p2:
        o1 = decseq.immediate_sender_policy(prob)
        o2 = decseq.o2_best_response(o1, prob).policy
        heuristic = exact_cost((o1, o2), prob).total
        assert sol.total <= heuristic + 1e-9


def test_one_stage_variants_hand_values():
    # T1 = T2 = 1.  The wait-then-sample receiver may decide on the message
    # alone; the interleaved receiver's single observation is part of the
    # step that delivers the message.  Both values check out by hand.
    p1 = decseq.load_problem_spec(make_spec(variant="P1", t1=1, t2=1, **ASYM))
    p2 = decseq.load_problem_spec(make_spec(variant="P2", t1=1, t2=1, **ASYM))
    v1 = solve_p1(p1).total
    v2 = solve_p2(p2).total
    assert v1 == pytest.approx(0.2527, abs=1e-9)
    assert v2 == pytest.approx(0.2698, abs=1e-9)
    # the optional observation can only help
    assert v1 <= v2 + 1e-12


def test_variants_differ_on_longer_horizons(asym_p1, asym_p2):
    # interleaving has observer 2 pay for early observations; on this
    # instance the two communication patterns price differently
    v1 = solve_p1(asym_p1).total
    v2 = solve_p2(asym_p2).total
    assert abs(v1 - v2) > 1e-6


def test_solver_rejects_wrong_variant(sym02_p1, sym02_p2):
    with pytest.raises(decseq.ProblemSpecError):
        solve_p2(sym02_p1)
    with pytest.raises(decseq.ProblemSpecError):
        solve_p1(sym02_p2)


def test_sym02_known_optimum(sym02_p1, sym02_p2):
    # hand-checkable: send after one observation, then the receiver samples
    assert solve_p1(sym02_p1).total == pytest.approx(0.27, abs=1e-9)
    assert solve_p2(sym02_p2).total == pytest.approx(0.27, abs=1e-9)


def test_solution_reports_search_size(sym02_p2):
    sol = solve_p2(sym02_p2)
    assert sol.nodes > 0
    assert sol.partitions_tried >= sol.nodes
