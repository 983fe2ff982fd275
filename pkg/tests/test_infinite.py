"""Deadline-removal limits and epsilon-optimal pair construction."""

import dataclasses

import numpy as np
import pytest

import decseq
from decseq import (BLANK, CertificationError, ProblemSpecError,
                    epsilon_optimal_pair, solve_wald_infinite,
                    truncation_bound, value_iterate_o1, value_iterate_o2)

from conftest import ASYM, make_spec


def test_truncation_bound_formulas(asym_p2):
    costs = asym_p2.costs
    for p in (0.0, 0.01, 0.3):
        o2 = truncation_bound("o2", p, costs)
        assert o2.epsilon == costs.max_loss * p
        assert o2.formula == "L*P"
        o1 = truncation_bound("o1", p, costs, t2=7)
        assert o1.epsilon == (costs.c2 * 7 + costs.max_loss) * p
        assert o1.formula == "(c2*T2+L)*P"


def test_truncation_bound_validation(asym_p2):
    with pytest.raises(ProblemSpecError):
        truncation_bound("o1", 0.1, asym_p2.costs)          # t2 missing
    with pytest.raises(ProblemSpecError):
        truncation_bound("o3", 0.1, asym_p2.costs)
    with pytest.raises(ProblemSpecError):
        truncation_bound("o2", 1.5, asym_p2.costs)


def test_receiver_limit_monotone_and_converged(sym02_p1, sym02_p2):
    for prob in (sym02_p1, sym02_p2):
        solver = decseq.solve_p1 if prob.variant == "P1" else decseq.solve_p2
        sol = solver(prob)
        lim = value_iterate_o2(sol.o1, prob)
        assert lim.converged
        assert lim.max_increase <= 0.0
        # wait-then-sample: no pre-message decision stages
        if prob.variant == "P1":
            assert lim.blank_thresholds == {}
        else:
            assert set(lim.blank_thresholds) == set(range(1, prob.t1))


def test_receiver_limit_matches_pure_stationary_tail(sym02_p1):
    # the post-message problem is the plain one-observer stationary one
    sol = decseq.solve_p1(sym02_p1)
    lim = value_iterate_o2(sol.o1, sym02_p1)
    pure = solve_wald_infinite(sym02_p1.channel2, sym02_p1.costs)
    assert lim.stationary_thresholds[0] == pytest.approx(pure.w1, abs=1e-9)
    assert lim.stationary_thresholds[1] == pytest.approx(pure.w2, abs=1e-9)
    assert float(np.abs(lim.wald.values - pure.values).max()) < 1e-6


def test_receiver_limit_rejects_nonstationary_sender(sym02_p2):
    stages = (decseq.StageRule(send=((0.6, 1.0), (0.0, 0.4))),)
    term = decseq.TerminalRule(cuts=(0.5,))
    o1 = decseq.O1Policy(stages=stages, terminal=term, n_messages=2)
    short = dataclasses.replace(sym02_p2, t1=3, t2=3)
    with pytest.raises(ProblemSpecError):
        value_iterate_o2(o1, short)  # horizon mismatch
    mixed = decseq.O1Policy(
        stages=(decseq.StageRule(send=((0.6, 1.0), (0.0, 0.4))),
                decseq.StageRule(send=((0.7, 1.0), (0.0, 0.3)))),
        terminal=term, n_messages=2)
    with pytest.raises(ProblemSpecError):
        value_iterate_o2(mixed, short)


def stationary_anchor(problem):
    sol = decseq.solve_p1(problem)
    first = dict(sol.o2.message_model[0])
    return dataclasses.replace(
        sol.o2, message_model=tuple(first for _ in range(problem.t1)))


def test_sender_limit_converges(sym02_p1):
    lim = value_iterate_o1(stationary_anchor(sym02_p1), sym02_p1)
    assert lim.converged
    assert lim.max_increase <= 0.0
    a, b, c, d = lim.four_thresholds
    assert a <= b <= c <= d
    # removing the deadline can only improve on sending immediately
    send_now = min(sym02_p1.prior * aa + (1 - sym02_p1.prior) * bb
                   for aa, bb in lim.affines)
    at_prior = float(np.interp(sym02_p1.prior, lim.grid, lim.values))
    assert at_prior <= send_now + 1e-12


def test_sender_limit_validation(sym02_p1, sym02_p2, asym_p1):
    anchor = stationary_anchor(sym02_p1)
    with pytest.raises(ProblemSpecError):
        value_iterate_o1(anchor, sym02_p2)          # interleaved variant
    sol = decseq.solve_p1(sym02_p1)
    with pytest.raises(ProblemSpecError):
        value_iterate_o1(sol.o2, sym02_p1)          # time-varying arrival model
    unbounded = dataclasses.replace(
        anchor, wald_rules=anchor.wald_rules[:-1] + ((0.1, 0.9),))
    with pytest.raises(ProblemSpecError):
        value_iterate_o1(unbounded, sym02_p1)
    lim2 = value_iterate_o2(decseq.solve_p1(asym_p1).o1, asym_p1)
    with pytest.raises(ProblemSpecError):
        value_iterate_o1(lim2, asym_p1)             # no bounded stopping time


def test_sender_limit_rejects_informative_blank(sym02_p1):
    anchor = stationary_anchor(sym02_p1)
    first = dict(anchor.message_model[0])
    first[BLANK] = (0.2, 0.1)
    skew = dataclasses.replace(
        anchor, message_model=tuple(first for _ in range(sym02_p1.t1)))
    with pytest.raises(ProblemSpecError):
        value_iterate_o1(skew, sym02_p1)


def test_epsilon_pair_succeeds_with_zero_tail(sym02_p1):
    pair = epsilon_optimal_pair(sym02_p1, 0.5)
    assert pair.epsilon <= 0.5
    for cert in pair.certificates:
        assert cert.epsilon <= 0.25
    # the certified pair really evaluates to its reported cost
    finite = dataclasses.replace(sym02_p1, t1=pair.horizon, t2=pair.horizon)
    assert decseq.exact_cost((pair.o1, pair.o2), finite).total == pytest.approx(
        pair.cost, abs=1e-9)


def test_epsilon_pair_fails_cleanly():
    spec = make_spec(variant="P1", c2=0.002)
    prob = decseq.load_problem_spec(spec)
    with pytest.raises(CertificationError) as exc:
        epsilon_optimal_pair(prob, 0.001, max_horizon=2)
    best = exc.value.best
    assert best.horizon == 2
    assert best.epsilon > 0.001


def test_epsilon_pair_rejects_bad_epsilon(sym02_p1):
    with pytest.raises(ProblemSpecError):
        epsilon_optimal_pair(sym02_p1, 0.0)
