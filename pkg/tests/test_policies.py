"""Policy containers, threshold extraction, JSON round-trips."""

import json

import pytest

import decseq
from decseq import (BLANK, O1Policy, O2Policy, StageRule, StructureViolation,
                    TerminalRule, extract_thresholds, pair_from_dict,
                    pair_to_dict, subjective_update)


def test_stage_rule_classify():
    rule = StageRule(send=((0.6, 1.0), (0.0, 0.4)))
    assert rule.classify(0.2) == 1
    assert rule.classify(0.8) == 0
    assert rule.classify(0.5) == BLANK
    assert rule.n_messages == 2


def test_terminal_rule_covers_everything():
    term = TerminalRule(cuts=(0.5,))
    assert term.classify(0.2) == 1
    assert term.classify(0.9) == 0
    # a terminal rule never stays silent
    assert term.classify(0.5) in (0, 1)


def test_ternary_ordering_low_belief_high_symbol():
    term = TerminalRule(cuts=(0.3, 0.7))
    assert term.classify(0.1) == 2
    assert term.classify(0.5) == 1
    assert term.classify(0.9) == 0


def test_extract_thresholds_send_regions():
    labeled = [(0.1, 1), (0.3, 1), (0.5, BLANK), (0.7, 0), (0.9, 0)]
    rule = extract_thresholds(labeled, 2)
    assert rule.classify(0.2) == 1
    assert rule.classify(0.5) == BLANK
    assert rule.classify(0.8) == 0


def test_extract_thresholds_rejects_split_region():
    labeled = [(0.1, 1), (0.3, 0), (0.5, 1), (0.7, 0)]
    with pytest.raises(StructureViolation):
        extract_thresholds(labeled, 2)


def test_extract_thresholds_rejects_out_of_order_symbols():
    # symbol 0 must sit at higher beliefs than symbol 1
    labeled = [(0.1, 0), (0.5, BLANK), (0.9, 1)]
    with pytest.raises(StructureViolation):
        extract_thresholds(labeled, 2)


def test_extract_thresholds_terminal_has_no_blank():
    labeled = [(0.1, 1), (0.9, 0)]
    term = extract_thresholds(labeled, 2, terminal=True)
    assert term.classify(0.5) in (0, 1)
    with pytest.raises(StructureViolation):
        extract_thresholds([(0.1, 1), (0.5, BLANK), (0.9, 0)], 2, terminal=True)


def test_subjective_update_total_map():
    rows = ((0.8, 0.2), (0.2, 0.8))
    moved = subjective_update(0.5, 0, rows, (0.3, 0.7))
    assert moved == pytest.approx((0.5 * 0.8 * 0.3)
                                  / (0.5 * 0.8 * 0.3 + 0.5 * 0.2 * 0.7))
    # subjectively impossible evidence leaves the belief where it was
    frozen = subjective_update(0.4, None, None, (0.0, 0.0))
    assert frozen == 0.4


def test_policy_json_round_trip(sym02_p2):
    sol = decseq.solve_p2(sym02_p2)
    doc = pair_to_dict(sol.o1, sol.o2)
    # survives an actual serialization, not just dict identity
    o1, o2 = pair_from_dict(json.loads(json.dumps(doc)))
    assert o1 == sol.o1
    assert o2 == sol.o2


def test_o1_policy_stagewise_message(sym02_p1):
    sol = decseq.solve_p1(sym02_p1)
    assert sol.o1.horizon == sym02_p1.t1
    z = sol.o1.message(1, 0.2)
    assert z in tuple(range(sol.o1.n_messages)) + (BLANK,)
    # the terminal stage can never stay silent
    assert sol.o1.message(sym02_p1.t1, 0.5) in range(sol.o1.n_messages)
    with pytest.raises(decseq.ProblemSpecError):
        sol.o1.message(sym02_p1.t1 + 1, 0.5)


def test_message_factor_total_map(sym02_p2):
    sol = decseq.solve_p2(sym02_p2)
    # out-of-range stages and zero-mass symbols read as uninformative
    assert sol.o2.message_factor(99, 0) == (1.0, 1.0)
    assert sol.o2.message_factor(1, BLANK) == (1.0, 1.0)


def test_o2_policy_rule_shapes(sym02_p2):
    sol = decseq.solve_p2(sym02_p2)
    o2 = sol.o2
    assert len(o2.blank_rules) == sym02_p2.t1 - 1
    # last post-message rule forces a declaration
    w1, w2 = o2.wald_rules[-1]
    assert w1 >= w2
    assert o2.max_observations == sym02_p2.t2


def test_build_message_model_conditional_factors(sym02_p1):
    stage = StageRule(send=((0.9, 1.0), (0.0, 0.1)))
    term = TerminalRule(cuts=(0.5,))
    o1 = O1Policy(stages=(stage,), terminal=term, n_messages=2)
    model = decseq.build_message_model(o1, sym02_p1)
    assert len(model) == sym02_p1.t1
    # stage 1 always stays blank under this rule
    assert model[0][BLANK] == pytest.approx((1.0, 1.0))
    # stage 2 factors are conditioned on that blank prefix and sum to one
    for h in range(2):
        assert sum(f[h] for f in model[1].values()) == pytest.approx(1.0)
