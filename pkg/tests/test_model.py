"""Problem loading and validation."""

import pytest

import decseq
from decseq import ProblemSpecError, load_problem_spec

from conftest import make_spec


def test_round_trip_fields(sym02_p2):
    p = sym02_p2
    assert p.prior == 0.5
    assert p.t1 == 2 and p.t2 == 2
    assert p.variant == "P2"
    assert p.n_messages == 2
    assert p.costs.c1 == 0.1 and p.costs.c2 == 0.05
    assert p.costs.loss == ((0.0, 1.0), (1.0, 0.0))


def test_channel_rows_and_stationarity(asym_p1):
    ch = asym_p1.channel1
    assert ch.stationary
    r0, r1 = ch.row_pair(1)
    assert r0 == (0.7, 0.3) and r1 == (0.25, 0.75)
    # stationary channels serve any step index from the single table
    assert ch.row_pair(7) == ch.row_pair(1)


def test_nonstationary_channel_indexing():
    spec = make_spec()
    spec["channels"][0]["tables"] = [[[0.8, 0.2], [0.2, 0.8]],
                                     [[0.7, 0.3], [0.3, 0.7]]]
    p = load_problem_spec(spec)
    assert not p.channel1.stationary
    assert p.channel1.row_pair(2)[0] == (0.7, 0.3)


def test_max_loss(asym_p2):
    assert asym_p2.costs.max_loss == 1.2


@pytest.mark.parametrize("mutate, field", [
    (lambda s: s.update(prior=1.5), "prior"),
    (lambda s: s.update(prior=-0.1), "prior"),
    (lambda s: s["costs"].update(c1=-1.0), "c1"),
    (lambda s: s["costs"].update(c2=0.0), "c2"),
    (lambda s: s["horizons"].update(T1=0), "T1"),
    (lambda s: s.update(variant="P3"), "variant"),
    (lambda s: s.update(M=1), "M"),
])
def test_rejects_bad_fields(mutate, field):
    spec = make_spec()
    mutate(spec)
    with pytest.raises(ProblemSpecError):
        load_problem_spec(spec)


def test_rejects_non_stochastic_rows():
    spec = make_spec(ch1=[[0.9, 0.2], [0.2, 0.8]])
    with pytest.raises(ProblemSpecError):
        load_problem_spec(spec)


def test_rejects_interleaved_with_short_receiver():
    spec = make_spec(variant="P2", t1=3, t2=2)
    with pytest.raises(ProblemSpecError):
        load_problem_spec(spec)


def test_diagonal_loss_must_not_dominate():
    # declaring wrong must cost at least as much as declaring right
    spec = make_spec(loss=[[2.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ProblemSpecError):
        load_problem_spec(spec)


def test_terminal_cost():
    costs = decseq.Costs(c1=0.1, c2=0.05, loss=((0.0, 1.0), (1.0, 0.0)))
    assert decseq.terminal_cost(0, 0.25, costs) == pytest.approx(0.75)
    assert decseq.terminal_cost(1, 0.25, costs) == pytest.approx(0.25)


def test_declare_boundary_shifts_with_losses():
    skew = decseq.Costs(c1=0.1, c2=0.05, loss=((0.0, 1.2), (0.9, 0.0)))
    b = skew.declare_boundary
    # boundary equates the two declaration losses
    assert decseq.terminal_cost(0, b, skew) == pytest.approx(
        decseq.terminal_cost(1, b, skew))
    assert b != 0.5
