"""Infinite-horizon limits and epsilon-optimal pairs.

The receiver limit removes the receiver's deadline: its post-message
problem becomes the stationary sampling problem and the finitely many
pre-message stages are re-solved against each successive tail iterate, so
the whole iterate family inherits the pointwise monotone convergence of
the stationary value iteration.  The sender limit removes the sender's
deadline against a receiver with a bounded stopping time, which keeps the
send branches time-invariant affine curves.  Epsilon-optimal pairs come
from solving growing finite horizons until exact tail probabilities
certify the truncation bounds.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import best_response as _br
from .errors import CertificationError, ProblemSpecError
from .policies import BLANK, O2Policy, build_message_model, subjective_update
from .seq_decomp import solve_p1, solve_p2
from .simulate import exact_cost
from .wald import (GRID_SIZE_DEFAULT, VI_MAX_ITER_DEFAULT, VI_TOL_DEFAULT,
                   StationaryWald, thresholds_from_labels, wald_vi_iterates)

__all__ = ["TruncationCertificate", "O2InfiniteSolution", "O1InfiniteSolution",
           "EpsilonPair", "value_iterate_o2", "value_iterate_o1",
           "truncation_bound", "epsilon_optimal_pair"]


@dataclass
class TruncationCertificate:
    role: str                 # "O1" or "O2"
    horizon: int | None       # truncation horizon the tail was measured at
    tail_prob: float
    epsilon: float
    formula: str              # "L*P" or "(c2*T2+L)*P"

    def to_dict(self):
        return {"role": self.role, "horizon": self.horizon,
                "tail_prob": self.tail_prob, "epsilon": self.epsilon,
                "formula": self.formula}


def truncation_bound(policy_role, tail_prob, costs, t2=None, horizon=None):
    """Cost a policy can lose to truncation, from its tail stopping mass."""
    role = str(policy_role).upper()
    if role not in ("O1", "O2"):
        raise ProblemSpecError("policy_role", f"unknown role {policy_role!r}")
    if not 0.0 <= tail_prob <= 1.0:
        raise ProblemSpecError("tail_prob", f"{tail_prob} outside [0, 1]")
    if role == "O2":
        eps = costs.max_loss * tail_prob
        formula = "L*P"
    else:
        if t2 is None or t2 < 0:
            raise ProblemSpecError("t2", "the sender bound needs the receiver horizon")
        eps = (costs.c2 * t2 + costs.max_loss) * tail_prob
        formula = "(c2*T2+L)*P"
    return TruncationCertificate(role=role, horizon=horizon,
                                 tail_prob=tail_prob, epsilon=eps,
                                 formula=formula)


# ---------------------------------------------------------------------------
# receiver limit


@dataclass
class O2InfiniteSolution:
    """Converged receiver values with no deadline of its own.

    ``wald`` is the stationary post-message solution; ``blank_values`` and
    ``blank_thresholds`` cover the pre-message stages (empty for the
    wait-then-sample variant).  The policy has no bounded stopping time.
    """

    grid: np.ndarray
    wald: StationaryWald
    blank_values: dict
    blank_thresholds: dict
    message_model: tuple
    n_iter: int
    deltas: list
    max_increase: float
    converged: bool

    @property
    def stationary_thresholds(self):
        return (self.wald.w1, self.wald.w2)


def _require_stationary(problem):
    if not problem.channel1.stationary or not problem.channel2.stationary:
        raise ProblemSpecError("channels", "infinite-horizon limits need "
                                           "stationary channels")


def value_iterate_o2(o1, problem, grid_size=GRID_SIZE_DEFAULT,
                     tol=VI_TOL_DEFAULT, max_iter=VI_MAX_ITER_DEFAULT):
    """Receiver value iteration with the deadline removed.

    The sender keeps its finite deadline; each outer iterate solves the
    pre-message stages exactly against the current post-message tail
    iterate, so every tracked value is pointwise non-increasing across
    iterations.
    """
    _require_stationary(problem)
    if o1.horizon != problem.t1:
        raise ProblemSpecError("o1", f"sender horizon {o1.horizon} != T1 {problem.t1}")
    if len(set(o1.stages)) > 1:
        raise ProblemSpecError("o1", "sender stage rules must be stationary")
    costs = problem.costs
    rows = problem.channel2.row_pair(1)
    n_y = len(rows[0])
    model = build_message_model(o1, problem)
    grid = np.linspace(0.0, 1.0, grid_size)
    tc0 = grid * costs.loss[0][0] + (1.0 - grid) * costs.loss[0][1]
    tc1 = grid * costs.loss[1][0] + (1.0 - grid) * costs.loss[1][1]

    blank_stages = list(range(1, problem.t1)) if problem.variant == "P2" else []

    def blank_pass(wald_values, prev_blank):
        """One exact backward pass over the pre-message stages."""
        out = {}
        for t in reversed(blank_stages):
            cont = np.full_like(grid, costs.c2)
            for z, (f0z, f1z) in model[t].items():
                for y in range(n_y):
                    f0 = f0z * rows[0][y]
                    f1 = f1z * rows[1][y]
                    den = grid * f0 + (1.0 - grid) * f1
                    with np.errstate(invalid="ignore", divide="ignore"):
                        nb = np.where(den > 0.0, grid * f0 / np.where(den > 0.0, den, 1.0), 0.0)
                    tail = out[t + 1] if z == BLANK else wald_values
                    cont += np.where(den > 0.0, den * np.interp(nb, grid, tail), 0.0)
            out[t] = np.minimum(np.minimum(tc0, tc1), cont)
        return out

    gen = wald_vi_iterates(rows, costs, grid)
    deltas = []
    max_increase = -np.inf
    prev_w = None
    prev_blank = None
    converged = False
    n_iter = 0
    w = None
    blank = {}
    for w, dw in gen:
        n_iter += 1
        blank = blank_pass(w, prev_blank)
        delta = dw
        inc = -np.inf
        if prev_w is not None:
            inc = float((w - prev_w).max())
            for t in blank:
                d = np.abs(blank[t] - prev_blank[t]).max()
                delta = max(delta, float(d))
                inc = max(inc, float((blank[t] - prev_blank[t]).max()))
        deltas.append(delta)
        max_increase = max(max_increase, inc)
        prev_w = w
        prev_blank = blank
        if n_iter > 1 and delta < tol:
            converged = True
            break
        if n_iter >= max_iter:
            break

    # read off the stationary post-message thresholds
    labels = [None if w[i] < min(tc0[i], tc1[i])
              else (0 if tc0[i] <= tc1[i] else 1) for i in range(len(grid))]
    w1, w2 = thresholds_from_labels(list(grid), labels, costs.declare_boundary)
    wald = StationaryWald(rows=rows, costs=costs, grid=grid, values=w,
                          w1=w1, w2=w2, n_iter=n_iter, deltas=deltas,
                          max_increase=max_increase, converged=converged)

    blank_thresholds = {}
    for t in blank_stages:
        cont = np.full_like(grid, costs.c2)
        for z, (f0z, f1z) in model[t].items():
            for y in range(n_y):
                f0 = f0z * rows[0][y]
                f1 = f1z * rows[1][y]
                den = grid * f0 + (1.0 - grid) * f1
                with np.errstate(invalid="ignore", divide="ignore"):
                    nb = np.where(den > 0.0, grid * f0 / np.where(den > 0.0, den, 1.0), 0.0)
                tail = blank[t + 1] if z == BLANK else w
                cont += np.where(den > 0.0, den * np.interp(nb, grid, tail), 0.0)
        labels = []
        for i in range(len(grid)):
            cands = [(tc0[i], 0, 0), (tc1[i], 1, 1), (cont[i], 2, None)]
            labels.append(min(cands, key=lambda c: (c[0], c[1]))[2])
        blank_thresholds[t] = thresholds_from_labels(list(grid), labels,
                                                     costs.declare_boundary)

    return O2InfiniteSolution(grid=grid, wald=wald,
                              blank_values={t: v for t, v in blank.items()},
                              blank_thresholds=blank_thresholds,
                              message_model=model, n_iter=n_iter,
                              deltas=deltas, max_increase=float(max_increase),
                              converged=converged)


# ---------------------------------------------------------------------------
# sender limit


@dataclass
class O1InfiniteSolution:
    grid: np.ndarray
    values: np.ndarray
    stage_rule: object
    affines: tuple
    n_iter: int
    deltas: list
    max_increase: float
    converged: bool

    @property
    def four_thresholds(self):
        """Binary-message view (alpha, beta, delta, theta); empty send
        regions collapse at the matching edge."""
        send = self.stage_rule.send
        low = send[len(send) - 1] if send[len(send) - 1] is not None else (0.0, 0.0)
        high = send[0] if send[0] is not None else (1.0, 1.0)
        return (low[0], low[1], high[0], high[1])


def value_iterate_o1(o2, problem, grid_size=GRID_SIZE_DEFAULT,
                     tol=VI_TOL_DEFAULT, max_iter=VI_MAX_ITER_DEFAULT):
    """Sender value iteration with its deadline removed.

    Needs a receiver with a bounded stopping time and a time-invariant
    anchor, so the send branches are fixed affine curves; then the sender
    recursion is a contraction toward the no-deadline value.
    """
    if isinstance(o2, O2InfiniteSolution):
        raise ProblemSpecError("o2", "receiver policy has no bounded stopping "
                                     "time; the sender limit needs one")
    if not isinstance(o2, O2Policy):
        raise ProblemSpecError("o2", f"not a receiver policy: {type(o2).__name__}")
    last = o2.wald_rules[len(o2.wald_rules) - 1]
    if last[0] < last[1]:
        raise ProblemSpecError("o2", "receiver policy does not force a decision "
                                     "at its last stage (unbounded stopping time)")
    if problem.variant != "P1":
        raise ProblemSpecError("variant", "the sender limit is implemented for "
                                          "the wait-then-sample variant; finite "
                                          "interleaved horizons are covered by "
                                          "the designer solvers")
    if not problem.channel1.stationary:
        raise ProblemSpecError("channels", "infinite-horizon limits need "
                                           "stationary channels")
    for stage in o2.message_model:
        if stage != o2.message_model[0]:
            raise ProblemSpecError("o2", "receiver anchor is not stationary")
        mb = stage.get(BLANK)
        if mb is not None and abs(mb[0] - mb[1]) > 0.0:
            raise ProblemSpecError("o2", "receiver anchor's blank factor is "
                                         "informative; send values would be "
                                         "time-varying")
    costs = problem.costs
    m = problem.n_messages
    memo = {}
    affines = []
    for z in range(m):
        sb0 = subjective_update(float(problem.prior), None, None,
                                o2.message_factor(1, z))
        affines.append((_br._receiver_tail(o2, problem, 0, 0, sb0, memo),
                        _br._receiver_tail(o2, problem, 1, 0, sb0, memo)))

    grid = np.linspace(0.0, 1.0, grid_size)
    send_curves = [grid * a + (1.0 - grid) * b for a, b in affines]
    send_min = np.minimum.reduce(send_curves)
    rows = problem.channel1.row_pair(1)
    n_y = len(rows[0])
    branch = []
    for y in range(n_y):
        den = grid * rows[0][y] + (1.0 - grid) * rows[1][y]
        with np.errstate(invalid="ignore", divide="ignore"):
            nb = np.where(den > 0.0, grid * rows[0][y] / np.where(den > 0.0, den, 1.0), 0.0)
        branch.append((den, nb))

    values = send_min.copy()
    deltas = []
    max_increase = -np.inf
    converged = False
    n_iter = 0
    while n_iter < max_iter:
        n_iter += 1
        cont = np.full_like(grid, costs.c1)
        for den, nb in branch:
            cont += np.where(den > 0.0, den * np.interp(nb, grid, values), 0.0)
        new = np.minimum(send_min, cont)
        delta = float(np.abs(new - values).max())
        max_increase = max(max_increase, float((new - values).max()))
        deltas.append(delta)
        values = new
        if delta < tol:
            converged = True
            break

    cont = np.full_like(grid, costs.c1)
    for den, nb in branch:
        cont += np.where(den > 0.0, den * np.interp(nb, grid, values), 0.0)
    labels = []
    for i in range(len(grid)):
        cands = [(float(send_curves[z][i]), (0, -z), z) for z in range(m)]
        cands.append((float(cont[i]), (1, 0), BLANK))
        labels.append(min(cands, key=lambda c: (c[0], c[1]))[2])
    rule = _br.extract_thresholds(list(zip(grid.tolist(), labels)), m,
                                  terminal=False)
    return O1InfiniteSolution(grid=grid, values=values, stage_rule=rule,
                              affines=tuple(affines), n_iter=n_iter,
                              deltas=deltas, max_increase=float(max_increase),
                              converged=converged)


# ---------------------------------------------------------------------------
# epsilon-optimal construction


@dataclass
class EpsilonPair:
    o1: object
    o2: object
    certificates: tuple
    horizon: int
    cost: float

    @property
    def epsilon(self):
        return self.certificates[0].epsilon + self.certificates[1].epsilon


def epsilon_optimal_pair(problem, epsilon, max_horizon=6, start_horizon=1):
    """Solve growing finite horizons until the exact tail masses certify
    total truncation loss ≤ epsilon (half per observer)."""
    if epsilon <= 0.0:
        raise ProblemSpecError("epsilon", f"{epsilon} is not > 0")
    _require_stationary(problem)
    solver = solve_p1 if problem.variant == "P1" else solve_p2
    best = None
    for t in range(max(1, start_horizon), max_horizon + 1):
        finite = dataclasses.replace(problem, t1=t, t2=t)
        sol = solver(finite)
        bd = exact_cost((sol.o1, sol.o2), finite)
        cert1 = truncation_bound("O1", bd.tau1_tail(t), problem.costs,
                                 t2=t, horizon=t)
        cert2 = truncation_bound("O2", bd.tau2_tail(t), problem.costs,
                                 horizon=t)
        pair = EpsilonPair(o1=sol.o1, o2=sol.o2, certificates=(cert1, cert2),
                           horizon=t, cost=sol.total)
        if best is None or pair.epsilon < best.epsilon:
            best = pair
        if cert1.epsilon <= epsilon / 2.0 and cert2.epsilon <= epsilon / 2.0:
            return pair
    raise CertificationError(
        f"no horizon up to {max_horizon} certifies epsilon={epsilon}; best "
        f"achieved {best.epsilon} at horizon {best.horizon}", best=best)
