"""Observer 2's stopping problem once no further messages are coming.

After the final message the receiver faces a classical sequential test: pay
c2 per fresh observation, or declare and pay the terminal loss.  The finite
solver is pointwise exact (memoized recursion on the remaining horizon); the
stationary solver is value iteration on a grid with linear interpolation.

Threshold convention everywhere: declare 1 for beliefs at or below the lower
threshold, declare 0 at or above the upper one, keep sampling strictly in
between.  Remember beliefs are P(H=0 | info), so low belief means H=1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ProblemSpecError, StructureViolation
from .model import Channel, terminal_cost

GRID_SIZE_DEFAULT = 1001
VI_TOL_DEFAULT = 1e-9
VI_MAX_ITER_DEFAULT = 10000

_MEMO_DIGITS = 13


def _as_eval_points(eval_points):
    if eval_points is None:
        eval_points = np.linspace(0.0, 1.0, GRID_SIZE_DEFAULT)
    elif isinstance(eval_points, int):
        eval_points = np.linspace(0.0, 1.0, eval_points)
    pts = sorted(set(float(p) for p in eval_points))
    for p in pts:
        if not 0.0 <= p <= 1.0:
            raise ProblemSpecError("eval_points", f"belief {p} outside [0, 1]")
    return tuple(pts)


def thresholds_from_labels(points, labels, declare_boundary):
    """Threshold pair from per-point optimal actions.

    labels[i] is 1 (declare 1), 0 (declare 0) or None (keep sampling) at
    points[i], points ascending.  The only admissible pattern is a run of
    1s, then Nones, then 0s, any run possibly empty.  Thresholds go at
    midpoints between adjacent points with different labels; an empty
    sampling run collapses both thresholds onto the declaration boundary.
    """
    n = len(points)
    i = 0
    while i < n and labels[i] == 1:
        i += 1
    j = i
    while j < n and labels[j] is None:
        j += 1
    k = j
    while k < n and labels[k] == 0:
        k += 1
    if k != n:
        raise StructureViolation(
            f"stopping actions are not threshold-shaped: labels {labels} at {points}")
    if i == j:
        return (declare_boundary, declare_boundary)
    w1 = 0.0 if i == 0 else 0.5 * (points[i - 1] + points[i])
    w2 = 1.0 if j == n else 0.5 * (points[j - 1] + points[j])
    return (w1, w2)


@dataclass(eq=False)
class WaldSolution:
    """Finite-horizon stopping solution.

    ``thresholds[k]`` applies after k observations (so k also indexes
    absolute time when the receiver samples every step); the entry at the
    horizon has both components equal, forcing a declaration.  ``values[r]``
    is the optimal cost-to-go with r observations left, evaluated on
    ``eval_points``; values are pointwise exact, not interpolated.
    """

    channel: Channel
    costs: object
    horizon: int
    eval_points: tuple
    thresholds: tuple = ()
    values: tuple = ()
    _memo: dict = field(default_factory=dict, repr=False)

    def _rows_for_remaining(self, remaining):
        # with r observations left, the next draw is observation number
        # horizon - r + 1
        return self.channel.row_pair(self.horizon - remaining + 1)

    def value(self, belief, remaining):
        """Optimal expected cost-to-go, exact."""
        tc0 = terminal_cost(0, belief, self.costs)
        tc1 = terminal_cost(1, belief, self.costs)
        stop = tc0 if tc0 <= tc1 else tc1
        if remaining <= 0:
            return stop
        key = (remaining, round(belief, _MEMO_DIGITS))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        row0, row1 = self._rows_for_remaining(remaining)
        cont = self.costs.c2
        for y in range(len(row0)):
            prob = belief * row0[y] + (1.0 - belief) * row1[y]
            if prob <= 0.0:
                continue
            cont += prob * self.value(belief * row0[y] / prob, remaining - 1)
        out = stop if stop <= cont else cont
        self._memo[key] = out
        return out

    def action(self, belief, remaining):
        """DP-optimal action: 0, 1, or None (keep sampling).

        Ties break toward stopping, and between declarations toward 0.
        """
        tc0 = terminal_cost(0, belief, self.costs)
        tc1 = terminal_cost(1, belief, self.costs)
        u, stop = (0, tc0) if tc0 <= tc1 else (1, tc1)
        if remaining <= 0:
            return u
        row0, row1 = self._rows_for_remaining(remaining)
        cont = self.costs.c2
        for y in range(len(row0)):
            prob = belief * row0[y] + (1.0 - belief) * row1[y]
            if prob <= 0.0:
                continue
            cont += prob * self.value(belief * row0[y] / prob, remaining - 1)
        return u if stop <= cont else None

    def decide(self, belief, k):
        """Action prescribed by the stored thresholds after k observations."""
        w1, w2 = self.thresholds[k]
        if belief >= w2:
            return 0
        if belief <= w1:
            return 1
        return None


def solve_wald_finite(channel, costs, horizon, eval_points=None):
    """Solve the receiver's finite-horizon stopping problem.

    channel is observer 2's Channel (its t-th table feeds the t-th
    observation).  eval_points selects where values are tabulated and
    between which points thresholds are placed: None for a default uniform
    grid, an int for a grid of that size, or an explicit collection of
    beliefs (e.g. the reachable atoms of a specific problem, which makes
    the threshold classification of those atoms agree exactly with the
    dynamic program).
    """
    if horizon < 0:
        raise ProblemSpecError("horizon", "must be >= 0")
    if not channel.stationary and len(channel.tables) < horizon:
        raise ProblemSpecError("channels", f"channel covers {len(channel.tables)} "
                                           f"observations, horizon {horizon} needed")
    pts = _as_eval_points(eval_points)
    sol = WaldSolution(channel=channel, costs=costs, horizon=horizon, eval_points=pts)

    values = []
    for r in range(horizon + 1):
        values.append(tuple(sol.value(p, r) for p in pts))
    sol.values = tuple(values)

    boundary = costs.declare_boundary
    # sentinels at 0 and 1 give the label runs well-defined ends without
    # polluting the stored evaluation set
    aug = pts
    if not aug or aug[0] > 0.0:
        aug = (0.0,) + aug
    if aug[-1] < 1.0:
        aug = aug + (1.0,)
    thresholds = []
    for k in range(horizon):
        labels = [sol.action(p, horizon - k) for p in aug]
        thresholds.append(thresholds_from_labels(aug, labels, boundary))
    thresholds.append((boundary, boundary))
    sol.thresholds = tuple(thresholds)
    return sol


def wald_cost(solution, belief, remaining):
    """Exact optimal cost-to-go with ``remaining`` observations left."""
    if not 0.0 <= belief <= 1.0:
        raise ProblemSpecError("belief", f"{belief} outside [0, 1]")
    if remaining > solution.horizon:
        raise ProblemSpecError("remaining", f"{remaining} exceeds horizon {solution.horizon}")
    return solution.value(belief, remaining)


def wald_vi_iterates(rows, costs, grid):
    """Generator of stationary value-iteration iterates on a belief grid.

    Yields (values, delta) starting from the stop-only function; iterates
    are pointwise non-increasing because adding one more sampling
    opportunity can only help.
    """
    row0 = np.asarray(rows[0], dtype=float)
    row1 = np.asarray(rows[1], dtype=float)
    g = np.asarray(grid, dtype=float)
    stop = np.minimum(g * costs.loss[0][0] + (1.0 - g) * costs.loss[0][1],
                      g * costs.loss[1][0] + (1.0 - g) * costs.loss[1][1])
    probs = []
    posts = []
    for y in range(len(row0)):
        prob = g * row0[y] + (1.0 - g) * row1[y]
        with np.errstate(divide="ignore", invalid="ignore"):
            post = np.where(prob > 0.0, g * row0[y] / np.maximum(prob, 1e-300), 0.0)
        probs.append(prob)
        posts.append(post)
    values = stop.copy()
    yield values, np.inf
    while True:
        cont = np.full_like(g, costs.c2)
        for prob, post in zip(probs, posts):
            cont += prob * np.interp(post, g, values)
        new = np.minimum(stop, cont)
        delta = float(np.max(np.abs(new - values)))
        values = new
        yield values, delta


@dataclass(eq=False)
class StationaryWald:
    """Converged stationary stopping solution on a grid."""

    rows: tuple
    costs: object
    grid: np.ndarray
    values: np.ndarray
    w1: float
    w2: float
    n_iter: int
    deltas: list
    max_increase: float
    converged: bool

    def value(self, belief):
        return float(np.interp(belief, self.grid, self.values))

    def decide(self, belief):
        if belief >= self.w2:
            return 0
        if belief <= self.w1:
            return 1
        return None


def solve_wald_infinite(channel, costs, grid_size=GRID_SIZE_DEFAULT,
                        tol=VI_TOL_DEFAULT, max_iter=VI_MAX_ITER_DEFAULT):
    """Stationary stopping solution by value iteration.

    channel may be a stationary Channel or a bare (row_h0, row_h1) pair.
    Records the per-iteration sup deltas and the largest pointwise increase
    seen between consecutive iterates (should be <= 0 up to roundoff).
    """
    if isinstance(channel, Channel):
        if not channel.stationary:
            raise ProblemSpecError("channels", "stationary solve needs a stationary channel")
        rows = channel.tables[0]
    else:
        rows = tuple(channel)
    grid = np.linspace(0.0, 1.0, grid_size)
    it = wald_vi_iterates(rows, costs, grid)
    prev, _ = next(it)
    deltas = []
    max_increase = -np.inf
    converged = False
    n = 0
    for values, delta in it:
        n += 1
        deltas.append(delta)
        max_increase = max(max_increase, float(np.max(values - prev)))
        prev = values
        if delta < tol:
            converged = True
            break
        if n >= max_iter:
            break

    stop = np.minimum(grid * costs.loss[0][0] + (1.0 - grid) * costs.loss[0][1],
                      grid * costs.loss[1][0] + (1.0 - grid) * costs.loss[1][1])
    declare = np.where(grid * (costs.loss[1][0] - costs.loss[0][0])
                       < (1.0 - grid) * (costs.loss[0][1] - costs.loss[1][1]), 1, 0)
    labels = [None if prev[i] < stop[i] else int(declare[i]) for i in range(len(grid))]
    w1, w2 = thresholds_from_labels(tuple(grid), labels, costs.declare_boundary)
    return StationaryWald(rows=rows, costs=costs, grid=grid, values=prev,
                          w1=w1, w2=w2, n_iter=n, deltas=deltas,
                          max_increase=max_increase, converged=converged)
