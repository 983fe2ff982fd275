"""Threshold policies for both observers, plus extraction and (de)serialization.

Observer 1 policy: at each stage before its deadline, the belief line splits
into up to M send intervals with blank gaps around them; higher message
symbols sit on lower beliefs (symbol M-1 lowest, symbol 0 highest).  At the
deadline a message is forced, so the line is cut into M regions by M-1 cuts.

Observer 2 policy: while messages are still blank (interleaved variant only)
a continue interval (a, b) per stage; once the final message has arrived, a
stopping-threshold table indexed by how many observations observer 2 has
taken.  The policy also carries a ``message_model``: the per-stage message
likelihoods of the observer-1 policy it was built against.  That model is
what turns the thresholds into an actual decision map, because observer 2's
belief depends on the statistics of the partner's messages.  When the pair
being run is the one the policy was built for, the modelled belief is the
true posterior; against any other partner the policy is still a fixed,
well-defined map, which is exactly what a best response needs.

Boundary conventions, used consistently by solvers, oracles and simulators:
send regions are closed intervals and higher symbols are checked first;
declaration checks test "declare 0" before "declare 1"; a subjectively
impossible event (zero probability under the message model for both
hypotheses) leaves observer 2's belief unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .belief import AtomLevel, push_level
from .errors import ProblemSpecError, StructureViolation

BLANK = "b"


@dataclass(frozen=True)
class StageRule:
    """One pre-deadline stage of observer 1: send intervals by symbol.

    ``send[z]`` is a closed (lo, hi) interval or None when symbol z is not
    used at this stage.  Beliefs outside every interval mean a blank.
    """

    send: tuple

    def __post_init__(self):
        # walking up in symbol means walking down in belief: each interval
        # must end at or below the start of the previous (lower) symbol's
        prev_lo = None
        for z, iv in enumerate(self.send):
            if iv is None:
                continue
            lo, hi = iv
            if not (0.0 <= lo <= hi <= 1.0):
                raise ProblemSpecError("o1.send", f"bad interval {iv} for symbol {z}")
            if prev_lo is not None and hi > prev_lo:
                raise ProblemSpecError(
                    "o1.send", f"symbol {z} interval {iv} overlaps a lower symbol's")
            prev_lo = lo

    @property
    def n_messages(self):
        return len(self.send)

    def classify(self, belief):
        for z in range(len(self.send) - 1, -1, -1):
            iv = self.send[z]
            if iv is not None and iv[0] <= belief <= iv[1]:
                return z
        return BLANK


@dataclass(frozen=True)
class TerminalRule:
    """Forced-send stage: M-1 ascending cuts, higher symbols below.

    A cut of -1.0 (or 1.0) marks an empty region at the low (high) end.
    The belief exactly at a cut goes to the higher symbol.
    """

    cuts: tuple

    def __post_init__(self):
        prev = -1.0
        for c in self.cuts:
            if not (-1.0 <= c <= 1.0):
                raise ProblemSpecError("o1.terminal", f"cut {c} outside [-1, 1]")
            if c < prev:
                raise ProblemSpecError("o1.terminal", f"cuts {self.cuts} not ascending")
            prev = c

    @property
    def n_messages(self):
        return len(self.cuts) + 1

    def classify(self, belief):
        below = sum(1 for c in self.cuts if c < belief)
        return len(self.cuts) - below


@dataclass(frozen=True)
class O1Policy:
    """Observer 1's full policy: stage rules for t = 1..T1-1, then the cut."""

    stages: tuple
    terminal: TerminalRule
    n_messages: int = 2

    def __post_init__(self):
        if self.terminal.n_messages != self.n_messages:
            raise ProblemSpecError("o1", "terminal cut count does not match M")
        for s in self.stages:
            if s.n_messages != self.n_messages:
                raise ProblemSpecError("o1", "stage symbol count does not match M")

    @property
    def horizon(self):
        return len(self.stages) + 1

    def message(self, t, belief):
        """Message sent at stage t (1-based) at the given true belief."""
        if t < self.horizon:
            return self.stages[t - 1].classify(belief)
        if t == self.horizon:
            return self.terminal.classify(belief)
        raise ProblemSpecError("t", f"stage {t} beyond sender horizon {self.horizon}")

    def rule_at(self, t):
        return self.stages[t - 1] if t < self.horizon else self.terminal


@dataclass(frozen=True)
class O2Policy:
    """Observer 2's full policy.

    ``blank_rules[t-1]`` = (a, b) used at stage t while messages are blank
    (interleaved variant; empty for the wait-then-sample variant).
    ``wald_rules[k]`` = (w1, w2) used once the final message is in, indexed
    by observer 2's own observation count; the last entry forces a
    declaration.  ``message_model[t-1]`` maps each symbol (and BLANK) to its
    likelihood pair at stage t under the partner policy this was built for.
    """

    blank_rules: tuple
    wald_rules: tuple
    message_model: tuple
    n_messages: int = 2

    @property
    def max_observations(self):
        return len(self.wald_rules) - 1

    def decide_blank(self, t, belief):
        a, b = self.blank_rules[t - 1]
        if belief >= b:
            return 0
        if belief <= a:
            return 1
        return None

    def decide_wald(self, k, belief):
        w1, w2 = self.wald_rules[k]
        if belief >= w2:
            return 0
        if belief <= w1:
            return 1
        return None

    def message_factor(self, t, z):
        """Likelihood pair of message z at stage t under the built-against
        partner; (1, 1) when the stage or symbol is subjectively impossible,
        so the belief update becomes a no-op."""
        if not 1 <= t <= len(self.message_model):
            return (1.0, 1.0)
        pair = self.message_model[t - 1].get(z)
        if pair is None or (pair[0] <= 0.0 and pair[1] <= 0.0):
            return (1.0, 1.0)
        return pair


def subjective_update(belief, y2, channel_rows, factor):
    """Observer 2's modelled-belief step, total by convention.

    Like belief.update_observer2 but a zero-probability joint event keeps
    the belief unchanged instead of raising: the modelled belief must be
    defined on every realizable path even when the partner deviates from
    the modelled policy.
    """
    f0, f1 = (1.0, 1.0) if factor is None else factor
    if y2 is not None:
        row0, row1 = channel_rows
        f0 *= row0[y2]
        f1 *= row1[y2]
    num = belief * f0
    den = num + (1.0 - belief) * f1
    if den <= 0.0:
        return belief
    return num / den


def extract_thresholds(action_per_atom, n_messages, terminal=False):
    """Turn per-atom optimal actions into a threshold rule.

    action_per_atom: (belief, action) pairs, beliefs ascending; actions are
    message symbols, or BLANK on non-terminal sender stages.  Verifies the
    labelling is threshold-shaped (symbols in strictly descending runs,
    blanks only between or around them) and raises StructureViolation
    otherwise.  Thresholds go at midpoints between adjacent atoms with
    different actions; a run touching the end of the atom list extends to
    the corresponding end of [0, 1].
    """
    pairs = list(action_per_atom)
    for i in range(1, len(pairs)):
        if pairs[i][0] < pairs[i - 1][0]:
            raise ProblemSpecError("action_per_atom", "beliefs must be ascending")

    runs = []  # (action, first_idx, last_idx)
    for i, (_, act) in enumerate(pairs):
        if runs and runs[-1][0] == act:
            runs[-1][2] = i
        else:
            runs.append([act, i, i])

    atoms = [b for b, _ in pairs]

    def lo_edge(first):
        return 0.0 if first == 0 else 0.5 * (atoms[first - 1] + atoms[first])

    def hi_edge(last):
        return 1.0 if last == len(atoms) - 1 else 0.5 * (atoms[last] + atoms[last + 1])

    symbol_runs = [r for r in runs if r[0] != BLANK]
    seen = [r[0] for r in symbol_runs]
    if len(set(seen)) != len(seen):
        raise StructureViolation(f"symbol repeats in non-adjacent runs: {pairs}")
    if any(not isinstance(z, int) or not 0 <= z < n_messages for z in seen):
        raise StructureViolation(f"action outside symbol range 0..{n_messages - 1}: {seen}")
    if seen != sorted(seen, reverse=True):
        raise StructureViolation(
            f"symbols must decrease left to right (higher symbol = lower belief), got {seen}")

    if not terminal:
        send = [None] * n_messages
        for act, first, last in symbol_runs:
            send[act] = (lo_edge(first), hi_edge(last))
        return StageRule(send=tuple(send))

    if any(r[0] == BLANK for r in runs):
        raise StructureViolation("blank action on a forced-send stage")
    if not runs:
        raise StructureViolation("no atoms to extract a terminal cut from")
    # cuts[i], i = 0..M-2, is the upper edge of symbol (M-1-i)'s region
    cuts = [None] * (n_messages - 1)
    pos = n_messages - 1  # highest symbol not yet placed
    boundary = -1.0 if atoms and atoms[0] <= 0.0 else 0.0
    for act, first, last in symbol_runs:
        while pos > act:
            # symbols skipped before this run get empty regions at `boundary`
            cuts[n_messages - 1 - pos] = boundary
            pos -= 1
        boundary = hi_edge(last)
        if act > 0:
            cuts[n_messages - 1 - act] = boundary
        pos = act - 1
    while pos >= 1:
        cuts[n_messages - 1 - pos] = 1.0
        pos -= 1
    return TerminalRule(cuts=tuple(cuts))


def blank_conditioned_levels(o1, problem):
    """Observer 1's belief law at each stage, on the all-blank branch.

    Returns a list where entry t-1 is the AtomLevel of observer 1's belief
    at stage t (after its t-th observation), with weights
    P(belief = atom, all messages before t blank | H = h) -- unnormalized,
    so the totals give the blank-survival probabilities.
    """
    level = AtomLevel(atoms=(float(problem.prior),), w0=(1.0,), w1=(1.0,))
    out = []
    for t in range(1, o1.horizon + 1):
        level = push_level(level, problem.channel1.row_pair(t))
        out.append(level)
        if t < o1.horizon:
            rule = o1.stages[t - 1]
            kept = [(b, u0, u1) for b, u0, u1 in level.items()
                    if rule.classify(b) == BLANK]
            level = AtomLevel(atoms=tuple(e[0] for e in kept),
                              w0=tuple(e[1] for e in kept),
                              w1=tuple(e[2] for e in kept))
    return out


def build_message_model(o1, problem):
    """Per-stage message likelihoods of an observer-1 policy.

    Entry t-1 maps each symbol (plus BLANK before the deadline) to
    (P(z_t = z | blanks before t, H=0), same under H=1).  A hypothesis
    whose blank-survival probability is zero gets zeros across the board
    for that stage.
    """
    model = []
    for t, level in enumerate(blank_conditioned_levels(o1, problem), start=1):
        rule = o1.rule_at(t)
        tot0 = sum(level.w0)
        tot1 = sum(level.w1)
        acc = {}
        if t < o1.horizon:
            acc[BLANK] = [0.0, 0.0]
        for z in range(o1.n_messages):
            acc[z] = [0.0, 0.0]
        for b, u0, u1 in level.items():
            z = rule.classify(b)
            acc[z][0] += u0
            acc[z][1] += u1
        model.append({z: (v[0] / tot0 if tot0 > 0.0 else 0.0,
                          v[1] / tot1 if tot1 > 0.0 else 0.0)
                      for z, v in acc.items()})
    return tuple(model)


# ---------------------------------------------------------------------------
# JSON round-tripping


def _interval_to_json(iv):
    return None if iv is None else [iv[0], iv[1]]


def o1_to_dict(o1):
    return {
        "M": o1.n_messages,
        "stages": [{"send": [_interval_to_json(iv) for iv in s.send]} for s in o1.stages],
        "terminal": {"cuts": list(o1.terminal.cuts)},
    }


def o1_from_dict(data):
    try:
        m = int(data["M"])
        stages = tuple(
            StageRule(send=tuple(None if iv is None else (float(iv[0]), float(iv[1]))
                                 for iv in s["send"]))
            for s in data["stages"])
        terminal = TerminalRule(cuts=tuple(float(c) for c in data["terminal"]["cuts"]))
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise ProblemSpecError("o1", f"malformed policy: {e}")
    return O1Policy(stages=stages, terminal=terminal, n_messages=m)


def _model_to_json(model):
    out = []
    for stage in model:
        out.append({str(z): [pair[0], pair[1]] for z, pair in stage.items()})
    return out


def _model_from_json(data):
    model = []
    for stage in data:
        entry = {}
        for key, pair in stage.items():
            z = BLANK if key == BLANK else int(key)
            entry[z] = (float(pair[0]), float(pair[1]))
        model.append(entry)
    return tuple(model)


def o2_to_dict(o2):
    return {
        "M": o2.n_messages,
        "blank_rules": [[a, b] for a, b in o2.blank_rules],
        "wald_rules": [[w1, w2] for w1, w2 in o2.wald_rules],
        "message_model": _model_to_json(o2.message_model),
    }


def o2_from_dict(data):
    try:
        return O2Policy(
            blank_rules=tuple((float(a), float(b)) for a, b in data["blank_rules"]),
            wald_rules=tuple((float(a), float(b)) for a, b in data["wald_rules"]),
            message_model=_model_from_json(data["message_model"]),
            n_messages=int(data.get("M", 2)))
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise ProblemSpecError("o2", f"malformed policy: {e}")


def pair_to_dict(o1, o2):
    return {"o1": o1_to_dict(o1), "o2": o2_to_dict(o2)}


def pair_from_dict(data):
    if not isinstance(data, dict) or "o1" not in data or "o2" not in data:
        raise ProblemSpecError("policies", "expected an object with 'o1' and 'o2'")
    return o1_from_dict(data["o1"]), o2_from_dict(data["o2"])
