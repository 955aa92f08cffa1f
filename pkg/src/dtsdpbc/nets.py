"""Execution of clocked boxes: enabledness, fireability, the firing rule with
enabling-memory timers, reachability graphs and the safety/cleanness check.

A net state pairs a marking with a timer valuation of the waiting units
(waiting transitions and clocks).  Timers follow the enabling-memory policy:
they run while the unit stays enabled, freeze over immediate steps, reset to
the full delay when re-enabled and turn off (undefined) when disabled.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .boxes import BoxTransition, DtsdBox
from .errors import BudgetExceededError, InternalError, UnsafeNetError
from .lts import Lts, LtsState, LtsTransition, StepLabel, Tag, label_sort_key

DEFAULT_BUDGET = 100_000

Marking = tuple[tuple[str, int], ...]  # sorted (place, tokens), tokens > 0


def _marking(d: dict[str, int]) -> Marking:
    return tuple(sorted((p, n) for p, n in d.items() if n))


def _marking_dict(m: Marking) -> dict[str, int]:
    return dict(m)


@dataclass(frozen=True)
class NetState:
    marking: Marking
    timers: tuple[tuple[str, int], ...]  # running countdowns only, by unit name

    def timer(self, name: str) -> Optional[int]:
        for n, v in self.timers:
            if n == name:
                return v
        return None

    def describe(self) -> str:
        marks = ",".join(f"{p}:{n}" if n != 1 else p for p, n in self.marking)
        clocks = ",".join(f"{n}={v}" for n, v in self.timers)
        return "<%s|%s>" % (marks, clocks)

    @property
    def timer_free_key(self) -> str:
        return ",".join(f"{p}:{n}" if n != 1 else p for p, n in self.marking)


def _covers(marking: dict[str, int], need: Iterable[tuple[str, int]]) -> bool:
    return all(marking.get(p, 0) >= w for p, w in need)


def _enabled(units: Iterable[BoxTransition], marking: dict[str, int]) -> list[BoxTransition]:
    return [t for t in units if _covers(marking, t.pre)]


def _initial_timers(box: DtsdBox, marking: dict[str, int]) -> tuple[tuple[str, int], ...]:
    pairs = [(t.name, t.activity.delay) for t in box.waiting_units()
             if _covers(marking, t.pre)]
    return tuple(sorted(pairs))


def mark_initial(box: DtsdBox) -> NetState:
    """Entry marking; every enabled waiting unit starts at its full delay."""
    marking = {p: 1 for p in box.entries()}
    return NetState(_marking(marking), _initial_timers(box, marking))


def mark_final(box: DtsdBox) -> NetState:
    """Exit marking; all timers off."""
    return NetState(_marking({p: 1 for p in box.exits()}), ())


def _group_preset(ts: Iterable[BoxTransition]) -> dict[str, int]:
    acc: dict[str, int] = {}
    for t in ts:
        for p, w in t.pre:
            acc[p] = acc.get(p, 0) + w
    return acc


def fireable(box: DtsdBox, state: NetState) -> frozenset[frozenset[str]]:
    """Transition sets fireable in the state.

    Immediate sets pre-empt everything; waiting sets require every countdown
    at 1 and must be maximal; stochastic sets (including the empty one) fire
    only when no immediate transition is enabled and no enabled waiting unit
    has its countdown at 1.
    """
    marking = _marking_dict(state.marking)
    enabled = _enabled(box.transitions, marking)
    immediates = [t for t in enabled if t.is_immediate]
    if immediates:
        sets = set()
        for r in range(1, len(immediates) + 1):
            for combo in itertools.combinations(immediates, r):
                if _covers(marking, _group_preset(combo).items()):
                    sets.add(frozenset(t.name for t in combo))
        return frozenset(sets)

    ready = [t for t in enabled if t.is_waiting and state.timer(t.name) == 1]
    if ready:
        sets = set()
        for r in range(1, len(ready) + 1):
            for combo in itertools.combinations(ready, r):
                need = _group_preset(combo)
                if not _covers(marking, need.items()):
                    continue
                rest = {p: marking.get(p, 0) - need.get(p, 0) for p in marking}
                if not any(_covers(rest, t.pre) for t in ready):
                    sets.add(frozenset(t.name for t in combo))
        if not sets:
            raise InternalError("no maximal waiting transition set is fireable")
        return frozenset(sets)

    stochastics = [t for t in enabled if t.is_stochastic]
    sets = {frozenset()}
    for r in range(1, len(stochastics) + 1):
        for combo in itertools.combinations(stochastics, r):
            if _covers(marking, _group_preset(combo).items()):
                sets.add(frozenset(t.name for t in combo))
    return frozenset(sets)


def classify(box: DtsdBox, state: NetState) -> Tag:
    sets = fireable(box, state)
    units = {box.transition(n) for n in frozenset().union(*sets)} if sets else set()
    if all(t.is_stochastic for t in units):
        return Tag.ST
    if all(t.is_waiting for t in units) and all(sets):
        return Tag.WT
    if all(t.is_immediate for t in units) and all(sets):
        return Tag.V
    raise InternalError("fireable sets mix transition kinds")


def _pf_table(box: DtsdBox, state: NetState,
              sets: frozenset[frozenset[str]]) -> dict[frozenset[str], Fraction]:
    tag = classify(box, state)
    table: dict[frozenset[str], Fraction] = {}
    if tag is Tag.ST:
        singles = {next(iter(s)) for s in sets if len(s) == 1}
        for s in sets:
            p = Fraction(1)
            for name in s:
                p *= box.transition(name).activity.prob
            for name in singles - s:
                p *= 1 - box.transition(name).activity.prob
            table[s] = p
    else:
        for s in sets:
            table[s] = sum((box.transition(name).activity.weight for name in s),
                           Fraction(0))
    return table


def fire(box: DtsdBox, state: NetState, fired: frozenset[str]) -> tuple[NetState, Fraction]:
    """Fire a transition set; returns the successor state and its probability."""
    sets = fireable(box, state)
    if fired not in sets:
        raise ValueError(f"set {sorted(fired)} is not fireable in {state.describe()}")
    table = _pf_table(box, state, sets)
    prob = table[fired] / sum(table.values())
    return _successor(box, state, fired), prob


def _successor(box: DtsdBox, state: NetState, fired: frozenset[str]) -> NetState:
    marking = _marking_dict(state.marking)
    fired_units = [box.transition(n) for n in fired]
    need = _group_preset(fired_units)
    mid = {p: marking.get(p, 0) - need.get(p, 0) for p in marking}
    new = dict(mid)
    for t in fired_units:
        for p, w in t.post:
            new[p] = new.get(p, 0) + w
    immediate_step = bool(fired) and all(t.is_immediate for t in fired_units)
    clock_names = {t.name for t in box.clocks}

    timers = []
    for unit in box.waiting_units():
        if not _covers(new, unit.pre):
            continue  # disabled: timer off
        if not _covers(mid, unit.pre):
            timers.append((unit.name, unit.activity.delay))  # (re-)enabled afresh
        elif immediate_step:
            timers.append((unit.name, state.timer(unit.name)))  # frozen, no time passes
        else:
            value = state.timer(unit.name)
            if value is None:
                raise InternalError(f"enabled unit {unit.name} has no timer")
            if unit.name in clock_names:
                # a restricted-away waiting unit can never fire: its countdown
                # parks at 1, mirroring the timer-stamp behaviour of expressions
                timers.append((unit.name, max(1, value - 1)))
            elif value <= 1:
                raise InternalError(
                    f"timer of {unit.name} would drop below 1 in {state.describe()}")
            else:
                timers.append((unit.name, value - 1))
    return NetState(_marking(new), tuple(sorted(timers)))


def step_distribution(box: DtsdBox,
                      state: NetState) -> list[tuple[frozenset[str], Fraction, NetState]]:
    sets = fireable(box, state)
    table = _pf_table(box, state, sets)
    total = sum(table.values())
    out = []
    for s in sorted(sets, key=lambda s: tuple(sorted(s))):
        out.append((s, table[s] / total, _successor(box, state, s)))
    if sum(p for _, p, _ in out) != 1:
        raise InternalError("firing probabilities do not sum to 1")
    return out


def _label_of(box: DtsdBox, fired: frozenset[str]) -> StepLabel:
    return frozenset(box.transition(n).activity for n in fired)


def build_rg(box: DtsdBox, budget: int = DEFAULT_BUDGET,
             initial: Optional[NetState] = None,
             require_safe: bool = True) -> Lts:
    """Breadth-first reachability graph of the clocked box."""
    start = mark_initial(box) if initial is None else initial
    order: dict[NetState, int] = {start: 0}
    states = [start]
    transitions: list[LtsTransition] = []
    queue = [start]
    while queue:
        state = queue.pop(0)
        if require_safe:
            bad = [p for p, n in state.marking if n > 1]
            if bad:
                raise UnsafeNetError(
                    f"place {bad[0]} holds more than one token in {state.describe()}")
        src = order[state]
        dist = step_distribution(box, state)
        dist.sort(key=lambda item: label_sort_key(_label_of(box, item[0])))
        for fired, prob, succ in dist:
            idx = order.get(succ)
            if idx is None:
                idx = len(states)
                order[succ] = idx
                states.append(succ)
                queue.append(succ)
                if len(states) > budget:
                    raise BudgetExceededError(f"state budget {budget} exceeded")
            transitions.append(LtsTransition(src, _label_of(box, fired), prob, idx))

    lts_states = []
    for i, state in enumerate(states):
        timers = tuple((n, v) for n, v in state.timers)
        lts_states.append(LtsState(f"s{i + 1}", state.describe(),
                                   classify(box, state), timers, state))
    return Lts("rg", lts_states, transitions, 0)


@dataclass(frozen=True)
class SafeCleanReport:
    safe: bool
    clean: bool
    violations: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.safe and self.clean


def check_safe_clean(box: DtsdBox, budget: int = DEFAULT_BUDGET) -> SafeCleanReport:
    """Explore the reachable states of the entry-marked box; safe means at
    most one token per place, clean means full entry/exit markings occur only
    exactly."""
    entries, exits = set(box.entries()), set(box.exits())
    violations: list[str] = []
    safe = clean = True
    seen = {mark_initial(box)}
    queue = [mark_initial(box)]
    while queue:
        state = queue.pop(0)
        marking = _marking_dict(state.marking)
        over = [p for p, n in state.marking if n > 1]
        if over:
            safe = False
            violations.append(
                f"{marking[over[0]]} tokens in place {over[0]} at {state.describe()}")
        if entries and all(marking.get(p, 0) >= 1 for p in entries):
            if set(marking) != entries or any(n != 1 for n in marking.values()):
                clean = False
                violations.append(f"entry marking covered but not exact at {state.describe()}")
        if exits and all(marking.get(p, 0) >= 1 for p in exits):
            if set(marking) != exits or any(n != 1 for n in marking.values()):
                clean = False
                violations.append(f"exit marking covered but not exact at {state.describe()}")
        for _, _, succ in step_distribution(box, state):
            if succ not in seen:
                seen.add(succ)
                queue.append(succ)
                if len(seen) > budget:
                    raise BudgetExceededError(f"state budget {budget} exceeded")
    return SafeCleanReport(safe, clean, tuple(violations))
