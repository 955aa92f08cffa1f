"""Labeled Petri boxes with stochastic, immediate and waiting transitions.

Boxes are built by structural recursion over static expressions: atomic
activities map to two-place nets, every operator glues operand boxes through
its entry/internal/exit interface (choice merges entries and exits, sequence
merges exits with entries, iteration routes a looping body through a shared
internal place).  Synchronization adds product transitions, restriction
removes transitions whose label mentions the restricted action.

Waiting transitions removed by restriction leave a *clock* behind: a
non-fireable pseudo-transition whose countdown still runs while its preset is
marked.  The expression semantics keeps stamping such waiting activities, so
without the clocks the reachability graph would conflate states that the
transition system keeps apart.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .activities import (Action, Activity, RelabelMap, Stochastic, content,
                         sync_activities)
from .errors import NotRegularError, StampedInputError
from .syntax import (Act, Choice, Iter, Par, Relabel, Restrict, Seq, StaticExpr,
                     Sync, check_regular, is_enumerated, is_timer_free, print_expr)


@dataclass(frozen=True)
class Place:
    name: str
    label: str  # 'e' | 'i' | 'x'


@dataclass(frozen=True)
class BoxTransition:
    name: str
    activity: Activity
    pre: tuple[tuple[str, int], ...]   # (place, arc weight), weight >= 1
    post: tuple[tuple[str, int], ...]

    def pre_dict(self) -> dict[str, int]:
        return dict(self.pre)

    def post_dict(self) -> dict[str, int]:
        return dict(self.post)

    @property
    def is_waiting(self) -> bool:
        return self.activity.is_waiting

    @property
    def is_immediate(self) -> bool:
        return self.activity.is_immediate

    @property
    def is_stochastic(self) -> bool:
        return self.activity.is_stochastic


def _arcs(d: dict[str, int]) -> tuple[tuple[str, int], ...]:
    return tuple(sorted((p, w) for p, w in d.items() if w))


@dataclass(frozen=True)
class DtsdBox:
    places: tuple[Place, ...]
    transitions: tuple[BoxTransition, ...]
    clocks: tuple[BoxTransition, ...] = ()

    def entries(self) -> list[str]:
        return [p.name for p in self.places if p.label == "e"]

    def exits(self) -> list[str]:
        return [p.name for p in self.places if p.label == "x"]

    def internals(self) -> list[str]:
        return [p.name for p in self.places if p.label == "i"]

    def place(self, name: str) -> Place:
        for p in self.places:
            if p.name == name:
                return p
        raise KeyError(name)

    def transition(self, name: str) -> BoxTransition:
        for t in self.transitions + self.clocks:
            if t.name == name:
                return t
        raise KeyError(name)

    def waiting_units(self) -> list[BoxTransition]:
        """Waiting transitions plus clocks: everything that carries a timer."""
        return [t for t in self.transitions + self.clocks if t.is_waiting]

    def validate(self) -> None:
        names = [p.name for p in self.places]
        if len(set(names)) != len(names):
            raise ValueError("duplicate place names")
        if not self.places and not self.transitions:
            raise ValueError("empty net")
        if not self.entries() or not self.exits():
            raise ValueError("a box needs entry and exit places")
        entry, exit_ = set(self.entries()), set(self.exits())
        for t in self.transitions:
            if not t.pre or not t.post:
                raise ValueError(f"transition {t.name} lacks a pre- or postcondition")
            if any(p in exit_ for p, _ in t.pre):
                raise ValueError("exit places must have an empty postcondition")
            if any(p in entry for p, _ in t.post):
                raise ValueError("entry places must have an empty precondition")

    # --- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        def trans(t: BoxTransition) -> dict:
            kind = t.activity.kind
            info = ({"prob": str(kind.prob)} if isinstance(kind, Stochastic)
                    else {"delay": kind.delay, "weight": str(kind.weight)})
            return {
                "name": t.name,
                "multiaction": str(t.activity.alpha),
                "numbering": str(t.activity.num),
                **info,
            }

        arcs = []
        for t in self.transitions + self.clocks:
            for p, w in t.pre:
                arcs.append({"from": p, "to": t.name, "weight": w})
            for p, w in t.post:
                arcs.append({"from": t.name, "to": p, "weight": w})
        return {
            "places": [{"name": p.name, "label": p.label} for p in self.places],
            "transitions": [trans(t) for t in self.transitions],
            "clocks": [trans(t) for t in self.clocks],
            "arcs": arcs,
        }

    def to_dot(self, title: Optional[str] = None) -> str:
        lines = ["digraph box {"]
        if title:
            lines.append(f'  label="{title}";')
        for i, p in enumerate(self.places):
            extra = f"\\n{p.label}" if p.label != "i" else ""
            lines.append(f'  p{i} [shape=circle, label="{p.name}{extra}"];')
        index = {p.name: i for i, p in enumerate(self.places)}
        units = list(self.transitions) + list(self.clocks)
        for j, t in enumerate(units):
            thick = ", penwidth=2.5" if t.activity.is_deterministic else ""
            ghost = ", style=dashed" if t in self.clocks else ""
            lines.append(
                f'  t{j} [shape=box, label="{t.name}\\n{t.activity}"{thick}{ghost}];')
        for j, t in enumerate(units):
            for p, w in t.pre:
                attr = f' [label="{w}"]' if w != 1 else ""
                lines.append(f"  p{index[p]} -> t{j}{attr};")
            for p, w in t.post:
                attr = f' [label="{w}"]' if w != 1 else ""
                lines.append(f"  t{j} -> p{index[p]}{attr};")
        lines.append("}")
        return "\n".join(lines) + "\n"


# --- construction -----------------------------------------------------------

def _prefixed(box: DtsdBox, tag: str) -> DtsdBox:
    rename = {p.name: f"{tag}.{p.name}" for p in box.places}

    def fix(t: BoxTransition) -> BoxTransition:
        return BoxTransition(t.name, t.activity,
                             _arcs({rename[p]: w for p, w in t.pre}),
                             _arcs({rename[p]: w for p, w in t.post}))

    return DtsdBox(tuple(Place(rename[p.name], p.label) for p in box.places),
                   tuple(fix(t) for t in box.transitions),
                   tuple(fix(t) for t in box.clocks))


def _rewire(units: Iterable[BoxTransition],
            mapping: dict[str, list[str]]) -> tuple[BoxTransition, ...]:
    """Replace interface places by their merged counterparts."""

    def remap(arcs: tuple[tuple[str, int], ...]) -> tuple[tuple[str, int], ...]:
        acc: dict[str, int] = {}
        for p, w in arcs:
            for q in mapping.get(p, [p]):
                acc[q] = acc.get(q, 0) + w
        return _arcs(acc)

    return tuple(BoxTransition(t.name, t.activity, remap(t.pre), remap(t.post))
                 for t in units)


def _merge_name(parts: Iterable[str]) -> str:
    return "{" + ",".join(parts) + "}"


def atomic_box(act: Act) -> DtsdBox:
    activity = act.activity
    name = f"t{activity.num}" if activity.num is not None else "t"
    t = BoxTransition(name, activity, (("e", 1),), (("x", 1),))
    return DtsdBox((Place("e", "e"), Place("x", "x")), (t,))


def seq_box(b1: DtsdBox, b2: DtsdBox) -> DtsdBox:
    b1, b2 = _prefixed(b1, "1"), _prefixed(b2, "2")
    merged: dict[tuple[str, str], str] = {
        (x, e): _merge_name((x, e)) for x in b1.exits() for e in b2.entries()}
    map1 = {x: [merged[(x, e)] for e in b2.entries()] for x in b1.exits()}
    map2 = {e: [merged[(x, e)] for x in b1.exits()] for e in b2.entries()}
    places = ([p for p in b1.places if p.label != "x"]
              + [Place(n, "i") for n in merged.values()]
              + [p for p in b2.places if p.label != "e"])
    return DtsdBox(tuple(places),
                   _rewire(b1.transitions, map1) + _rewire(b2.transitions, map2),
                   _rewire(b1.clocks, map1) + _rewire(b2.clocks, map2))


def choice_box(b1: DtsdBox, b2: DtsdBox) -> DtsdBox:
    b1, b2 = _prefixed(b1, "1"), _prefixed(b2, "2")
    entry = {(e1, e2): _merge_name((e1, e2))
             for e1 in b1.entries() for e2 in b2.entries()}
    exit_ = {(x1, x2): _merge_name((x1, x2))
             for x1 in b1.exits() for x2 in b2.exits()}
    map1 = {e1: [entry[(e1, e2)] for e2 in b2.entries()] for e1 in b1.entries()}
    map1.update({x1: [exit_[(x1, x2)] for x2 in b2.exits()] for x1 in b1.exits()})
    map2 = {e2: [entry[(e1, e2)] for e1 in b1.entries()] for e2 in b2.entries()}
    map2.update({x2: [exit_[(x1, x2)] for x1 in b1.exits()] for x2 in b2.exits()})
    places = ([Place(n, "e") for n in entry.values()]
              + [p for p in b1.places if p.label == "i"]
              + [p for p in b2.places if p.label == "i"]
              + [Place(n, "x") for n in exit_.values()])
    return DtsdBox(tuple(places),
                   _rewire(b1.transitions, map1) + _rewire(b2.transitions, map2),
                   _rewire(b1.clocks, map1) + _rewire(b2.clocks, map2))


def par_box(b1: DtsdBox, b2: DtsdBox) -> DtsdBox:
    b1, b2 = _prefixed(b1, "1"), _prefixed(b2, "2")
    return DtsdBox(b1.places + b2.places,
                   b1.transitions + b2.transitions,
                   b1.clocks + b2.clocks)


def iter_box(b1: DtsdBox, b2: DtsdBox, b3: DtsdBox) -> DtsdBox:
    b1, b2, b3 = _prefixed(b1, "1"), _prefixed(b2, "2"), _prefixed(b3, "3")
    merged: dict[tuple[str, str, str, str], str] = {}
    for x1 in b1.exits():
        for x2 in b2.exits():
            for e2 in b2.entries():
                for e3 in b3.entries():
                    merged[(x1, x2, e2, e3)] = _merge_name((x1, x2, e2, e3))
    map1 = {x1: [n for (a, _, _, _), n in merged.items() if a == x1]
            for x1 in b1.exits()}
    map2 = {x2: [n for (_, b, _, _), n in merged.items() if b == x2]
            for x2 in b2.exits()}
    map2.update({e2: [n for (_, _, c, _), n in merged.items() if c == e2]
                 for e2 in b2.entries()})
    map3 = {e3: [n for (_, _, _, d), n in merged.items() if d == e3]
            for e3 in b3.entries()}
    places = ([p for p in b1.places if p.label != "x"]
              + [Place(n, "i") for n in merged.values()]
              + [p for p in b2.places if p.label == "i"]
              + [p for p in b3.places if p.label != "e"])
    return DtsdBox(tuple(places),
                   _rewire(b1.transitions, map1) + _rewire(b2.transitions, map2)
                   + _rewire(b3.transitions, map3),
                   _rewire(b1.clocks, map1) + _rewire(b2.clocks, map2)
                   + _rewire(b3.clocks, map3))


def relabel_box(box: DtsdBox, fn: RelabelMap) -> DtsdBox:
    def fix(t: BoxTransition) -> BoxTransition:
        return BoxTransition(t.name, t.activity.relabel(fn), t.pre, t.post)

    return DtsdBox(box.places, tuple(fix(t) for t in box.transitions),
                   tuple(fix(t) for t in box.clocks))


def restrict_box(box: DtsdBox, action: Action) -> DtsdBox:
    base = Action(action.name)
    kept, removed = [], []
    for t in box.transitions:
        (removed if t.activity.alpha.touches(base) else kept).append(t)
    # removed waiting transitions keep ticking: the expression semantics still
    # stamps their timers, so the state space must remember them
    clocks = list(box.clocks) + [t for t in removed if t.is_waiting]
    return DtsdBox(box.places, tuple(kept), tuple(clocks))


def sync_box(box: DtsdBox, action: Action) -> DtsdBox:
    base = Action(action.name)
    transitions = list(box.transitions)
    activities = {t.activity for t in transitions}
    frontier = list(transitions)
    while frontier:
        t = frontier.pop()
        for u in list(transitions):
            for first, second in ((t, u), (u, t)):
                va, wa = first.activity, second.activity
                if va == wa or base not in va.alpha or base.conjugate() not in wa.alpha:
                    continue
                if content(va.num) & content(wa.num):
                    continue  # a product never re-synchronizes with its operand
                if va.is_stochastic != wa.is_stochastic:
                    continue
                if va.is_deterministic and va.delay != wa.delay:
                    continue
                product = sync_activities(va, wa, base)
                if product in activities:
                    continue
                pre: dict[str, int] = first.pre_dict()
                for p, w in second.pre:
                    pre[p] = pre.get(p, 0) + w
                post: dict[str, int] = first.post_dict()
                for p, w in second.post:
                    post[p] = post.get(p, 0) + w
                new = BoxTransition(f"t{product.num}", product, _arcs(pre), _arcs(post))
                transitions.append(new)
                activities.add(product)
                frontier.append(new)
    return DtsdBox(box.places, tuple(transitions), box.clocks)


def _build(e: StaticExpr) -> DtsdBox:
    if isinstance(e, Act):
        return atomic_box(e)
    if isinstance(e, Seq):
        return seq_box(_build(e.left), _build(e.right))
    if isinstance(e, Choice):
        return choice_box(_build(e.left), _build(e.right))
    if isinstance(e, Par):
        return par_box(_build(e.left), _build(e.right))
    if isinstance(e, Relabel):
        return relabel_box(_build(e.body), e.fn)
    if isinstance(e, Restrict):
        return restrict_box(_build(e.body), e.action)
    if isinstance(e, Sync):
        return sync_box(_build(e.body), e.action)
    if isinstance(e, Iter):
        return iter_box(_build(e.init), _build(e.body), _build(e.term))
    raise TypeError(f"not a static expression: {e!r}")


def _canonical_names(box: DtsdBox) -> DtsdBox:
    rename = {p.name: f"p{i + 1}" for i, p in enumerate(box.places)}

    def fix(t: BoxTransition) -> BoxTransition:
        return BoxTransition(t.name, t.activity,
                             _arcs({rename[p]: w for p, w in t.pre}),
                             _arcs({rename[p]: w for p, w in t.post}))

    return DtsdBox(tuple(Place(rename[p.name], p.label) for p in box.places),
                   tuple(fix(t) for t in box.transitions),
                   tuple(fix(t) for t in box.clocks))


def box_of_static(e: StaticExpr, require_regular: bool = True) -> DtsdBox:
    """Compile a regular, enumerated, timer-free static expression to its box.

    `require_regular=False` skips the regularity check; the construction
    still works but the result may not be safe (useful to reproduce the
    non-safe counterexample in tests).
    """
    if require_regular:
        report = check_regular(e)
        if not report.ok:
            raise NotRegularError(
                f"{report.reason} (at {'/'.join(report.path) or 'root'})")
    if not is_timer_free(e):
        raise StampedInputError("boxes are built from timer-free expressions")
    if not is_enumerated(e):
        raise ValueError(f"expression must be enumerated: {print_expr(e)}")
    box = _canonical_names(_build(e))
    box.validate()
    return box
