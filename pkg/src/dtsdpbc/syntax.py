"""Abstract syntax for static and dynamic process expressions.

Static expressions describe process structure; dynamic expressions decorate a
static expression with overlines (initial state of a subprocess) and
underlines (final state).  Waiting activities may carry a timer-stamp
superscript recording the current countdown value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Union

from .activities import Action, Activity, Leaf, RelabelMap


class StaticExpr:
    __slots__ = ()


class DynExpr:
    __slots__ = ()


Expr = Union[StaticExpr, DynExpr]


@dataclass(frozen=True, slots=True)
class Act(StaticExpr):
    activity: Activity
    stamp: Optional[int] = None  # timer superscript, only on waiting activities

    def __post_init__(self) -> None:
        if self.stamp is not None:
            if not self.activity.is_waiting:
                raise ValueError("timer stamps are only allowed on waiting activities")
            if not (1 <= self.stamp <= self.activity.delay):
                raise ValueError(
                    f"timer stamp {self.stamp} outside 1..{self.activity.delay}")


@dataclass(frozen=True, slots=True)
class Seq(StaticExpr):
    left: StaticExpr
    right: StaticExpr


@dataclass(frozen=True, slots=True)
class Choice(StaticExpr):
    left: StaticExpr
    right: StaticExpr


@dataclass(frozen=True, slots=True)
class Par(StaticExpr):
    left: StaticExpr
    right: StaticExpr


@dataclass(frozen=True, slots=True)
class Relabel(StaticExpr):
    body: StaticExpr
    fn: RelabelMap


@dataclass(frozen=True, slots=True)
class Restrict(StaticExpr):
    body: StaticExpr
    action: Action  # base action


@dataclass(frozen=True, slots=True)
class Sync(StaticExpr):
    body: StaticExpr
    action: Action


@dataclass(frozen=True, slots=True)
class Iter(StaticExpr):
    init: StaticExpr
    body: StaticExpr
    term: StaticExpr


# Dynamic nodes.  In DSeq/DChoice exactly one side is dynamic, in DIter
# exactly one argument is dynamic; DPar has two dynamic children.

@dataclass(frozen=True, slots=True)
class Bar(DynExpr):
    under: bool
    expr: StaticExpr

    @property
    def over(self) -> bool:
        return not self.under


@dataclass(frozen=True, slots=True)
class DSeq(DynExpr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class DChoice(DynExpr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class DPar(DynExpr):
    left: DynExpr
    right: DynExpr


@dataclass(frozen=True, slots=True)
class DRelabel(DynExpr):
    body: DynExpr
    fn: RelabelMap


@dataclass(frozen=True, slots=True)
class DRestrict(DynExpr):
    body: DynExpr
    action: Action


@dataclass(frozen=True, slots=True)
class DSync(DynExpr):
    body: DynExpr
    action: Action


@dataclass(frozen=True, slots=True)
class DIter(DynExpr):
    init: Expr
    body: Expr
    term: Expr


def overline(e: StaticExpr) -> Bar:
    return Bar(False, e)


def underline(e: StaticExpr) -> Bar:
    return Bar(True, e)


# --- generic walks ----------------------------------------------------------

def map_static(e: StaticExpr, act_fn: Callable[[Act], Act]) -> StaticExpr:
    if isinstance(e, Act):
        return act_fn(e)
    if isinstance(e, Seq):
        return Seq(map_static(e.left, act_fn), map_static(e.right, act_fn))
    if isinstance(e, Choice):
        return Choice(map_static(e.left, act_fn), map_static(e.right, act_fn))
    if isinstance(e, Par):
        return Par(map_static(e.left, act_fn), map_static(e.right, act_fn))
    if isinstance(e, Relabel):
        return Relabel(map_static(e.body, act_fn), e.fn)
    if isinstance(e, Restrict):
        return Restrict(map_static(e.body, act_fn), e.action)
    if isinstance(e, Sync):
        return Sync(map_static(e.body, act_fn), e.action)
    if isinstance(e, Iter):
        return Iter(map_static(e.init, act_fn), map_static(e.body, act_fn),
                    map_static(e.term, act_fn))
    raise TypeError(f"not a static expression: {e!r}")


def map_expr(g: Expr, act_fn: Callable[[Act], Act]) -> Expr:
    if isinstance(g, StaticExpr):
        return map_static(g, act_fn)
    if isinstance(g, Bar):
        return Bar(g.under, map_static(g.expr, act_fn))
    if isinstance(g, DSeq):
        return DSeq(map_expr(g.left, act_fn), map_expr(g.right, act_fn))
    if isinstance(g, DChoice):
        return DChoice(map_expr(g.left, act_fn), map_expr(g.right, act_fn))
    if isinstance(g, DPar):
        return DPar(map_expr(g.left, act_fn), map_expr(g.right, act_fn))
    if isinstance(g, DRelabel):
        return DRelabel(map_expr(g.body, act_fn), g.fn)
    if isinstance(g, DRestrict):
        return DRestrict(map_expr(g.body, act_fn), g.action)
    if isinstance(g, DSync):
        return DSync(map_expr(g.body, act_fn), g.action)
    if isinstance(g, DIter):
        return DIter(map_expr(g.init, act_fn), map_expr(g.body, act_fn),
                     map_expr(g.term, act_fn))
    raise TypeError(f"not an expression: {g!r}")


def static_acts(e: StaticExpr) -> Iterator[Act]:
    """Activity leaves in left-to-right syntax order."""
    if isinstance(e, Act):
        yield e
    elif isinstance(e, (Seq, Choice, Par)):
        yield from static_acts(e.left)
        yield from static_acts(e.right)
    elif isinstance(e, (Relabel, Restrict, Sync)):
        yield from static_acts(e.body)
    elif isinstance(e, Iter):
        yield from static_acts(e.init)
        yield from static_acts(e.body)
        yield from static_acts(e.term)
    else:
        raise TypeError(f"not a static expression: {e!r}")


def floor_static(g: Expr) -> StaticExpr:
    """Remove all overlines and underlines."""
    if isinstance(g, StaticExpr):
        return g
    if isinstance(g, Bar):
        return g.expr
    if isinstance(g, DSeq):
        return Seq(floor_static(g.left), floor_static(g.right))
    if isinstance(g, DChoice):
        return Choice(floor_static(g.left), floor_static(g.right))
    if isinstance(g, DPar):
        return Par(floor_static(g.left), floor_static(g.right))
    if isinstance(g, DRelabel):
        return Relabel(floor_static(g.body), g.fn)
    if isinstance(g, DRestrict):
        return Restrict(floor_static(g.body), g.action)
    if isinstance(g, DSync):
        return Sync(floor_static(g.body), g.action)
    if isinstance(g, DIter):
        return Iter(floor_static(g.init), floor_static(g.body), floor_static(g.term))
    raise TypeError(f"not an expression: {g!r}")


def strip_timers(g: Expr) -> Expr:
    """Remove every timer-stamp superscript; bars are preserved."""
    return map_expr(g, lambda a: Act(a.activity, None))


def is_timer_free(g: Expr) -> bool:
    if isinstance(g, StaticExpr):
        return all(a.stamp is None for a in static_acts(g))
    return is_timer_free(floor_static(g))


def enumerate_activities(e: StaticExpr) -> StaticExpr:
    """Number activity leaves 1,2,... in left-to-right syntax order.

    Idempotent: numbers are reassigned from scratch, so re-enumerating an
    already numbered expression yields the same numbering.
    """
    counter = 0

    def renumber(a: Act) -> Act:
        nonlocal counter
        counter += 1
        return Act(a.activity.numbered(Leaf(counter)), a.stamp)

    return map_static(e, renumber)


def is_enumerated(e: StaticExpr) -> bool:
    return all(a.activity.num is not None for a in static_acts(e))


def activity_sets(e: StaticExpr) -> tuple[frozenset[Activity], frozenset[Activity], frozenset[Activity]]:
    """Partition the syntax activities into (stochastic, immediate, waiting)."""
    sl, il, wl = set(), set(), set()
    for a in static_acts(e):
        act = a.activity
        if act.is_stochastic:
            sl.add(act)
        elif act.is_immediate:
            il.add(act)
        else:
            wl.add(act)
    return frozenset(sl), frozenset(il), frozenset(wl)


# --- regularity -------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    ok: bool
    path: tuple[str, ...] = ()
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_regular(e: StaticExpr) -> RegularityReport:
    """Accepts exactly the regular grammar: no parallel composition at the
    top level of any iteration body."""

    def first(*checks) -> Optional[RegularityReport]:
        for check in checks:
            bad = check()
            if bad is not None:
                return bad
        return None

    def walk(expr: StaticExpr, body_level: bool, path: tuple[str, ...]) -> Optional[RegularityReport]:
        if isinstance(expr, Act):
            return None
        if isinstance(expr, Par):
            if body_level:
                return RegularityReport(
                    False, path,
                    "parallel composition at the top level of an iteration body")
            return first(lambda: walk(expr.left, False, path + ("par.left",)),
                         lambda: walk(expr.right, False, path + ("par.right",)))
        if isinstance(expr, Seq):
            # in body position only the first component stays at body level
            return first(lambda: walk(expr.left, body_level, path + ("seq.left",)),
                         lambda: walk(expr.right, False, path + ("seq.right",)))
        if isinstance(expr, Choice):
            return first(lambda: walk(expr.left, body_level, path + ("choice.left",)),
                         lambda: walk(expr.right, body_level, path + ("choice.right",)))
        if isinstance(expr, Relabel):
            return walk(expr.body, body_level, path + ("relabel",))
        if isinstance(expr, Restrict):
            return walk(expr.body, body_level, path + ("restrict",))
        if isinstance(expr, Sync):
            return walk(expr.body, body_level, path + ("sync",))
        if isinstance(expr, Iter):
            return first(lambda: walk(expr.init, body_level, path + ("iter.init",)),
                         lambda: walk(expr.body, True, path + ("iter.body",)),
                         lambda: walk(expr.term, False, path + ("iter.term",)))
        raise TypeError(f"not a static expression: {expr!r}")

    bad = walk(e, False, ())
    return bad if bad is not None else RegularityReport(True)


# --- printing ---------------------------------------------------------------

# precedence levels: par < choice < seq < postfix < atom
_PAR, _CHOICE, _SEQ, _POSTFIX, _ATOM = 1, 2, 3, 4, 5


def _print(g: Expr, level: int) -> str:
    text, mine = _print_node(g)
    if mine < level:
        return "(" + text + ")"
    return text


def _print_node(g: Expr) -> tuple[str, int]:
    if isinstance(g, Act):
        stamp = f"^{g.stamp}" if g.stamp is not None else ""
        return str(g.activity) + stamp, _ATOM
    if isinstance(g, (Seq, DSeq)):
        return f"{_print(g.left, _SEQ)};{_print(g.right, _SEQ + 1)}", _SEQ
    if isinstance(g, (Choice, DChoice)):
        return f"{_print(g.left, _CHOICE)}[]{_print(g.right, _CHOICE + 1)}", _CHOICE
    if isinstance(g, (Par, DPar)):
        return f"{_print(g.left, _PAR)}||{_print(g.right, _PAR + 1)}", _PAR
    if isinstance(g, (Relabel, DRelabel)):
        return f"{_print(g.body, _POSTFIX)}{g.fn}", _POSTFIX
    if isinstance(g, (Restrict, DRestrict)):
        if _is_stop(g):
            return "stop", _ATOM
        return f"{_print(g.body, _POSTFIX)} rs {g.action}", _POSTFIX
    if isinstance(g, (Sync, DSync)):
        return f"{_print(g.body, _POSTFIX)} sy {g.action}", _POSTFIX
    if isinstance(g, (Iter, DIter)):
        return f"[{_print(g.init, _PAR)}*{_print(g.body, _PAR)}*{_print(g.term, _PAR)}]", _ATOM
    if isinstance(g, Bar):
        mark = "_" if g.under else "^"
        return f"{mark}[{_print(g.expr, _PAR)}]", _ATOM
    raise TypeError(f"not an expression: {g!r}")


STOP_ACTION = Action("__stop")


def _is_stop(g: Expr) -> bool:
    return (isinstance(g, Restrict) and g.action == STOP_ACTION
            and isinstance(g.body, Act) and STOP_ACTION in g.body.activity.alpha)


def print_expr(g: Expr) -> str:
    """Canonical print; static prints re-parse to the same AST."""
    return _print(g, _PAR)
