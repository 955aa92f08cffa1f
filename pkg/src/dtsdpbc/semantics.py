"""Step operational semantics.

States are structural-equivalence classes of dynamic expressions: the closure
of an expression under forward and backward applications of the inaction
rules.  Steps are multisets of enumerated activities derived by the action
rules, with exact rational execution probabilities; the empty step models one
clock tick in which every running countdown decrements.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .activities import Action, Activity, content, sync_activities
from .errors import BudgetExceededError, InternalError, NotRegularError, StampedInputError
from .lts import EMPTY_STEP, Lts, LtsState, LtsTransition, StepLabel, Tag, label_sort_key
from .syntax import (Act, Bar, Choice, DChoice, DIter, DPar, DRelabel, DRestrict,
                     DSeq, DSync, DynExpr, Expr, Iter, Par, Relabel, Restrict, Seq,
                     StaticExpr, Sync, check_regular, enumerate_activities,
                     is_enumerated, is_timer_free, map_expr, print_expr, strip_timers)

DEFAULT_BUDGET = 100_000


# --- timer decrement --------------------------------------------------------

def timer_decrement(g: Expr) -> Expr:
    """One clock tick: every timer stamp becomes max(1, stamp - 1)."""
    return map_expr(
        g, lambda a: Act(a.activity, max(1, a.stamp - 1)) if a.stamp is not None else a)


# --- inaction rewriting -----------------------------------------------------

def _forward_root(g: DynExpr) -> list[DynExpr]:
    out: list[DynExpr] = []
    if isinstance(g, Bar):
        if g.over:
            e = g.expr
            if isinstance(e, Act):
                if e.activity.is_waiting and e.stamp is None:
                    out.append(Bar(False, Act(e.activity, e.activity.delay)))
            elif isinstance(e, Seq):
                out.append(DSeq(Bar(False, e.left), e.right))
            elif isinstance(e, Choice):
                out.append(DChoice(Bar(False, e.left), e.right))
                out.append(DChoice(e.left, Bar(False, e.right)))
            elif isinstance(e, Par):
                out.append(DPar(Bar(False, e.left), Bar(False, e.right)))
            elif isinstance(e, Relabel):
                out.append(DRelabel(Bar(False, e.body), e.fn))
            elif isinstance(e, Restrict):
                out.append(DRestrict(Bar(False, e.body), e.action))
            elif isinstance(e, Sync):
                out.append(DSync(Bar(False, e.body), e.action))
            elif isinstance(e, Iter):
                out.append(DIter(Bar(False, e.init), e.body, e.term))
    elif isinstance(g, DSeq):
        left, right = g.left, g.right
        if isinstance(left, Bar) and left.under and isinstance(right, StaticExpr):
            out.append(DSeq(left.expr, Bar(False, right)))
        if isinstance(right, Bar) and right.under and isinstance(left, StaticExpr):
            out.append(Bar(True, Seq(left, right.expr)))
    elif isinstance(g, DChoice):
        left, right = g.left, g.right
        if isinstance(left, Bar) and left.under and isinstance(right, StaticExpr):
            out.append(Bar(True, Choice(left.expr, right)))
        if isinstance(right, Bar) and right.under and isinstance(left, StaticExpr):
            out.append(Bar(True, Choice(left, right.expr)))
    elif isinstance(g, DPar):
        left, right = g.left, g.right
        if (isinstance(left, Bar) and left.under
                and isinstance(right, Bar) and right.under):
            out.append(Bar(True, Par(left.expr, right.expr)))
    elif isinstance(g, DRelabel):
        if isinstance(g.body, Bar) and g.body.under:
            out.append(Bar(True, Relabel(g.body.expr, g.fn)))
    elif isinstance(g, DRestrict):
        if isinstance(g.body, Bar) and g.body.under:
            out.append(Bar(True, Restrict(g.body.expr, g.action)))
    elif isinstance(g, DSync):
        if isinstance(g.body, Bar) and g.body.under:
            out.append(Bar(True, Sync(g.body.expr, g.action)))
    elif isinstance(g, DIter):
        init, body, term = g.init, g.body, g.term
        statics = (isinstance(init, StaticExpr), isinstance(body, StaticExpr),
                   isinstance(term, StaticExpr))
        if isinstance(init, Bar) and init.under and statics[1] and statics[2]:
            out.append(DIter(init.expr, Bar(False, body), term))
        if isinstance(body, Bar) and body.under and statics[0] and statics[2]:
            out.append(DIter(init, Bar(False, body.expr), term))
            out.append(DIter(init, body.expr, Bar(False, term)))
        if isinstance(term, Bar) and term.under and statics[0] and statics[1]:
            out.append(Bar(True, Iter(init, body, term.expr)))
    return out


def _backward_root(g: DynExpr) -> list[DynExpr]:
    out: list[DynExpr] = []
    if isinstance(g, Bar):
        e = g.expr
        if g.over:
            if (isinstance(e, Act) and e.activity.is_waiting
                    and e.stamp == e.activity.delay):
                out.append(Bar(False, Act(e.activity, None)))
        else:
            if isinstance(e, Seq):
                out.append(DSeq(e.left, Bar(True, e.right)))
            elif isinstance(e, Choice):
                out.append(DChoice(Bar(True, e.left), e.right))
                out.append(DChoice(e.left, Bar(True, e.right)))
            elif isinstance(e, Par):
                out.append(DPar(Bar(True, e.left), Bar(True, e.right)))
            elif isinstance(e, Relabel):
                out.append(DRelabel(Bar(True, e.body), e.fn))
            elif isinstance(e, Restrict):
                out.append(DRestrict(Bar(True, e.body), e.action))
            elif isinstance(e, Sync):
                out.append(DSync(Bar(True, e.body), e.action))
            elif isinstance(e, Iter):
                out.append(DIter(e.init, e.body, Bar(True, e.term)))
    elif isinstance(g, DSeq):
        left, right = g.left, g.right
        if isinstance(left, Bar) and left.over and isinstance(right, StaticExpr):
            out.append(Bar(False, Seq(left.expr, right)))
        if isinstance(right, Bar) and right.over and isinstance(left, StaticExpr):
            out.append(DSeq(Bar(True, left), right.expr))
    elif isinstance(g, DChoice):
        left, right = g.left, g.right
        if isinstance(left, Bar) and left.over and isinstance(right, StaticExpr):
            out.append(Bar(False, Choice(left.expr, right)))
        if isinstance(right, Bar) and right.over and isinstance(left, StaticExpr):
            out.append(Bar(False, Choice(left, right.expr)))
    elif isinstance(g, DPar):
        left, right = g.left, g.right
        if isinstance(left, Bar) and left.over and isinstance(right, Bar) and right.over:
            out.append(Bar(False, Par(left.expr, right.expr)))
    elif isinstance(g, DRelabel):
        if isinstance(g.body, Bar) and g.body.over:
            out.append(Bar(False, Relabel(g.body.expr, g.fn)))
    elif isinstance(g, DRestrict):
        if isinstance(g.body, Bar) and g.body.over:
            out.append(Bar(False, Restrict(g.body.expr, g.action)))
    elif isinstance(g, DSync):
        if isinstance(g.body, Bar) and g.body.over:
            out.append(Bar(False, Sync(g.body.expr, g.action)))
    elif isinstance(g, DIter):
        init, body, term = g.init, g.body, g.term
        statics = (isinstance(init, StaticExpr), isinstance(body, StaticExpr),
                   isinstance(term, StaticExpr))
        if isinstance(init, Bar) and init.over and statics[1] and statics[2]:
            out.append(Bar(False, Iter(init.expr, body, term)))
        if isinstance(body, Bar) and body.over and statics[0] and statics[2]:
            out.append(DIter(Bar(True, init), body.expr, term))
            out.append(DIter(init, Bar(True, body.expr), term))
        if isinstance(term, Bar) and term.over and statics[0] and statics[1]:
            out.append(DIter(init, Bar(True, body), term.expr))
    return out


def _rewrites(g: DynExpr, root_fn) -> list[DynExpr]:
    out = root_fn(g)
    if isinstance(g, (DSeq, DChoice, DPar)):
        if isinstance(g.left, DynExpr):
            out += [type(g)(x, g.right) for x in _rewrites(g.left, root_fn)]
        if isinstance(g.right, DynExpr):
            out += [type(g)(g.left, x) for x in _rewrites(g.right, root_fn)]
    elif isinstance(g, DRelabel):
        out += [DRelabel(x, g.fn) for x in _rewrites(g.body, root_fn)]
    elif isinstance(g, (DRestrict, DSync)):
        out += [type(g)(x, g.action) for x in _rewrites(g.body, root_fn)]
    elif isinstance(g, DIter):
        if isinstance(g.init, DynExpr):
            out += [DIter(x, g.body, g.term) for x in _rewrites(g.init, root_fn)]
        if isinstance(g.body, DynExpr):
            out += [DIter(g.init, x, g.term) for x in _rewrites(g.body, root_fn)]
        if isinstance(g.term, DynExpr):
            out += [DIter(g.init, g.body, x) for x in _rewrites(g.term, root_fn)]
    return out


def is_operative(g: DynExpr) -> bool:
    return not _rewrites(g, _forward_root)


def _closure(g: DynExpr, budget: int) -> frozenset[DynExpr]:
    seen = {g}
    frontier = [g]
    while frontier:
        h = frontier.pop()
        for x in _rewrites(h, _forward_root) + _rewrites(h, _backward_root):
            if x not in seen:
                seen.add(x)
                if len(seen) > budget:
                    raise BudgetExceededError(
                        f"equivalence class exceeds {budget} members")
                frontier.append(x)
    return frozenset(seen)


# --- equivalence classes ----------------------------------------------------

def _overlined_leaves(g: DynExpr) -> Iterator[Act]:
    if isinstance(g, Bar):
        if g.over and isinstance(g.expr, Act):
            yield g.expr
    elif isinstance(g, (DSeq, DChoice, DPar)):
        for side in (g.left, g.right):
            if isinstance(side, DynExpr):
                yield from _overlined_leaves(side)
    elif isinstance(g, (DRelabel, DRestrict, DSync)):
        yield from _overlined_leaves(g.body)
    elif isinstance(g, DIter):
        for side in (g.init, g.body, g.term):
            if isinstance(side, DynExpr):
                yield from _overlined_leaves(side)


def _all_acts(g: Expr) -> Iterator[Act]:
    if isinstance(g, Act):
        yield g
    elif isinstance(g, StaticExpr):
        if isinstance(g, (Seq, Choice, Par)):
            yield from _all_acts(g.left)
            yield from _all_acts(g.right)
        elif isinstance(g, (Relabel, Restrict, Sync)):
            yield from _all_acts(g.body)
        elif isinstance(g, Iter):
            yield from _all_acts(g.init)
            yield from _all_acts(g.body)
            yield from _all_acts(g.term)
    elif isinstance(g, Bar):
        yield from _all_acts(g.expr)
    elif isinstance(g, (DSeq, DChoice, DPar)):
        yield from _all_acts(g.left)
        yield from _all_acts(g.right)
    elif isinstance(g, (DRelabel, DRestrict, DSync)):
        yield from _all_acts(g.body)
    elif isinstance(g, DIter):
        yield from _all_acts(g.init)
        yield from _all_acts(g.body)
        yield from _all_acts(g.term)


@dataclass
class EqClass:
    """A structural-equivalence class: one state of the transition system."""

    members: frozenset
    operative: tuple
    saturated: tuple
    canonical: DynExpr
    key: str
    timers: dict  # enabled waiting Activity -> countdown value
    ena_sto: frozenset
    ena_imm: frozenset
    ena_wait: frozenset
    ena_wait_new: frozenset
    timer_free_key: Optional[str] = None  # filled in by build_ts

    def __hash__(self) -> int:
        return hash(self.key)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, EqClass) and self.key == other.key

    def is_final(self) -> bool:
        return any(isinstance(h, Bar) and h.under for h in self.members)

    def is_initial(self) -> bool:
        return any(isinstance(h, Bar) and h.over for h in self.members)


def equivalence_class(g: DynExpr, budget: int = DEFAULT_BUDGET) -> EqClass:
    members = _closure(g, budget)
    operative = tuple(sorted((h for h in members if is_operative(h)),
                             key=print_expr))
    if not operative:
        raise InternalError("equivalence class has no operative member")

    ena_sto, ena_imm, ena_wait, ena_wait_new = set(), set(), set(), set()
    for h in operative:
        for leaf in _overlined_leaves(h):
            act = leaf.activity
            if act.is_stochastic:
                ena_sto.add(act)
            elif act.is_immediate:
                ena_imm.add(act)
            elif leaf.stamp is not None:
                ena_wait.add(act)
                if leaf.stamp == act.delay:
                    ena_wait_new.add(act)

    def saturated_in(h: DynExpr) -> bool:
        stamped = {a.activity for a in _all_acts(h)
                   if a.stamp is not None and a.activity in ena_wait}
        return stamped == ena_wait

    saturated = tuple(h for h in operative if saturated_in(h))
    if not saturated:
        raise InternalError("equivalence class has no saturated operative member")

    timers: dict[Activity, int] = {}
    for h in saturated:
        for a in _all_acts(h):
            if a.stamp is not None and a.activity in ena_wait:
                previous = timers.get(a.activity)
                if previous is not None and previous != a.stamp:
                    raise InternalError(
                        f"inconsistent timers for {a.activity}: {previous} vs {a.stamp}")
                timers[a.activity] = a.stamp
    for act, value in timers.items():
        if not (1 <= value <= act.delay):
            raise InternalError(f"timer of {act} out of range: {value}")

    canonical = min(saturated, key=print_expr)
    return EqClass(members, operative, saturated, canonical, print_expr(canonical),
                   timers, frozenset(ena_sto), frozenset(ena_imm),
                   frozenset(ena_wait), frozenset(ena_wait_new))


def enabled_sets(cls: EqClass) -> tuple[frozenset, frozenset, frozenset, frozenset]:
    return cls.ena_sto, cls.ena_imm, cls.ena_wait, cls.ena_wait_new


def saturate(g: DynExpr, budget: int = DEFAULT_BUDGET) -> DynExpr:
    """Stamp every enabled waiting activity of [g] with its timer value.

    g must be operative; the result is the saturated member of the class with
    the same bar structure as g.
    """
    if not is_operative(g):
        raise ValueError("saturate expects an operative dynamic expression")
    cls = equivalence_class(g, budget)

    def fix(a: Act) -> Act:
        if a.stamp is None and a.activity in cls.timers:
            return Act(a.activity, cls.timers[a.activity])
        return a

    result = map_expr(g, fix)
    if result not in cls.members:
        raise InternalError("saturation left the equivalence class")
    return result


# --- potential and executable steps ----------------------------------------

def _step_kind(label: StepLabel) -> str:
    kinds = {("sto" if a.is_stochastic else "imm" if a.is_immediate else "wait")
             for a in label}
    if len(kinds) != 1:
        raise InternalError(f"mixed-kind step label: {sorted(map(str, label))}")
    return kinds.pop()


def _syncable(u: Activity, v: Activity, base: Action) -> bool:
    if u == v or (u.num is not None and v.num is not None
                  and content(u.num) & content(v.num)):
        return False
    conj = base.conjugate()
    if not (base in u.alpha and conj in v.alpha):
        return False
    if u.is_stochastic and v.is_stochastic:
        return True
    return (u.is_deterministic and v.is_deterministic and u.delay == v.delay)


def _sync_closure(labels: frozenset, action: Action) -> frozenset:
    base = Action(action.name)
    out = set(labels)
    frontier = list(labels)
    while frontier:
        label = frontier.pop()
        for u in label:
            for v in label:
                if _syncable(u, v, base):
                    product = sync_activities(u, v, base)
                    new = (label - {u, v}) | {product}
                    if new not in out:
                        out.add(new)
                        frontier.append(new)
    return frozenset(out)


def _touches(label: StepLabel, base: Action) -> bool:
    return any(a.alpha.touches(base) for a in label)


Context = tuple  # tuple of ("sy"|"rs", Action) / ("f", RelabelMap), root first


def apply_context(labels: frozenset, ctx: Context) -> frozenset:
    """Push candidate step labels through the enclosing sy/rs/[f] operators
    (innermost first)."""
    current = labels
    for op, arg in reversed(ctx):
        if op == "sy":
            current = _sync_closure(current, arg)
        elif op == "rs":
            current = frozenset(l for l in current if not _touches(l, arg))
        else:
            current = frozenset(frozenset(a.relabel(arg) for a in l) for l in current)
    return frozenset(current)


def can_steps(g: DynExpr, _memo: Optional[dict] = None) -> frozenset:
    """All non-empty step labels potentially executable from operative g."""
    memo = _memo if _memo is not None else {}
    return _can(g, memo)


def _can(g: DynExpr, memo: dict) -> frozenset:
    cached = memo.get(g)
    if cached is not None:
        return cached
    result: frozenset
    if isinstance(g, Bar):
        if g.under:
            result = frozenset()
        else:
            e = g.expr
            if not isinstance(e, Act):
                raise ValueError("potential steps are defined on operative expressions")
            act = e.activity
            if act.is_waiting:
                if e.stamp is None:
                    raise ValueError("unstamped overlined waiting activity is not operative")
                result = (frozenset((frozenset((act,)),)) if e.stamp == 1
                          else frozenset())
            else:
                result = frozenset((frozenset((act,)),))
    elif isinstance(g, (DSeq, DChoice)):
        dyn = g.left if isinstance(g.left, DynExpr) else g.right
        result = _can(dyn, memo)
    elif isinstance(g, DPar):
        left = _can(g.left, memo)
        right = _can(g.right, memo)
        combined = set(left) | set(right)
        for a in left:
            for b in right:
                combined.add(a | b)
        result = frozenset(combined)
    elif isinstance(g, DRelabel):
        result = frozenset(frozenset(a.relabel(g.fn) for a in l)
                           for l in _can(g.body, memo))
    elif isinstance(g, DRestrict):
        result = frozenset(l for l in _can(g.body, memo)
                           if not _touches(l, g.action))
    elif isinstance(g, DSync):
        result = _sync_closure(_can(g.body, memo), g.action)
    elif isinstance(g, DIter):
        dyn = next(side for side in (g.init, g.body, g.term)
                   if isinstance(side, DynExpr))
        result = _can(dyn, memo)
    else:
        raise TypeError(f"not a dynamic expression: {g!r}")
    memo[g] = result
    return result


def now_steps(g: DynExpr, ctx: Context = (), _memo: Optional[dict] = None) -> frozenset:
    """Steps executable from operative g: immediate steps pre-empt waiting
    ones, waiting steps pre-empt stochastic ones and must be maximal."""
    labels = apply_context(can_steps(g, _memo), ctx)
    immediate = frozenset(l for l in labels if all(a.is_immediate for a in l))
    if immediate:
        return immediate
    waiting = [l for l in labels if all(a.is_waiting for a in l)]
    if waiting:
        return frozenset(w for w in waiting
                         if not any(w < v for v in waiting))
    return labels


def _member_kind(g: DynExpr, ctx: Context, memo: dict) -> str:
    now = now_steps(g, ctx, memo)
    if not now or all(all(a.is_stochastic for a in l) for l in now):
        return "stang"
    if all(l and all(a.is_waiting for a in l) for l in now):
        return "wtang"
    if all(l and all(a.is_immediate for a in l) for l in now):
        return "vanish"
    raise InternalError("executable steps of one expression mix kinds")


# --- the state-space engine -------------------------------------------------

class StateSpace:
    """Derives the transition system of a regular, timer-free static
    expression via breadth-first exploration of equivalence classes."""

    def __init__(self, expr: StaticExpr, budget: int = DEFAULT_BUDGET,
                 auto_enumerate: bool = True):
        report = check_regular(expr)
        if not report.ok:
            raise NotRegularError(
                f"{report.reason} (at {'/'.join(report.path) or 'root'})")
        if not is_timer_free(expr):
            raise StampedInputError(
                "input carries timer stamps; only timer-free static expressions "
                "describe complete processes")
        if not is_enumerated(expr):
            if not auto_enumerate:
                raise ValueError("expression is not enumerated")
            expr = enumerate_activities(expr)
        self.expr = expr
        self.budget = budget
        self._classes: dict[str, EqClass] = {}
        self._member_index: dict[DynExpr, EqClass] = {}
        self._can_memo: dict = {}
        self._kind_memo: dict = {}
        self._init_memo: dict = {}
        self._moves_memo: dict = {}
        self._exec_memo: dict = {}
        self._dist_memo: dict = {}
        self._steps_taken = 0

    # equivalence classes ----------------------------------------------

    def class_of(self, g: DynExpr) -> EqClass:
        hit = self._member_index.get(g)
        if hit is not None:
            return hit
        cls = equivalence_class(g, self.budget)
        known = self._classes.get(cls.key)
        if known is not None:
            cls = known
        else:
            self._classes[cls.key] = cls
        for member in cls.members:
            self._member_index[member] = cls
        return cls

    def initial(self) -> EqClass:
        return self.class_of(Bar(False, self.expr))

    # rule preconditions -------------------------------------------------

    def _kinds_of(self, x: DynExpr, ctx: Context) -> frozenset:
        key = (x, ctx)
        hit = self._kind_memo.get(key)
        if hit is not None:
            return hit
        cls = self.class_of(x)
        kinds = frozenset(_member_kind(h, ctx, self._can_memo)
                          for h in cls.operative)
        self._kind_memo[key] = kinds
        return kinds

    def _stang(self, x: DynExpr, ctx: Context) -> bool:
        return self._kinds_of(x, ctx) == {"stang"}

    def _tang(self, x: DynExpr, ctx: Context) -> bool:
        # every structurally equivalent operative member must be tangible
        # (members may split between the stochastic and waiting kinds; only a
        # vanishing member vetoes the step)
        return "vanish" not in self._kinds_of(x, ctx)

    def _init(self, x: DynExpr) -> bool:
        hit = self._init_memo.get(x)
        if hit is None:
            hit = self.class_of(x).is_initial()
            self._init_memo[x] = hit
        return hit

    def _guard(self, kind: str, operand: DynExpr, alternative: StaticExpr,
               ctx: Context) -> bool:
        """Choice/iteration guard: an initial operand may proceed only when
        the freshly started alternative branch cannot pre-empt the step."""
        if kind == "imm":
            return True
        if not self._init(operand):
            return True
        alt = Bar(False, alternative)
        return self._stang(alt, ctx) if kind == "sto" else self._tang(alt, ctx)

    # action rules ---------------------------------------------------------

    def _moves(self, g: DynExpr, ctx: Context) -> frozenset:
        key = (g, ctx)
        hit = self._moves_memo.get(key)
        if hit is not None:
            return hit
        out: set[tuple[StepLabel, DynExpr]] = set()
        if isinstance(g, Bar):
            if g.over and isinstance(g.expr, Act):
                act = g.expr.activity
                if act.is_stochastic or act.is_immediate or g.expr.stamp == 1:
                    out.add((frozenset((act,)), Bar(True, Act(act))))
        elif isinstance(g, DSeq):
            if isinstance(g.left, DynExpr):
                for label, target in self._moves(g.left, ctx):
                    out.add((label, DSeq(target, g.right)))
            else:
                for label, target in self._moves(g.right, ctx):
                    out.add((label, DSeq(g.left, target)))
        elif isinstance(g, DChoice):
            left_dynamic = isinstance(g.left, DynExpr)
            operand = g.left if left_dynamic else g.right
            alternative = g.right if left_dynamic else g.left
            stripped = strip_timers(alternative)
            for label, target in self._moves(operand, ctx):
                if self._guard(_step_kind(label), operand, alternative, ctx):
                    out.add((label, DChoice(target, stripped) if left_dynamic
                             else DChoice(stripped, target)))
        elif isinstance(g, DPar):
            left_moves = self._moves(g.left, ctx)
            right_moves = self._moves(g.right, ctx)
            for moves, this, other, left_side in (
                    (left_moves, g.left, g.right, True),
                    (right_moves, g.right, g.left, False)):
                for label, target in moves:
                    kind = _step_kind(label)
                    if kind == "imm":
                        rest = other
                    elif self._stang(other, ctx):
                        rest = timer_decrement(other)
                    else:
                        continue
                    out.add((label, DPar(target, rest) if left_side
                             else DPar(rest, target)))
            for label_l, target_l in left_moves:
                for label_r, target_r in right_moves:
                    if _step_kind(label_l) == _step_kind(label_r):
                        out.add((label_l | label_r, DPar(target_l, target_r)))
        elif isinstance(g, DRelabel):
            for label, target in self._moves(g.body, ctx + (("f", g.fn),)):
                out.add((frozenset(a.relabel(g.fn) for a in label),
                         DRelabel(target, g.fn)))
        elif isinstance(g, DRestrict):
            for label, target in self._moves(g.body, ctx + (("rs", g.action),)):
                if not _touches(label, g.action):
                    out.add((label, DRestrict(target, g.action)))
        elif isinstance(g, DSync):
            base = Action(g.action.name)
            lifted = {(label, DSync(target, g.action))
                      for label, target in self._moves(g.body, ctx + (("sy", g.action),))}
            out = set(lifted)
            frontier = list(lifted)
            while frontier:
                label, target = frontier.pop()
                for u in label:
                    for v in label:
                        if _syncable(u, v, base):
                            product = sync_activities(u, v, base)
                            move = ((label - {u, v}) | {product}, target)
                            if move not in out:
                                out.add(move)
                                frontier.append(move)
        elif isinstance(g, DIter):
            if isinstance(g.init, DynExpr):
                for label, target in self._moves(g.init, ctx):
                    out.add((label, DIter(target, g.body, g.term)))
            elif isinstance(g.body, DynExpr):
                stripped = strip_timers(g.term)
                for label, target in self._moves(g.body, ctx):
                    if self._guard(_step_kind(label), g.body, g.term, ctx):
                        out.add((label, DIter(g.init, target, stripped)))
            else:
                stripped = strip_timers(g.body)
                for label, target in self._moves(g.term, ctx):
                    if self._guard(_step_kind(label), g.term, g.body, ctx):
                        out.add((label, DIter(g.init, stripped, target)))
        else:
            raise TypeError(f"not a dynamic expression: {g!r}")
        result = frozenset(out)
        self._moves_memo[key] = result
        return result

    # executable steps per state -----------------------------------------

    def _stang_class(self, cls: EqClass) -> bool:
        return all(_member_kind(h, (), self._can_memo) == "stang"
                   for h in cls.operative)

    def exec_map(self, cls: EqClass) -> dict:
        """Executable step labels of the state, with their target states."""
        hit = self._exec_memo.get(cls.key)
        if hit is not None:
            return hit
        out: dict[StepLabel, EqClass] = {}
        for h in cls.saturated:
            for label, target in self._moves(h, ()):
                target_cls = self.class_of(target)
                known = out.get(label)
                if known is not None and known is not target_cls:
                    raise InternalError(
                        f"step {sorted(map(str, label))} leads to two states")
                out[label] = target_cls
        if self._stang_class(cls):
            decremented = {self.class_of(timer_decrement(h)) for h in cls.saturated}
            if len(decremented) != 1:
                raise InternalError("clock tick target is not a single state")
            out[EMPTY_STEP] = decremented.pop()
        if not out:
            raise InternalError(f"stuck state: {cls.key}")
        return self._exec_memo.setdefault(cls.key, out)

    def exec_steps(self, cls: EqClass) -> frozenset:
        return frozenset(self.exec_map(cls).keys())

    def classify(self, cls: EqClass) -> Tag:
        labels = self.exec_steps(cls)
        if all(all(a.is_stochastic for a in l) for l in labels):
            return Tag.ST
        if all(l and all(a.is_waiting for a in l) for l in labels):
            return Tag.WT
        if all(l and all(a.is_immediate for a in l) for l in labels):
            return Tag.V
        raise InternalError(f"executable steps of {cls.key} mix kinds")

    # probabilities --------------------------------------------------------

    def pf(self, label: StepLabel, cls: EqClass) -> Fraction:
        labels = self.exec_steps(cls)
        if label not in labels:
            raise ValueError("step is not executable in this state")
        return self._pf_table(cls)[label]

    def _pf_table(self, cls: EqClass) -> dict:
        labels = self.exec_steps(cls)
        tag = self.classify(cls)
        table: dict[StepLabel, Fraction] = {}
        if tag is Tag.ST:
            singles = {next(iter(l)) for l in labels if len(l) == 1}
            for label in labels:
                p = Fraction(1)
                for a in label:
                    p *= a.prob
                for b in singles:
                    if b not in label:
                        p *= 1 - b.prob
                table[label] = p
        else:
            for label in labels:
                table[label] = sum((a.weight for a in label), Fraction(0))
        return table

    def pt(self, label: StepLabel, cls: EqClass) -> Fraction:
        table = self._pf_table(cls)
        if label not in table:
            raise ValueError("step is not executable in this state")
        return table[label] / sum(table.values())

    def distribution(self, cls: EqClass) -> list:
        """[(label, PT, target EqClass)] sorted by label."""
        hit = self._dist_memo.get(cls.key)
        if hit is not None:
            return hit
        moves = self.exec_map(cls)
        table = self._pf_table(cls)
        total = sum(table.values())
        result = [(label, table[label] / total, moves[label])
                  for label in sorted(moves, key=label_sort_key)]
        if sum(p for _, p, _ in result) != 1:
            raise InternalError(f"step probabilities of {cls.key} do not sum to 1")
        self._dist_memo[cls.key] = result
        return result

    def pm(self, cls: EqClass, target: EqClass) -> Fraction:
        return sum((p for _, p, t in self.distribution(cls) if t == target),
                   Fraction(0))

    # transition-system construction ---------------------------------------

    def build(self) -> Lts:
        start = self.initial()
        order: dict[str, int] = {start.key: 0}
        classes: list[EqClass] = [start]
        transitions: list[LtsTransition] = []
        queue = [start]
        explored = 0
        while queue:
            cls = queue.pop(0)
            explored += 1
            if explored > self.budget:
                raise BudgetExceededError(f"state budget {self.budget} exceeded")
            src = order[cls.key]
            for label, prob, target in self.distribution(cls):
                idx = order.get(target.key)
                if idx is None:
                    idx = len(classes)
                    order[target.key] = idx
                    classes.append(target)
                    queue.append(target)
                    if len(classes) > self.budget:
                        raise BudgetExceededError(
                            f"state budget {self.budget} exceeded")
                transitions.append(LtsTransition(src, label, prob, idx))

        states = []
        for i, cls in enumerate(classes):
            if cls.timer_free_key is None:
                cls.timer_free_key = self.class_of(
                    strip_timers(cls.canonical)).key
            timers = tuple(sorted((str(act), value)
                                  for act, value in cls.timers.items()))
            states.append(LtsState(f"s{i + 1}", cls.key, self.classify(cls),
                                   timers, cls))
        return Lts("ts", states, transitions, 0)


def build_ts(expr: StaticExpr, budget: int = DEFAULT_BUDGET) -> Lts:
    return StateSpace(expr, budget).build()
