"""Independent re-derivation of executable steps, used to cross-check the
semantics engine.

The engine generates moves bottom-up.  The oracle instead decides, top-down
and label-directed, whether a candidate step label is derivable from a given
expression, enumerating rule instances at every node (splitting the label
over parallel components by activity numbering, un-synchronizing products at
synchronization nodes).  Candidate labels are drawn from the closure of the
expression's activities under synchronization products.
"""

from __future__ import annotations

from itertools import combinations

from dtsdpbc.activities import Action, Activity, content, sync_activities
from dtsdpbc.syntax import (Act, Bar, DChoice, DIter, DPar, DRelabel, DRestrict,
                            DSeq, DSync, DynExpr, Expr, Iter, Par, Relabel,
                            Restrict, Seq, StaticExpr, Sync, floor_static,
                            static_acts)
from dtsdpbc.semantics import StateSpace, _touches


def _operators(e: StaticExpr) -> tuple[set[Action], set]:
    """Synchronization actions and relabeling maps occurring in e."""
    actions: set[Action] = set()
    maps: set = set()
    if isinstance(e, (Seq, Par)) or type(e).__name__ == "Choice":
        for side in (e.left, e.right):
            acts, fns = _operators(side)
            actions |= acts
            maps |= fns
    elif isinstance(e, Relabel):
        actions, maps = _operators(e.body)
        maps = maps | {e.fn}
    elif isinstance(e, Restrict):
        actions, maps = _operators(e.body)
    elif isinstance(e, Sync):
        actions, maps = _operators(e.body)
        actions = actions | {Action(e.action.name)}
    elif isinstance(e, Iter):
        for side in (e.init, e.body, e.term):
            acts, fns = _operators(side)
            actions |= acts
            maps |= fns
    return actions, maps


def activity_universe(e: StaticExpr) -> set[Activity]:
    """Syntax activities closed under synchronization products and under the
    relabelings occurring in the expression."""
    acts = {a.activity for a in static_acts(e)}
    actions, maps = _operators(e)
    grew = True
    while grew:
        grew = False
        for fn in maps:
            for u in list(acts):
                image = u.relabel(fn)
                if image not in acts:
                    acts.add(image)
                    grew = True
        for u in list(acts):
            for v in list(acts):
                for base in actions:
                    if u == v or content(u.num) & content(v.num):
                        continue
                    if base not in u.alpha or base.conjugate() not in v.alpha:
                        continue
                    if u.is_stochastic != v.is_stochastic:
                        continue
                    if u.is_deterministic and u.delay != v.delay:
                        continue
                    product = sync_activities(u, v, base)
                    if product not in acts:
                        acts.add(product)
                        grew = True
    return acts


def candidate_labels(e: StaticExpr) -> list[frozenset]:
    """All uniform-kind labels over the universe with disjoint numberings."""
    acts = sorted(activity_universe(e), key=Activity.sort_key)
    labels = []
    for r in range(1, len(acts) + 1):
        for combo in combinations(acts, r):
            used: set[int] = set()
            ok = True
            for a in combo:
                leaves = content(a.num)
                if used & leaves:
                    ok = False
                    break
                used |= leaves
            if ok:
                labels.append(frozenset(combo))
    return labels


def _leaf_numbers(g: Expr) -> frozenset[int]:
    return frozenset(n for a in static_acts(floor_static(g))
                     for n in content(a.activity.num))


def _kind(label: frozenset) -> str:
    kinds = {"sto" if a.is_stochastic else "imm" if a.is_immediate else "wait"
             for a in label}
    return kinds.pop() if len(kinds) == 1 else "mixed"


def _unsync(label: frozenset, base: Action, universe: set[Activity]) -> set[frozenset]:
    """Labels that re-synchronize to the given one at a `sy` node."""
    out = {label}
    frontier = [label]
    while frontier:
        current = frontier.pop()
        for p in current:
            if p.num is None or len(content(p.num)) < 2:
                continue
            for u in universe:
                for v in universe:
                    if u == v or content(u.num) | content(v.num) != content(p.num):
                        continue
                    if content(u.num) & content(v.num):
                        continue
                    if base not in u.alpha or base.conjugate() not in v.alpha:
                        continue
                    if u.is_stochastic != v.is_stochastic:
                        continue
                    if u.is_deterministic and u.delay != v.delay:
                        continue
                    if sync_activities(u, v, base) != p:
                        continue
                    expanded = (current - {p}) | {u, v}
                    if expanded not in out:
                        out.add(expanded)
                        frontier.append(expanded)
    return out


def derivable(space: StateSpace, h: DynExpr, label: frozenset,
              universe: set[Activity], ctx: tuple = ()) -> bool:
    if _kind(label) == "mixed":
        return False
    if isinstance(h, Bar):
        if h.under or not isinstance(h.expr, Act):
            return False
        act = h.expr.activity
        if label != frozenset((act,)):
            return False
        return h.expr.stamp == 1 if act.is_waiting else True
    if isinstance(h, DSeq):
        dyn = h.left if isinstance(h.left, DynExpr) else h.right
        return derivable(space, dyn, label, universe, ctx)
    if isinstance(h, DChoice):
        dyn = h.left if isinstance(h.left, DynExpr) else h.right
        alt = h.right if isinstance(h.left, DynExpr) else h.left
        return (space._guard(_kind(label), dyn, alt, ctx)
                and derivable(space, dyn, label, universe, ctx))
    if isinstance(h, DPar):
        left_leaves = _leaf_numbers(h.left)
        right_leaves = _leaf_numbers(h.right)
        lab_l = frozenset(a for a in label if content(a.num) <= left_leaves)
        lab_r = frozenset(a for a in label if content(a.num) <= right_leaves)
        if lab_l | lab_r != label or lab_l & lab_r:
            return False
        if lab_l and lab_r:
            return (derivable(space, h.left, lab_l, universe, ctx)
                    and derivable(space, h.right, lab_r, universe, ctx))
        active, idle, part = ((h.left, h.right, lab_l) if lab_l
                              else (h.right, h.left, lab_r))
        if not derivable(space, active, part, universe, ctx):
            return False
        return True if _kind(part) == "imm" else space._stang(idle, ctx)
    if isinstance(h, DRelabel):
        inner_universe = activity_universe(floor_static(h.body))
        wanted = sorted(label, key=Activity.sort_key)
        for combo in combinations(sorted(inner_universe, key=Activity.sort_key),
                                  len(wanted)):
            if sorted((a.relabel(h.fn) for a in combo),
                      key=Activity.sort_key) == wanted \
                    and frozenset(a.relabel(h.fn) for a in combo) == label:
                if derivable(space, h.body, frozenset(combo), universe,
                             ctx + (("f", h.fn),)):
                    return True
        return False
    if isinstance(h, DRestrict):
        if _touches(label, h.action):
            return False
        return derivable(space, h.body, label, universe, ctx + (("rs", h.action),))
    if isinstance(h, DSync):
        base = Action(h.action.name)
        return any(derivable(space, h.body, inner, universe,
                             ctx + (("sy", h.action),))
                   for inner in _unsync(label, base, universe))
    if isinstance(h, DIter):
        if isinstance(h.init, DynExpr):
            return derivable(space, h.init, label, universe, ctx)
        dyn = h.body if isinstance(h.body, DynExpr) else h.term
        alt = h.term if isinstance(h.body, DynExpr) else h.body
        return (space._guard(_kind(label), dyn, alt, ctx)
                and derivable(space, dyn, label, universe, ctx))
    raise TypeError(f"not a dynamic expression: {h!r}")


def oracle_exec(space: StateSpace, cls) -> frozenset:
    """Non-empty executable labels by exhaustive candidate checking."""
    universe = activity_universe(space.expr)
    out = set()
    for label in candidate_labels(space.expr):
        if any(derivable(space, h, label, universe) for h in cls.saturated):
            out.add(label)
    return frozenset(out)
