"""Actions, multiactions and timed activities.

A multiaction is a finite multiset over actions and their conjugates.  An
activity pairs a multiaction with either a probability (stochastic) or a
fixed integer delay plus a positive weight (deterministic).  Deterministic
activities with delay 0 are immediate, the rest are waiting.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union


@dataclass(frozen=True, slots=True)
class Action:
    name: str
    conjugated: bool = False

    def conjugate(self) -> "Action":
        return Action(self.name, not self.conjugated)

    def sort_key(self) -> tuple:
        # non-conjugates before conjugates, then lexicographic
        return (self.conjugated, self.name)

    def __str__(self) -> str:
        return ("~" + self.name) if self.conjugated else self.name


@dataclass(frozen=True, slots=True)
class Multiaction:
    """Immutable multiset of actions; entries are sorted (action, count) pairs."""

    entries: tuple[tuple[Action, int], ...] = ()

    @staticmethod
    def of(actions: Iterable[Action] = ()) -> "Multiaction":
        counts: dict[Action, int] = {}
        for a in actions:
            counts[a] = counts.get(a, 0) + 1
        return Multiaction._from_counts(counts)

    @staticmethod
    def _from_counts(counts: dict[Action, int]) -> "Multiaction":
        items = tuple(sorted(((a, n) for a, n in counts.items() if n > 0),
                             key=lambda it: it[0].sort_key()))
        return Multiaction(items)

    def count(self, a: Action) -> int:
        for b, n in self.entries:
            if b == a:
                return n
        return 0

    def __contains__(self, a: Action) -> bool:
        return self.count(a) > 0

    def __iter__(self) -> Iterator[Action]:
        for a, n in self.entries:
            for _ in range(n):
                yield a

    def __len__(self) -> int:
        return sum(n for _, n in self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def alphabet(self) -> frozenset[Action]:
        return frozenset(a for a, _ in self.entries)

    def __add__(self, other: "Multiaction") -> "Multiaction":
        counts = {a: n for a, n in self.entries}
        for a, n in other.entries:
            counts[a] = counts.get(a, 0) + n
        return Multiaction._from_counts(counts)

    def __sub__(self, other: "Multiaction") -> "Multiaction":
        counts = {a: n for a, n in self.entries}
        for a, n in other.entries:
            counts[a] = max(0, counts.get(a, 0) - n)
        return Multiaction._from_counts(counts)

    def touches(self, a: Action) -> bool:
        """True if the multiaction mentions a or its conjugate."""
        base = Action(a.name)
        return base in self or base.conjugate() in self

    def relabel(self, fn: "RelabelMap") -> "Multiaction":
        return Multiaction.of(fn.apply(a) for a in self)

    def __str__(self) -> str:
        return "{%s}" % ",".join(str(a) for a in self)


def sync_multiactions(alpha: Multiaction, beta: Multiaction, a: Action) -> Multiaction:
    """Merge two multiactions over a handshake on `a`: one exemplar of `a` and
    one of its conjugate are removed from the multiset sum."""
    base = Action(a.name)
    conj = base.conjugate()
    if not ((base in alpha and conj in beta) or (conj in alpha and base in beta)):
        raise ValueError(
            f"multiactions {alpha} and {beta} cannot synchronize on {base}")
    return (alpha + beta) - Multiaction.of((base, conj))


@dataclass(frozen=True, slots=True)
class RelabelMap:
    """Bijection on actions, preserving conjugation, given on base actions.

    Unmentioned actions map to themselves; the extension to conjugates is
    automatic.  Fails construction unless the extended map is a permutation.
    """

    pairs: tuple[tuple[Action, Action], ...]

    @staticmethod
    def of(pairs: Iterable[tuple[Action, Action]]) -> "RelabelMap":
        table: dict[Action, Action] = {}
        for src, dst in pairs:
            if src.conjugated:
                raise ValueError(f"relabeling source {src} must be a base action")
            if src in table and table[src] != dst:
                raise ValueError(f"relabeling maps {src} twice")
            table[src] = dst
        fn = RelabelMap(tuple(sorted(table.items(), key=lambda it: it[0].sort_key())))
        fn._check_bijection()
        return fn

    def _table(self) -> dict[Action, Action]:
        return dict(self.pairs)

    def apply(self, a: Action) -> Action:
        table = self._table()
        base = Action(a.name)
        if base in table:
            img = table[base]
            return img.conjugate() if a.conjugated else img
        return a

    def _check_bijection(self) -> None:
        domain: set[Action] = set()
        for src, dst in self.pairs:
            domain.update((src, src.conjugate(), dst, dst.conjugate()))
        image = {self.apply(a) for a in domain}
        if image != domain:
            raise ValueError("relabeling is not a bijection preserving conjugates")

    def __str__(self) -> str:
        return "[%s]" % ",".join(f"{s}->{d}" for s, d in self.pairs)


# --- numberings -------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Leaf:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True, slots=True)
class PairNum:
    left: "Numbering"
    right: "Numbering"

    def __str__(self) -> str:
        return f"({self.left})({self.right})"


Numbering = Union[Leaf, PairNum]


def content(num: Numbering) -> frozenset[int]:
    if isinstance(num, Leaf):
        return frozenset((num.value,))
    return content(num.left) | content(num.right)


# --- activity kinds ---------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Stochastic:
    prob: Fraction

    def __post_init__(self) -> None:
        if not (0 < self.prob < 1):
            raise ValueError(f"probability {self.prob} must lie in (0;1)")

    def __str__(self) -> str:
        return str(self.prob)


@dataclass(frozen=True, slots=True)
class Deterministic:
    delay: int
    weight: Fraction

    def __post_init__(self) -> None:
        if self.delay < 0:
            raise ValueError(f"delay {self.delay} must be a non-negative integer")
        if self.weight <= 0:
            raise ValueError(f"weight {self.weight} must be positive")

    def __str__(self) -> str:
        return f"#{self.delay}:{self.weight}"


Kind = Union[Stochastic, Deterministic]


class Activity:
    """A multiaction with a stochastic or deterministic annotation.

    Activities produced by synchronization in different orders carry
    different numbering trees with the same leaf content; such products are
    the same activity, so equality and hashing go through the numbering
    content rather than its shape.
    """

    __slots__ = ("alpha", "kind", "num", "_key")

    def __init__(self, alpha: Multiaction, kind: Kind, num: Optional[Numbering] = None):
        self.alpha = alpha
        self.kind = kind
        self.num = num
        self._key = (alpha, kind, None if num is None else content(num))

    def numbered(self, num: Numbering) -> "Activity":
        return Activity(self.alpha, self.kind, num)

    @property
    def is_stochastic(self) -> bool:
        return isinstance(self.kind, Stochastic)

    @property
    def is_deterministic(self) -> bool:
        return isinstance(self.kind, Deterministic)

    @property
    def is_immediate(self) -> bool:
        return isinstance(self.kind, Deterministic) and self.kind.delay == 0

    @property
    def is_waiting(self) -> bool:
        return isinstance(self.kind, Deterministic) and self.kind.delay >= 1

    @property
    def delay(self) -> int:
        assert isinstance(self.kind, Deterministic)
        return self.kind.delay

    @property
    def weight(self) -> Fraction:
        assert isinstance(self.kind, Deterministic)
        return self.kind.weight

    @property
    def prob(self) -> Fraction:
        assert isinstance(self.kind, Stochastic)
        return self.kind.prob

    def relabel(self, fn: RelabelMap) -> "Activity":
        return Activity(self.alpha.relabel(fn), self.kind, self.num)

    def sort_key(self) -> tuple:
        num_key = tuple(sorted(self._key[2])) if self._key[2] is not None else ()
        return (num_key, str(self.alpha), str(self.kind))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Activity) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __str__(self) -> str:
        return f"({self.alpha},{self.kind})"

    def display(self) -> str:
        """Activity with its numbering, for diagnostics and serialization."""
        return str(self) + (f"@{self.num}" if self.num is not None else "")

    def __repr__(self) -> str:
        return f"Activity({self.display()})"


def sync_activities(u: Activity, v: Activity, a: Action) -> Activity:
    """Synchronization product of two activities over `a`.

    Stochastic activities multiply their probabilities, deterministic ones
    with equal delays add their weights.  The product's numbering is the pair
    of the operand numberings; there is no self-synchronization, so the
    operands must be distinct enumerated activities.
    """
    gamma = sync_multiactions(u.alpha, v.alpha, a)
    if isinstance(u.kind, Stochastic) and isinstance(v.kind, Stochastic):
        kind: Kind = Stochastic(u.kind.prob * v.kind.prob)
    elif isinstance(u.kind, Deterministic) and isinstance(v.kind, Deterministic):
        if u.kind.delay != v.kind.delay:
            raise ValueError(
                f"cannot synchronize deterministic activities with delays "
                f"{u.kind.delay} and {v.kind.delay}")
        kind = Deterministic(u.kind.delay, u.kind.weight + v.kind.weight)
    else:
        raise ValueError("cannot synchronize a stochastic with a deterministic activity")
    if u.num is None or v.num is None:
        raise ValueError("only enumerated activities can be synchronized")
    if content(u.num) & content(v.num):
        raise ValueError("no self-synchronization: operands share numbering content")
    return Activity(gamma, kind, PairNum(u.num, v.num))
