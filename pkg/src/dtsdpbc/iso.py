"""Label- and probability-preserving isomorphism of transition systems.

Two systems are isomorphic when a bijection on states maps the initial state
to the initial state and matches every transition exactly: same step label
(activities compared by multiaction, kind and numbering content) and same
rational probability.  The search refines candidate sets by iterated
signature hashing, then backtracks; a found witness is re-validated
transition by transition, independently of the search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .lts import Lts, label_sort_key, label_str


def _label_key(label) -> tuple:
    return label_sort_key(label)


def _edges(lts: Lts) -> set[tuple[int, tuple, object, int]]:
    return {(tr.src, _label_key(tr.label), tr.prob, tr.dst)
            for tr in lts.transitions}


@dataclass(frozen=True)
class IsoWitness:
    mapping: tuple[int, ...]  # state i of the first system -> mapping[i] in the second

    def to_json_dict(self) -> dict:
        return {"isomorphic": True,
                "pairs": [[i, j] for i, j in enumerate(self.mapping)]}


@dataclass(frozen=True)
class IsoMismatch:
    reason: str

    def to_json_dict(self) -> dict:
        return {"isomorphic": False, "reason": self.reason}


IsoResult = Union[IsoWitness, IsoMismatch]


def verify_witness(a: Lts, b: Lts, witness: IsoWitness) -> bool:
    """Check a claimed isomorphism from scratch."""
    n = len(a.states)
    mapping = witness.mapping
    if len(mapping) != n or len(b.states) != n or sorted(mapping) != list(range(n)):
        return False
    if mapping[a.initial] != b.initial:
        return False
    mapped = {(mapping[src], key, prob, mapping[dst])
              for src, key, prob, dst in _edges(a)}
    return mapped == _edges(b)


def _signatures(lts: Lts, rounds: int = 3) -> list:
    outgoing = [tuple(sorted((_label_key(tr.label), tr.prob, tr.dst)
                             for tr in lts.outgoing(i)))
                for i in range(len(lts.states))]
    incoming: list[list] = [[] for _ in lts.states]
    for tr in lts.transitions:
        incoming[tr.dst].append((_label_key(tr.label), tr.prob, tr.src))
    sig = [(lts.states[i].tag.value, i == lts.initial,
            tuple((k, p) for k, p, _ in outgoing[i]),
            tuple(sorted((k, p) for k, p, _ in incoming[i])))
           for i in range(len(lts.states))]
    for _ in range(rounds):
        sig = [(sig[i],
                tuple(sorted((k, p, sig[j]) for k, p, j in outgoing[i])),
                tuple(sorted((k, p, sig[j]) for k, p, j in incoming[i])))
               for i in range(len(lts.states))]
    return sig


def find_iso(a: Lts, b: Lts) -> IsoResult:
    """A witness bijection, or a certified reason why none exists."""
    if len(a.states) != len(b.states):
        return IsoMismatch(
            f"state counts differ: {len(a.states)} vs {len(b.states)}")
    if len(a.transitions) != len(b.transitions):
        return IsoMismatch(
            f"transition counts differ: {len(a.transitions)} vs {len(b.transitions)}")
    tags_a = sorted(s.tag.value for s in a.states)
    tags_b = sorted(s.tag.value for s in b.states)
    if tags_a != tags_b:
        return IsoMismatch(f"tag multisets differ: {tags_a} vs {tags_b}")

    sig_a, sig_b = _signatures(a), _signatures(b)
    if sorted(map(repr, sig_a)) != sorted(map(repr, sig_b)):
        return IsoMismatch("state signatures (tag + in/out label/probability "
                           "profiles) do not match")

    candidates = [[j for j in range(len(b.states)) if sig_a[i] == sig_b[j]]
                  for i in range(len(a.states))]

    out_a = [a.outgoing(i) for i in range(len(a.states))]
    edges_b = _edges(b)

    order = sorted(range(len(a.states)), key=lambda i: len(candidates[i]))
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def consistent(i: int, j: int) -> Optional[str]:
        for tr in out_a[i]:
            if tr.dst in mapping and (j, _label_key(tr.label), tr.prob,
                                      mapping[tr.dst]) not in edges_b:
                return (f"transition {a.states[i].name} -{label_str(tr.label)}:"
                        f"{tr.prob}-> {a.states[tr.dst].name} has no image")
        for tr in a.transitions:
            if tr.dst == i and tr.src in mapping and (
                    mapping[tr.src], _label_key(tr.label), tr.prob, j) not in edges_b:
                return "incoming transition has no image"
        return None

    last_failure = ["exhausted search"]

    def search(k: int) -> bool:
        if k == len(order):
            return True
        i = order[k]
        for j in candidates[i]:
            if j in used:
                continue
            if (i == a.initial) != (j == b.initial):
                continue
            problem = consistent(i, j)
            if problem is not None:
                last_failure[0] = problem
                continue
            mapping[i] = j
            used.add(j)
            if search(k + 1):
                return True
            del mapping[i]
            used.discard(j)
        return False

    if not search(0):
        return IsoMismatch(f"no bijection matches all transitions ({last_failure[0]})")
    witness = IsoWitness(tuple(mapping[i] for i in range(len(a.states))))
    if not verify_witness(a, b, witness):
        raise AssertionError("isomorphism search produced an invalid witness")
    return witness
