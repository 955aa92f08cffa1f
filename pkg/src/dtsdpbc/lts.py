"""Labeled probabilistic transition systems, shared by the operational and
the net semantics.

A transition carries a step label (a set of enumerated activities, possibly
empty) and an exact rational probability.  States are tagged s-tangible,
w-tangible or vanishing.  Per source state the outgoing probabilities sum to
exactly 1.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional

from .activities import Activity

StepLabel = frozenset  # frozenset[Activity]

EMPTY_STEP: StepLabel = frozenset()


class Tag(enum.Enum):
    ST = "ST"  # s-tangible: only (possibly empty) stochastic steps
    WT = "WT"  # w-tangible: only non-empty waiting steps
    V = "V"    # vanishing: only non-empty immediate steps


def label_sort_key(label: StepLabel) -> tuple:
    return (len(label), tuple(sorted(a.sort_key() for a in label)))


def label_str(label: StepLabel) -> str:
    if not label:
        return "{}"
    return "{%s}" % ",".join(str(a) for a in sorted(label, key=Activity.sort_key))


@dataclass(frozen=True)
class LtsState:
    name: str            # s1, s2, ... in deterministic BFS order
    canonical: str       # full canonical description
    tag: Tag
    timers: tuple[tuple[str, int], ...] = ()  # running countdowns, by display key
    payload: Any = None  # backing state object (equivalence class / net state)

    def display(self, width: int = 60) -> str:
        if len(self.canonical) <= width:
            return self.canonical
        digest = hashlib.sha1(self.canonical.encode()).hexdigest()[:6]
        return self.canonical[: width - 7] + "#" + digest


@dataclass(frozen=True)
class LtsTransition:
    src: int
    label: StepLabel
    prob: Fraction
    dst: int


@dataclass
class Lts:
    kind: str  # "ts" | "rg"
    states: list[LtsState]
    transitions: list[LtsTransition]
    initial: int = 0

    def __post_init__(self) -> None:
        self._out: list[list[LtsTransition]] = [[] for _ in self.states]
        for tr in self.transitions:
            self._out[tr.src].append(tr)

    def outgoing(self, i: int) -> list[LtsTransition]:
        return self._out[i]

    def pm(self, i: int, j: int) -> Fraction:
        """Probability to move i -> j by executing any step."""
        return sum((tr.prob for tr in self._out[i] if tr.dst == j), Fraction(0))

    def tangible_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.states) if s.tag is not Tag.V]

    def vanishing_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.states) if s.tag is Tag.V]

    def state_index(self, name: str) -> int:
        for i, s in enumerate(self.states):
            if s.name == name or s.canonical == name:
                return i
        raise KeyError(f"no state named {name!r}")

    # --- serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "initial": self.initial,
            "states": [
                {
                    "id": i,
                    "name": s.name,
                    "canonical": s.canonical,
                    "tag": s.tag.value,
                    "timers": {key: value for key, value in s.timers},
                }
                for i, s in enumerate(self.states)
            ],
            "transitions": [
                {
                    "from": tr.src,
                    "label": [a.display() for a in
                              sorted(tr.label, key=Activity.sort_key)],
                    "prob": str(tr.prob),
                    "to": tr.dst,
                }
                for tr in self.transitions
            ],
        }

    def to_dot(self, title: Optional[str] = None) -> str:
        lines = ["digraph lts {"]
        if title:
            lines.append(f'  label="{_dot_escape(title)}";')
        lines.append("  rankdir=TB;")
        lines.append('  __init [shape=point, style=invis];')
        for i, s in enumerate(self.states):
            if s.tag is Tag.ST:
                shape = "shape=ellipse"
            elif s.tag is Tag.WT:
                shape = "shape=ellipse, peripheries=2"
            else:
                shape = "shape=box"
            lines.append(
                f'  n{i} [label="{_dot_escape(s.name)}\\n{_dot_escape(s.display())}", {shape}];')
        lines.append(f"  __init -> n{self.initial};")
        for tr in self.transitions:
            text = f"{label_str(tr.label)} : {tr.prob}"
            lines.append(f'  n{tr.src} -> n{tr.dst} [label="{_dot_escape(text)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def check_probability_rows(lts: Lts) -> None:
    """Internal sanity check: every state's outgoing probabilities sum to 1."""
    for i in range(len(lts.states)):
        total = sum((tr.prob for tr in lts.outgoing(i)), Fraction(0))
        if total != 1:
            raise AssertionError(
                f"outgoing probabilities of {lts.states[i].name} sum to {total}")
