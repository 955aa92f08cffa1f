"""Stochastic processes of a transition system, with exact arithmetic.

From the one-step move probabilities we derive the sojourn-time vectors, the
one-step chain (DTMC), the embedded chain with self-loops abstracted away
(EDTMC), and the reduced chain over tangible states obtained by eliminating
vanishing states (RDTMC).  Steady states are computed by exact rational
elimination; the three routes to the stationary distribution of the
underlying semi-Markov chain must agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import networkx as nx

from .errors import AnalysisError
from .lts import Lts, Tag

Matrix = tuple[tuple[Fraction, ...], ...]
PMF = tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


# --- exact linear algebra ---------------------------------------------------

def _mat_mul(a: Matrix, b: Matrix) -> Matrix:
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    return tuple(tuple(sum((a[i][x] * b[x][j] for x in range(k)), ZERO)
                       for j in range(m)) for i in range(n))


def _vec_mul(v: Sequence[Fraction], a: Matrix) -> PMF:
    n = len(v)
    return tuple(sum((v[i] * a[i][j] for i in range(n)), ZERO)
                 for j in range(len(a[0]) if a else 0))


def _identity(n: int) -> Matrix:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def _is_zero(a: Matrix) -> bool:
    return all(x == 0 for row in a for x in row)


def invert(a: Matrix) -> Matrix:
    """Exact inverse by Gauss-Jordan elimination; raises on singular input."""
    n = len(a)
    work = [list(row) + list(ident) for row, ident in zip(a, _identity(n))]
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col] != 0), None)
        if pivot is None:
            raise AnalysisError("matrix is singular")
        work[col], work[pivot] = work[pivot], work[col]
        factor = work[col][col]
        work[col] = [x / factor for x in work[col]]
        for r in range(n):
            if r != col and work[r][col] != 0:
                scale = work[r][col]
                work[r] = [x - scale * y for x, y in zip(work[r], work[col])]
    return tuple(tuple(row[n:]) for row in work)


def _stationary(p: Matrix) -> PMF:
    """Unique probability vector with v P = v, for an irreducible stochastic
    matrix (or a single absorbing state)."""
    n = len(p)
    if n == 1:
        return (ONE,)
    # rows: (P - I)^T plus the normalization row; solve the overdetermined
    # but consistent system by elimination
    rows = [[p[j][i] - (ONE if i == j else ZERO) for j in range(n)] + [ZERO]
            for i in range(n)]
    rows.append([ONE] * n + [ONE])
    pivots: list[int] = []
    r = 0
    for col in range(n):
        pivot = next((k for k in range(r, len(rows)) if rows[k][col] != 0), None)
        if pivot is None:
            raise AnalysisError("stationary system is underdetermined")
        rows[r], rows[pivot] = rows[pivot], rows[r]
        factor = rows[r][col]
        rows[r] = [x / factor for x in rows[r]]
        for k in range(len(rows)):
            if k != r and rows[k][col] != 0:
                scale = rows[k][col]
                rows[k] = [x - scale * y for x, y in zip(rows[k], rows[r])]
        pivots.append(col)
        r += 1
    for k in range(r, len(rows)):
        if rows[k][n] != 0:
            raise AnalysisError("stationary system is inconsistent")
    solution = [ZERO] * n
    for row_idx, col in enumerate(pivots):
        solution[col] = rows[row_idx][n]
    return tuple(solution)


# --- chain models -----------------------------------------------------------

@dataclass
class ChainModel:
    kind: str                  # "dtmc" | "edtmc" | "rdtmc"
    state_names: tuple[str, ...]
    lts_indices: tuple[int, ...]  # position of each chain state in the source LTS
    tpm: Matrix
    initial: int

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "initial": self.initial,
            "states": list(self.state_names),
            "matrix": [[str(x) for x in row] for row in self.tpm],
        }

    def to_csv(self) -> str:
        lines = ["state," + ",".join(self.state_names)]
        for name, row in zip(self.state_names, self.tpm):
            lines.append(name + "," + ",".join(str(x) for x in row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SojournVectors:
    sj: tuple[Optional[Fraction], ...]   # None encodes an infinite mean
    var: tuple[Optional[Fraction], ...]
    sl: tuple[Optional[Fraction], ...]


def _pm_matrix(lts: Lts) -> Matrix:
    n = len(lts.states)
    rows = []
    for i in range(n):
        row = [ZERO] * n
        for tr in lts.outgoing(i):
            row[tr.dst] += tr.prob
        rows.append(tuple(row))
    return tuple(rows)


def sojourn(lts: Lts) -> SojournVectors:
    """Mean and variance of the residence time, and the self-loop abstraction
    factor, per state."""
    pm = _pm_matrix(lts)
    sj: list[Optional[Fraction]] = []
    var: list[Optional[Fraction]] = []
    sl: list[Optional[Fraction]] = []
    for i, state in enumerate(lts.states):
        self_loop = pm[i][i]
        if state.tag is Tag.V:
            sj.append(ZERO)
            var.append(ZERO)
            if self_loop == 1:
                sl.append(None)  # absorbing loop of zero-time states
            else:
                sl.append(ONE / (ONE - self_loop) if self_loop else ONE)
        elif self_loop == 1:
            sj.append(None)
            var.append(None)
            sl.append(None)
        else:
            sj.append(ONE / (ONE - self_loop))
            var.append(self_loop / (ONE - self_loop) ** 2)
            sl.append(ONE / (ONE - self_loop))
    return SojournVectors(tuple(sj), tuple(var), tuple(sl))


def dtmc(lts: Lts) -> ChainModel:
    names = tuple(s.name for s in lts.states)
    return ChainModel("dtmc", names, tuple(range(len(names))),
                      _pm_matrix(lts), lts.initial)


def edtmc(lts: Lts) -> tuple[ChainModel, SojournVectors]:
    """Embedded chain: self-loops removed, remaining probabilities rescaled.
    An absorbing state yields an all-zero row."""
    pm = _pm_matrix(lts)
    vectors = sojourn(lts)
    n = len(lts.states)
    rows = []
    for i in range(n):
        if pm[i][i] == 1:
            rows.append(tuple([ZERO] * n))
            continue
        factor = vectors.sl[i]
        assert factor is not None
        rows.append(tuple(factor * pm[i][j] if i != j else ZERO for j in range(n)))
    names = tuple(s.name for s in lts.states)
    return (ChainModel("edtmc", names, tuple(range(n)), tuple(rows), lts.initial),
            vectors)


# --- stationary analysis ----------------------------------------------------

@dataclass(frozen=True)
class ChainStructure:
    closed_classes: tuple[tuple[int, ...], ...]
    period: Optional[int]  # of the single closed class, None when undefined


def chain_structure(chain: ChainModel) -> ChainStructure:
    n = len(chain.state_names)
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    for i in range(n):
        for j in range(n):
            if chain.tpm[i][j] != 0:
                graph.add_edge(i, j)
    components = list(nx.strongly_connected_components(graph))
    closed = []
    for comp in components:
        if all(dst in comp for src in comp for dst in graph.successors(src)):
            closed.append(tuple(sorted(comp)))
    closed.sort()
    period: Optional[int] = None
    if len(closed) == 1:
        comp = closed[0]
        sub = graph.subgraph(comp)
        if sub.number_of_edges():
            import math
            level = {comp[0]: 0}
            queue = [comp[0]]
            g = 0
            while queue:
                u = queue.pop(0)
                for v in sub.successors(u):
                    if v not in level:
                        level[v] = level[u] + 1
                        queue.append(v)
                    else:
                        g = math.gcd(g, level[u] + 1 - level[v])
            period = abs(g) or None
    return ChainStructure(tuple(closed), period)


def steady_state(chain: ChainModel) -> PMF:
    """Stationary PMF: zero outside the unique closed communicating class,
    the exact stationary vector inside it.

    For periodic chains this is the unique stationary distribution, not a
    limiting one.  An all-zero row (an absorbing state of an embedded chain)
    counts as a closed singleton class with point mass 1.
    """
    structure = chain_structure(chain)
    closed = structure.closed_classes
    if len(closed) != 1:
        names = [tuple(chain.state_names[i] for i in comp) for comp in closed]
        raise AnalysisError(f"multiple closed communicating classes: {names}")
    comp = closed[0]
    n = len(chain.state_names)
    result = [ZERO] * n
    if len(comp) == 1:
        result[comp[0]] = ONE
        return tuple(result)
    sub = tuple(tuple(chain.tpm[i][j] for j in comp) for i in comp)
    for i, row in zip(comp, sub):
        if sum(row, ZERO) != 1:
            raise AnalysisError(
                f"row of closed class does not sum to 1 at {chain.state_names[i]}")
    inner = _stationary(sub)
    for idx, value in zip(comp, inner):
        result[idx] = value
    return tuple(result)


def transient(chain: ChainModel, steps: int) -> PMF:
    """k-step PMF from the unit vector at the chain's initial state."""
    n = len(chain.state_names)
    vec: PMF = tuple(ONE if i == chain.initial else ZERO for i in range(n))
    for _ in range(steps):
        vec = _vec_mul(vec, chain.tpm)
    return vec


# --- the three routes to the SMC steady state -------------------------------

def _embed(lts: Lts, chain: ChainModel, values: Sequence[Fraction]) -> PMF:
    full = [ZERO] * len(lts.states)
    for idx, value in zip(chain.lts_indices, values):
        full[idx] = value
    return tuple(full)


def smc_pmf(lts: Lts) -> PMF:
    """Steady state of the underlying semi-Markov chain: the embedded-chain
    stationary vector weighted by mean sojourn times and renormalized.

    A tangible state with infinite mean sojourn can carry embedded
    probability only as the single absorbing closed class; its degenerate
    steady state is the point mass there.
    """
    chain, vectors = edtmc(lts)
    psi_star = steady_state(chain)
    weighted: list[Fraction] = []
    for i, state in enumerate(lts.states):
        if state.tag is Tag.V:
            weighted.append(ZERO)
            continue
        if vectors.sj[i] is None:
            if psi_star[i] == 1:
                return tuple(ONE if j == i else ZERO
                             for j in range(len(lts.states)))
            if psi_star[i] != 0:
                raise AnalysisError(
                    f"non-ergodic process: infinite mean sojourn in "
                    f"{lts.states[i].name} with positive embedded probability")
            weighted.append(ZERO)
            continue
        weighted.append(psi_star[i] * vectors.sj[i])
    total = sum(weighted, ZERO)
    if total == 0:
        raise AnalysisError("degenerate process: all weighted probabilities vanish")
    return tuple(w / total for w in weighted)


def smc_pmf_via_dtmc(lts: Lts) -> PMF:
    """Same distribution, by renormalizing the one-step chain's stationary
    vector over the tangible states."""
    psi = steady_state(dtmc(lts))
    tangible = set(lts.tangible_indices())
    total = sum((psi[i] for i in tangible), ZERO)
    if total == 0:
        raise AnalysisError("no stationary probability on tangible states")
    return tuple(psi[i] / total if i in tangible else ZERO
                 for i in range(len(lts.states)))


def rdtmc(lts: Lts) -> ChainModel:
    """Reduced chain over tangible states: vanishing states are eliminated
    through the fundamental sum of their internal moves."""
    if lts.states[lts.initial].tag is Tag.V:
        raise AnalysisError(
            "the initial state is vanishing; the reduced chain starts in a "
            "tangible state (rebuild with the vanishing prefix resolved)")
    p = _pm_matrix(lts)
    vanishing = lts.vanishing_indices()
    tangible = lts.tangible_indices()
    v, m = len(vanishing), len(tangible)
    c = tuple(tuple(p[i][j] for j in vanishing) for i in vanishing)
    d = tuple(tuple(p[i][j] for j in tangible) for i in vanishing)
    e = tuple(tuple(p[i][j] for j in vanishing) for i in tangible)
    f = tuple(tuple(p[i][j] for j in tangible) for i in tangible)
    if v:
        g = _vanishing_sum(c)
        egd = _mat_mul(_mat_mul(e, g), d)
        reduced = tuple(tuple(f[i][j] + egd[i][j] for j in range(m))
                        for i in range(m))
    else:
        reduced = f
    for i, row in enumerate(reduced):
        if sum(row, ZERO) != 1:
            raise AnalysisError(
                f"reduced row does not sum to 1 at {lts.states[tangible[i]].name}")
    names = tuple(lts.states[i].name for i in tangible)
    return ChainModel("rdtmc", names, tuple(tangible), reduced,
                      tangible.index(lts.initial))


def _vanishing_sum(c: Matrix) -> Matrix:
    """Sum of all powers of the vanishing-to-vanishing block: the finite sum
    when the block is nilpotent, else the exact inverse of (I - C)."""
    n = len(c)
    total = _identity(n)
    power = c
    for _ in range(n):
        if _is_zero(power):
            return total
        total = tuple(tuple(total[i][j] + power[i][j] for j in range(n))
                      for i in range(n))
        power = _mat_mul(power, c)
    if _is_zero(power):
        return total
    try:
        inverse = invert(tuple(tuple((ONE if i == j else ZERO) - c[i][j]
                                     for j in range(n)) for i in range(n)))
    except AnalysisError as exc:
        raise AnalysisError(
            "absorbing loops among vanishing states: specification error "
            "(zero time would pass forever)") from exc
    return inverse


def smc_pmf_via_rdtmc(lts: Lts) -> PMF:
    """Same distribution again, as the stationary vector of the reduced chain
    embedded back into the full state list."""
    chain = rdtmc(lts)
    return _embed(lts, chain, steady_state(chain))


# --- performance indices -----------------------------------------------------

def _resolve_state(lts: Lts, spec) -> int:
    if isinstance(spec, int):
        return spec
    return lts.state_index(str(spec))


def _activity_index(lts: Lts) -> dict[frozenset, object]:
    table: dict[frozenset, object] = {}
    for tr in lts.transitions:
        for act in tr.label:
            table[act._key[2]] = act  # numbering content identifies the activity
    return table


def _resolve_activity(lts: Lts, spec):
    table = _activity_index(lts)
    if isinstance(spec, int):
        key = frozenset((spec,))
    else:
        key = frozenset(int(x) for x in spec)
    if key not in table:
        raise AnalysisError(f"no activity numbered {sorted(key)} occurs in the system")
    return table[key]


def evaluate_index(lts: Lts, phi: PMF, vectors: SojournVectors, query: dict) -> Fraction:
    """One performance-index query; see the query-file schema in the README."""
    index = query.get("index")
    if index == "return_time":
        i = _resolve_state(lts, query["state"])
        if phi[i] == 0:
            raise AnalysisError("return time of a state with zero steady probability")
        return ONE / phi[i]
    if index == "time_fract":
        targets = query.get("states", [query.get("state")])
        return sum((phi[_resolve_state(lts, s)] for s in targets), ZERO)
    if index == "rlt_time_fract":
        top = sum((phi[_resolve_state(lts, s)] for s in query["states"]), ZERO)
        bottom = sum((phi[_resolve_state(lts, s)] for s in query["relative_to"]), ZERO)
        if bottom == 0:
            raise AnalysisError("relative time fraction against zero-probability states")
        return top / bottom
    if index == "exit_freq":
        i = _resolve_state(lts, query["state"])
        sj = vectors.sj[i]
        if sj == 0:
            raise AnalysisError("exit frequency of a vanishing state is undefined")
        if sj is None:
            return ZERO
        return phi[i] / sj
    if index == "acts_prob":
        wanted = {_resolve_activity(lts, a) for a in query["activities"]}
        total = ZERO
        for i in range(len(lts.states)):
            if phi[i] == 0:
                continue
            share = sum((tr.prob for tr in lts.outgoing(i)
                         if wanted <= set(tr.label)), ZERO)
            total += phi[i] * share
        return total
    if index == "exec_freq":
        act = _resolve_activity(lts, query["activity"])
        total = ZERO
        for i in range(len(lts.states)):
            sj = vectors.sj[i]
            if phi[i] == 0 or sj in (None, 0):
                continue
            share = sum((tr.prob for tr in lts.outgoing(i) if act in tr.label), ZERO)
            total += phi[i] / sj * share
        return total
    if index == "reward":
        rewards = query["rewards"]
        total = ZERO
        for name, value in rewards.items():
            r = Fraction(value)
            if not (0 <= r <= 1):
                raise AnalysisError(f"reward {r} for {name} outside [0,1]")
            total += phi[_resolve_state(lts, name)] * r
        return total
    raise AnalysisError(f"unknown index {index!r}")


# --- timer-free aggregation ---------------------------------------------------

@dataclass(frozen=True)
class AggregateRow:
    key: str
    members: tuple[str, ...]
    phi: Fraction
    sj: Optional[Fraction]
    var: Optional[Fraction]


def timer_free_aggregate(lts: Lts, phi: PMF,
                         vectors: SojournVectors) -> tuple[AggregateRow, ...]:
    """Group states that differ only in timer values (same underlying
    marking) and add up their steady probabilities and sojourn statistics."""
    groups: dict[str, list[int]] = {}
    for i, state in enumerate(lts.states):
        key = getattr(state.payload, "timer_free_key", None) or state.canonical
        groups.setdefault(key, []).append(i)

    def total(values: Iterable[Optional[Fraction]]) -> Optional[Fraction]:
        acc = ZERO
        for v in values:
            if v is None:
                return None
            acc += v
        return acc

    rows = []
    for key in sorted(groups):
        idxs = groups[key]
        rows.append(AggregateRow(
            key,
            tuple(lts.states[i].name for i in idxs),
            sum((phi[i] for i in idxs), ZERO),
            total(vectors.sj[i] for i in idxs),
            total(vectors.var[i] for i in idxs)))
    return tuple(rows)
