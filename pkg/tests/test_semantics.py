from fractions import Fraction

import pytest

from dtsdpbc import (EMPTY_STEP, StateSpace, Tag, build_ts, can_steps,
                     enabled_sets, enumerate_activities, equivalence_class,
                     now_steps, parse_static, print_expr, saturate,
                     timer_decrement)
from dtsdpbc.errors import BudgetExceededError, NotRegularError, StampedInputError
from dtsdpbc.lts import check_probability_rows
from dtsdpbc.syntax import Act, Bar, DChoice, DPar, static_acts

from fixtures import EXAMPLES, expr_of, ts_of
from oracles import oracle_exec

F = Fraction


def acts_of(expr):
    return {str(a.activity.alpha): a.activity for a in static_acts(expr)}


def names(label):
    return sorted(str(a.alpha) for a in label)


def label_set(steps):
    return {tuple(names(l)) for l in steps}


# --- structural equivalence and saturation ---------------------------------

def test_class_of_waiting_choice_contains_both_saturated_forms():
    expr = expr_of("({a},#3:1)[]({b},1/3)")
    cls = equivalence_class(Bar(False, expr))
    prints = {print_expr(h) for h in cls.saturated}
    assert "^[({a},#3:1)^3][]({b},1/3)" in prints
    assert "({a},#3:1)^3[]^[({b},1/3)]" in prints
    assert cls.is_initial() and not cls.is_final()


def test_final_class():
    expr = expr_of("({a},1/2)")
    cls = equivalence_class(Bar(True, expr))
    assert cls.is_final()
    assert can_steps(cls.canonical) == frozenset()


def test_class_of_plain_stochastic_activity():
    expr = expr_of("({a},1/2)")
    cls = equivalence_class(Bar(False, expr))
    assert cls.members == {Bar(False, expr)}


def test_saturate_stamps_newly_enabled_waiting():
    expr = expr_of("({a},#3:1)[]({b},1/3)")
    a_leaf, b_leaf = static_acts(expr)
    unsaturated = DChoice(a_leaf, Bar(False, b_leaf))
    result = saturate(unsaturated)
    assert result == DChoice(Act(a_leaf.activity, 3), Bar(False, b_leaf))
    # already saturated input is untouched
    assert saturate(result) == result


def test_freshly_overlined_waiting_gets_full_stamp():
    expr = expr_of("({a},#2:1)")
    cls = equivalence_class(Bar(False, expr))
    assert print_expr(cls.canonical) == "^[({a},#2:1)^2]"
    with pytest.raises(ValueError):
        saturate(Bar(False, expr))  # not operative: the stamp rule applies


def test_timer_decrement():
    expr = expr_of("({a},#3:1)[]({b},1/3)")
    a_leaf, b_leaf = static_acts(expr)
    g = DChoice(Bar(False, Act(a_leaf.activity, 3)), b_leaf)
    assert timer_decrement(g) == DChoice(Bar(False, Act(a_leaf.activity, 2)), b_leaf)
    # a stamp of 1 stays 1
    g1 = DChoice(Bar(False, Act(a_leaf.activity, 1)), b_leaf)
    assert timer_decrement(g1) == g1
    # no stamps: identity
    assert timer_decrement(Bar(False, expr)) == Bar(False, expr)


def test_saturate_rejects_non_operative():
    expr = expr_of("({a},1/2);({b},1/2)")
    with pytest.raises(ValueError):
        saturate(Bar(False, expr))


# --- enabled sets -----------------------------------------------------------

def test_enabled_sets_choice():
    expr = expr_of("({a},#3:1)[]({b},1/3)")
    cls = equivalence_class(Bar(False, expr))
    sto, imm, wait, new = enabled_sets(cls)
    assert names(wait) == ["{a}"] and names(sto) == ["{b}"] and not imm
    assert names(new) == ["{a}"]
    assert [(str(a.alpha), v) for a, v in sorted(cls.timers.items(),
                                                 key=lambda kv: str(kv[0]))] \
        == [("{a}", 3)]


def test_enabled_sets_parallel_mixture():
    cls = equivalence_class(Bar(False, expr_of(EXAMPLES["tspariwm"][0])))
    sto, imm, wait, new = enabled_sets(cls)
    assert names(imm) == ["{a}"]
    assert names(wait) == ["{b}", "{c}"]
    assert not sto
    assert {str(a.alpha): v for a, v in cls.timers.items()} == {"{b}": 2, "{c}": 3}


def test_enabled_sets_final_state_empty():
    cls = equivalence_class(Bar(True, expr_of("({a},1/2)")))
    assert all(not s for s in enabled_sets(cls))


# --- potential and executable steps ------------------------------------------

def test_can_and_now_prioritize_immediates():
    expr = expr_of("(({a},#0:1)[]({b},#0:2))||({c},1/2)")
    a_leaf = list(static_acts(expr))[0]
    b_leaf = list(static_acts(expr))[1]
    c_leaf = list(static_acts(expr))[2]
    g = DPar(DChoice(Bar(False, a_leaf), b_leaf), Bar(False, c_leaf))
    assert label_set(can_steps(g)) == {("{a}",), ("{c}",), ("{a}", "{c}")}
    assert label_set(now_steps(g)) == {("{a}",)}


def test_can_downward_closure():
    g = Bar(False, expr_of("({a},1/2)||({b},1/2)"))
    cls = equivalence_class(g)
    for h in cls.operative:
        steps = can_steps(h)
        for label in steps:
            for a in label:
                assert frozenset((a,)) in steps


def test_can_of_waiting_timer_above_one_is_empty():
    expr = expr_of("({a},#2:1)")
    leaf = next(static_acts(expr))
    assert can_steps(Bar(False, Act(leaf.activity, 2))) == frozenset()
    assert label_set(can_steps(Bar(False, Act(leaf.activity, 1)))) == {("{a}",)}


def test_exec_respects_class_level_priorities():
    # one member enables an immediate, a structurally equivalent member a
    # stochastic activity: only the immediate step is executable
    space = StateSpace(expr_of("({a},#0:1)[]({b},1/2)"))
    steps = space.exec_steps(space.initial())
    assert label_set(steps) == {("{a}",)}
    assert space.classify(space.initial()) is Tag.V


def test_exec_absorbing_state_has_empty_step_only():
    space = StateSpace(expr_of("({a},1/2)"))
    final = space.exec_map(space.initial())[
        next(l for l in space.exec_steps(space.initial()) if l)]
    assert space.exec_steps(final) == frozenset((EMPTY_STEP,))
    assert space.pt(EMPTY_STEP, final) == 1


def test_exec_trprob():
    space = StateSpace(expr_of("({a},1/2)[]({a},1/3)"))
    s1 = space.initial()
    steps = space.exec_steps(s1)
    assert EMPTY_STEP in steps and len(steps) == 3


def test_waiting_steps_are_maximal():
    # two non-conflicting waiting activities with countdown 1 fire together
    space = StateSpace(expr_of("({a},#1:1)||({b},#1:2)"))
    steps = space.exec_steps(space.initial())
    assert label_set(steps) == {("{a}", "{b}")}
    assert space.classify(space.initial()) is Tag.WT


# --- probabilities -----------------------------------------------------------

def test_pf_pt_pm_stochastic_choice():
    space = StateSpace(expr_of("({a},1/2)[]({a},1/3)"))
    s1 = space.initial()
    (a1, a2) = sorted((a for l in space.exec_steps(s1) for a in l),
                      key=lambda a: a.sort_key())
    assert space.pf(frozenset((a1,)), s1) == F(1, 3)   # rho (1 - chi)
    assert space.pf(EMPTY_STEP, s1) == F(1, 3)         # (1-rho)(1-chi)
    assert space.pt(frozenset((a1,)), s1) == F(2, 5)
    assert space.pt(frozenset((a2,)), s1) == F(1, 5)
    assert space.pt(EMPTY_STEP, s1) == F(2, 5)
    target = space.exec_map(s1)[frozenset((a1,))]
    assert space.pm(s1, target) == F(3, 5)
    assert space.pm(target, target) == 1


def test_pf_pt_immediate_weights():
    space = StateSpace(expr_of("({a},#0:1)[]({a},#0:2)"))
    s1 = space.initial()
    weights = sorted(space.pf(l, s1) for l in space.exec_steps(s1))
    assert weights == [F(1), F(2)]
    assert sorted(space.pt(l, s1) for l in space.exec_steps(s1)) \
        == [F(1, 3), F(2, 3)]
    final = next(iter(space.exec_map(s1).values()))
    assert space.pm(s1, final) == 1


def test_empty_move_may_change_the_state():
    # a running countdown makes the clock tick a move, not a loop
    space = StateSpace(expr_of("({a},#3:1)[]({b},1/3)"))
    s1 = space.initial()
    s2 = space.exec_map(s1)[EMPTY_STEP]
    assert s2 != s1
    assert space.pm(s1, s2) == F(2, 3)
    # without any countdown the empty step loops
    space2 = StateSpace(expr_of("({a},1/2)"))
    s = space2.initial()
    assert space2.exec_map(s)[EMPTY_STEP] == s


# --- transition systems -------------------------------------------------------

@pytest.mark.parametrize("name", sorted(EXAMPLES))
def test_example_shapes(name):
    text, states, st, wt, v = EXAMPLES[name]
    ts = ts_of(text)
    tags = [s.tag for s in ts.states]
    assert (len(ts.states), tags.count(Tag.ST), tags.count(Tag.WT),
            tags.count(Tag.V)) == (states, st, wt, v)
    check_probability_rows(ts)


def test_tspariwm_partition_by_name():
    ts = ts_of(EXAMPLES["tspariwm"][0])
    by_tag = {tag: [s.name for s in ts.states if s.tag is tag] for tag in Tag}
    assert by_tag[Tag.ST] == ["s2", "s5"]
    assert by_tag[Tag.WT] == ["s3", "s4"]
    assert by_tag[Tag.V] == ["s1"]


def test_tschowm_structure():
    ts = ts_of(EXAMPLES["tschowm"][0])
    moves = [(ts.states[t.src].name, names(t.label), t.prob,
              ts.states[t.dst].name) for t in ts.transitions]
    assert moves == [
        ("s1", [], F(1), "s2"),
        ("s2", ["{a}"], F(1), "s3"),
        ("s3", [], F(1), "s3"),
    ]


def test_travel_system_structure():
    ts = ts_of(EXAMPLES["tsitchoswim"][0])
    assert len(ts.states) == 5 and len(ts.transitions) == 9
    self_loops = {ts.states[t.src].name for t in ts.transitions
                  if t.src == t.dst}
    assert self_loops == {"s1", "s4", "s5"}


def test_sync_product_label():
    ts = ts_of(EXAMPLES["tsparsyrswm"][0])
    product = [a for t in ts.transitions for a in t.label]
    assert len(product) == 1
    assert str(product[0]) == "({},#2:3)"


def test_kind_homogeneous_labels():
    for text, *_ in EXAMPLES.values():
        for tr in ts_of(text).transitions:
            kinds = {"sto" if a.is_stochastic else "imm" if a.is_immediate
                     else "wait" for a in tr.label}
            assert len(kinds) <= 1


def test_state_timers_exposed():
    ts = ts_of(EXAMPLES["tschowsm"][0])
    assert dict(ts.states[0].timers) == {"({a},#3:1)": 3}
    assert dict(ts.states[1].timers) == {"({a},#3:1)": 2}


def test_budget_guard():
    with pytest.raises(BudgetExceededError):
        build_ts(expr_of(EXAMPLES["tsitchoswim"][0]), budget=2)


def test_non_regular_and_stamped_inputs_rejected():
    with pytest.raises(NotRegularError):
        build_ts(enumerate_activities(parse_static(
            "[({a},1/2)*(({b},1/2)||({c},1/2))*({d},1/2)]")))
    with pytest.raises(StampedInputError):
        build_ts(enumerate_activities(parse_static("({a},#3:1)^2")))


# --- oracle cross-check -------------------------------------------------------

ORACLE_CASES = [
    "({a},1/2)[]({a},1/3)",
    "({a},#0:1)[]({b},1/2)",
    "({a},#2:1)[]({b},#3:2)",
    "({a},#1:1)||({b},#1:2)",
    "({a},#3:1)||({b},1/3)",
    "(({a},#2:1)||({~a},#2:2)) sy a rs a",
    "(({a},1/2)||({~a},1/3)) sy a",
    "[({a},1/2)*({b},#2:1)*({c},1/3)]",
    "(({a},1/2);({b},1/2))[a->b,b->a]",
    "({a},#2:1) rs a",
]


@pytest.mark.parametrize("text", ORACLE_CASES)
def test_exec_matches_rule_tree_oracle(text):
    space = StateSpace(expr_of(text))
    ts = space.build()
    for state in ts.states:
        cls = state.payload
        engine = frozenset(l for l in space.exec_steps(cls) if l)
        assert engine == oracle_exec(space, cls), state.canonical
