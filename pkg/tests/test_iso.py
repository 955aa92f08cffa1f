from fractions import Fraction

import pytest

from dtsdpbc import IsoMismatch, IsoWitness, find_iso, verify_witness
from dtsdpbc.lts import Lts, LtsState, LtsTransition, Tag

from fixtures import EXAMPLES, rg_of, ts_of


def test_identity_witness_on_itself():
    ts = ts_of(EXAMPLES["tsitchoswim"][0])
    result = find_iso(ts, ts)
    assert isinstance(result, IsoWitness)
    assert verify_witness(ts, ts, result)


@pytest.mark.parametrize("name", sorted(EXAMPLES))
def test_ts_isomorphic_to_rg(name):
    text = EXAMPLES[name][0]
    ts, rg = ts_of(text), rg_of(text)
    result = find_iso(ts, rg)
    assert isinstance(result, IsoWitness), getattr(result, "reason", None)
    assert verify_witness(ts, rg, result)
    assert result.mapping[ts.initial] == rg.initial


def test_symmetry():
    text = EXAMPLES["tsparwsm"][0]
    forward = find_iso(ts_of(text), rg_of(text))
    backward = find_iso(rg_of(text), ts_of(text))
    assert isinstance(forward, IsoWitness) and isinstance(backward, IsoWitness)


def test_probability_perturbation_is_detected():
    # the travel system against itself with the two transport speeds swapped
    fast = ts_of("[({a},1/2)*(({b},#1:1);((({c},#0:1);({d},1/2))"
                 "[](({e},#0:2);({f},1/3))))*stop]")
    slow = ts_of("[({a},1/2)*(({b},#1:1);((({c},#0:1);({d},1/3))"
                 "[](({e},#0:2);({f},1/2))))*stop]")
    result = find_iso(fast, slow)
    assert isinstance(result, IsoMismatch)


def test_state_count_mismatch_reason():
    a = ts_of(EXAMPLES["tschowm"][0])
    b = ts_of(EXAMPLES["tschowsm"][0])
    result = find_iso(a, b)
    assert isinstance(result, IsoMismatch) and "state counts" in result.reason


def test_verify_rejects_wrong_mapping():
    ts = ts_of(EXAMPLES["tschowm"][0])
    assert not verify_witness(ts, ts, IsoWitness((1, 0, 2)))


def test_labels_compare_by_content_not_tree_shape():
    half, third = Fraction(1, 2), Fraction(1, 3)
    from dtsdpbc.activities import (Activity, Leaf, Multiaction, PairNum,
                                    Stochastic)
    left = Activity(Multiaction.of(()), Stochastic(half * third),
                    PairNum(Leaf(1), Leaf(2)))
    right = Activity(Multiaction.of(()), Stochastic(half * third),
                     PairNum(Leaf(2), Leaf(1)))

    def tiny(act):
        states = [LtsState("s1", "start", Tag.ST),
                  LtsState("s2", "done", Tag.ST)]
        transitions = [
            LtsTransition(0, frozenset((act,)), half, 1),
            LtsTransition(0, frozenset(), half, 0),
            LtsTransition(1, frozenset(), Fraction(1), 1),
        ]
        return Lts("ts", states, transitions, 0)

    assert isinstance(find_iso(tiny(left), tiny(right)), IsoWitness)


def test_witness_serialization():
    ts = ts_of(EXAMPLES["trprob"][0])
    result = find_iso(ts, rg_of(EXAMPLES["trprob"][0]))
    doc = result.to_json_dict()
    assert doc["isomorphic"] is True and len(doc["pairs"]) == 2
