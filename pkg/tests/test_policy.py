from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import policy_truth

from ledgerlens.policy import (
    PolicyError,
    choose_endorsers,
    evaluate_policy,
    parse_policy,
    resolve_policy,
    standard_policy,
)

ORGS = ["Org1", "Org2", "Org3", "Org4"]
SUBSETS = [set(c) for r in range(5) for c in combinations(ORGS, r)]


@pytest.mark.parametrize("name", ["P1", "P2", "P3", "P4"])
def test_standard_policies_match_truth_tables(name):
    pol = standard_policy(name, 4)
    for s in SUBSETS:
        assert pol.evaluate(s) == policy_truth(name, s), (name, s)


@pytest.mark.parametrize(
    "text,canon",
    [
        ("And(Org1, Or(Org2,Org3))", "And(Org1, Or(Org2, Org3))"),
        ("OutOf(2, Org1, Org2, Org3)", "OutOf(2, Org1, Org2, Org3)"),
        ("majority(Org1,Org2,Org3)", "Majority(Org1, Org2, Org3)"),
        ("Org1", "Org1"),
    ],
)
def test_parse_and_canonical_spelling(text, canon):
    pol = parse_policy(text)
    assert str(pol) == canon
    assert str(parse_policy(str(pol))) == canon


def test_majority_is_strict():
    pol = parse_policy("Majority(Org1,Org2,Org3,Org4)")
    assert not pol.evaluate({"Org1", "Org2"})
    assert pol.evaluate({"Org1", "Org2", "Org3"})
    assert evaluate_policy("Majority(Org1,Org2)", ["Org1", "Org2"])
    assert not evaluate_policy("Majority(Org1,Org2)", ["Org1"])


@pytest.mark.parametrize("bad", ["", "And(", "And(Org1", "OutOf(x,Org1)", "OutOf(3,Org1,Org2)", "Xor(Org1,Org2)",
                                 "And(Org1,,Org2)", "Org1 Org2", "And()"])
def test_malformed_policies_raise(bad):
    with pytest.raises(PolicyError):
        parse_policy(bad)


def test_resolve_accepts_shorthand_and_expressions():
    assert str(resolve_policy("p4", 3)) == "OutOf(2, Org1, Org2, Org3)"
    assert str(resolve_policy("Or(Org1,Org2)", 2)) == "Or(Org1, Org2)"


@given(st.sampled_from(["P1", "P2", "P3", "P4"]), st.integers(1, 6),
       st.lists(st.floats(0.01, 10), min_size=6, max_size=6), st.integers(0, 2**32 - 1))
def test_chosen_endorsers_always_satisfy_policy(name, n_orgs, w, seed):
    pol = standard_policy(name, n_orgs)
    weights = {f"Org{i + 1}": w[i] for i in range(n_orgs)}
    chosen = choose_endorsers(pol, weights, np.random.default_rng(seed))
    assert pol.evaluate(chosen)
    assert chosen <= set(weights)
