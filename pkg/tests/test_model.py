import dataclasses

import pytest
from helpers import make_log, tx

from ledgerlens.model import (
    TOMBSTONE,
    Recommendation,
    RangeRead,
    Thresholds,
    derive_transaction_type,
    org_of,
    parse_key_values,
    validate_log,
)


@pytest.mark.parametrize(
    "reads,writes,ranges,expected",
    [
        ((("a", 1),), (), (), "read"),
        ((), (("a", "1"),), (), "write"),
        ((("a", 1),), (("a", "2"),), (), "update"),
        ((("a", 1),), (("b", "2"),), (), "update"),
        ((), (("a", TOMBSTONE),), (), "delete"),
        ((("a", 1),), (("a", TOMBSTONE),), (), "delete"),
        ((), (("a", "1"),), (RangeRead("a", "b"),), "range_read"),
        ((), (), (RangeRead("a", "b"),), "range_read"),
    ],
)
def test_transaction_type_derivation(reads, writes, ranges, expected):
    assert derive_transaction_type(reads, writes, ranges) == expected


def test_transaction_type_rejects_empty_rwset():
    with pytest.raises(ValueError):
        derive_transaction_type((), (), ())


def test_record_key_views():
    r = tx(0, reads=(("a", 1),), writes=(("b", "x"),), ranges=(("c", "e", (("c1", 2),)),))
    assert r.read_keys == {"a"} and r.write_keys == {"b"} and r.range_keys == {"c1"}
    assert r.keys == {"a", "b", "c1"}
    assert r.endorser_orgs == {"Org1", "Org2"}
    assert org_of("Org3.peer1") == "Org3" and org_of("solo") == "solo"


def test_thresholds_defaults_and_parsing():
    t = Thresholds()
    assert (t.rt1, t.rt2, t.bt, t.et, t.it, t.at, t.hk_frac, t.hk_min, t.ins) == (300, 0.3, 0.6, 0.5, 0.5, 0.4, 0.1, 5, 10)
    t2 = Thresholds.from_text("# tuned\nRT1 = 200\net=0.7\nhk_min = 3\n")
    assert (t2.rt1, t2.et, t2.hk_min) == (200.0, 0.7, 3)
    assert t2.with_(it=0.9).it == 0.9
    with pytest.raises(ValueError):
        Thresholds.from_text("bogus = 1")
    with pytest.raises(ValueError):
        Thresholds(et=1.5)
    with pytest.raises(ValueError):
        Thresholds(rt1=0)


def test_parse_key_values_errors_carry_line_numbers():
    assert parse_key_values("a = 1\n\n b='x' # c\n") == {"a": "1", "b": "x"}
    with pytest.raises(ValueError, match="line 2"):
        parse_key_values("a = 1\nnonsense\n")


def test_from_records_groups_blocks():
    log = make_log([tx(i, reads=(("a", 0),)) for i in range(5)], block_size=2)
    assert [b.tx_commit_orders for b in log.blocks] == [(0, 1), (2, 3), (4,)]
    assert [b.block_number for b in log.blocks] == [1, 2, 3]


def test_validate_log_accepts_well_formed():
    assert validate_log(make_log([tx(i, reads=(("a", 0),)) for i in range(4)])) == []


def test_validate_log_reports_each_violation():
    good = tx(0, reads=(("a", 0),))
    bad = [
        dataclasses.replace(good, commit_order=1, tx_type="write"),
        dataclasses.replace(good, commit_order=1, status="weird"),
        dataclasses.replace(good, commit_order=1, status="phantom_read_conflict"),
        dataclasses.replace(good, commit_order=1, read_set=(("a", -1),)),
        dataclasses.replace(good, commit_order=0),
    ]
    expect = ["does not match derived", "unknown status", "without range reads", "negative version", "duplicate"]
    from ledgerlens.model import BlockchainLog

    for b, msg in zip(bad, expect):
        problems = validate_log(BlockchainLog.from_records([good, b]))
        assert any(msg in p for p in problems), (msg, problems)
    back = dataclasses.replace(good, commit_order=1, block_number=0)
    assert any("decreases" in p for p in validate_log(BlockchainLog.from_records([good, back])))


def test_recommendation_validation_and_order():
    with pytest.raises(ValueError):
        Recommendation("nonsense", ({"x": 1},))
    with pytest.raises(ValueError):
        Recommendation("delta_writes", ())
    a = Recommendation("block_size_adaptation", ({"b_sizeavg": 1},))
    b = Recommendation("delta_writes", ({"first_commit_order": 7},))
    c = Recommendation("activity_reordering", ({"commit_order": 3},))
    assert [r.kind for r in sorted([a, b, c], key=Recommendation.sort_key)] == [
        "activity_reordering", "delta_writes", "block_size_adaptation"]
    assert c.level == "user" and b.level == "data" and a.level == "system"
    assert a.first_commit_order() == -1 and b.first_commit_order() == 7
