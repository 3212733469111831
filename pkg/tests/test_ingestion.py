import json

import pytest
from helpers import make_log, tx
from hypothesis import given, settings
from strategies import logs

from ledgerlens.canonical import dumps
from ledgerlens.ingestion import (
    RawDumpError,
    log_to_raw_lines,
    parse_raw_blocks,
    preprocess,
)
from ledgerlens.simulator import SimConfig, emit_raw, run


def _block(n, txs, **extra):
    return json.dumps({"raw_v": 1, "block_number": n, "transactions": txs, **extra})


APP = {"timestamp": 5.0, "kind": "application", "function": "Ship", "args": ["p1"], "endorsers": ["Org1.peer0"],
       "invoker": {"client": "Org1.client0", "org": "Org1"},
       "rwset": {"reads": [{"key": "product_p1", "version": 1}], "writes": [{"key": "product_p1", "value": "s"}]},
       "validation_code": "MVCC_READ_CONFLICT"}
CFG = {"timestamp": 0.0, "kind": "config", "config": {"block_count": 10, "block_timeout_s": 2.0,
                                                      "endorsement_policy": "Or(Org1, Org2)"}}


def test_preprocess_drops_config_and_numbers_commits():
    lines = [_block(0, [CFG]), "", _block(1, [APP, APP], cut_reason="count"), _block(2, [APP])]
    log = preprocess(parse_raw_blocks(lines))
    assert [r.commit_order for r in log] == [0, 1, 2]
    assert [b.block_number for b in log.blocks] == [1, 2]
    assert log.blocks[0].cut_reason == "count" and log.blocks[1].cut_reason == "flush"
    assert log.config.block_count == 10 and log.config.endorsement_policy == "Or(Org1, Org2)"
    r = log.records[0]
    assert (r.activity, r.status, r.tx_type, r.read_set) == ("Ship", "mvcc_read_conflict", "update", (("product_p1", 1),))


@pytest.mark.parametrize(
    "lines,block,path",
    [
        (["{not json"], 0, "$"),
        ([json.dumps({"raw_v": 2, "block_number": 1, "transactions": []})], 0, "$.raw_v"),
        ([_block(1, []), _block(1, [])], 1, "$.block_number"),
        ([_block(1, [{**APP, "validation_code": "WHAT"}])], 0, "$.transactions[0].validation_code"),
        ([_block(1, [{k: v for k, v in APP.items() if k != "invoker"}])], 0, "$.transactions[0].invoker"),
        ([_block(1, [{**APP, "timestamp": "soon"}])], 0, "$.transactions[0].timestamp"),
        ([_block(1, [{k: v for k, v in APP.items() if k != "rwset"}])], 0, "$.transactions[0].rwset"),
        ([_block(1, [{**APP, "rwset": {"reads": [{"key": "a"}]}}])], 0, "$.transactions[0].rwset"),
        ([_block(1, [{**APP, "rwset": {}}])], 0, "$.transactions[0].rwset"),
    ],
)
def test_errors_name_block_and_field(lines, block, path):
    with pytest.raises(RawDumpError) as err:
        preprocess(parse_raw_blocks(lines))
    assert err.value.block_index == block
    assert err.value.path == path


def test_simulated_raw_dump_round_trips_byte_identical():
    log, _ = run(SimConfig(n_transactions=300, workload_type="rangeread_heavy", seed=3))
    again = preprocess(parse_raw_blocks(emit_raw(log)))
    assert dumps(again) == dumps(log)


@settings(max_examples=60, deadline=None)
@given(logs(max_size=12))
def test_raw_round_trip_property(log):
    assert preprocess(parse_raw_blocks(log_to_raw_lines(log))) == log


def test_blocks_without_app_transactions_disappear():
    log = preprocess(parse_raw_blocks([_block(0, [CFG]), _block(3, [CFG]), _block(4, [APP])]))
    assert [b.block_number for b in log.blocks] == [4]
    assert len(make_log([tx(0, reads=(("a", 0),))])) == 1
