"""Builders for small hand-made logs."""

from ledgerlens.model import (
    SUCCESS,
    BlockchainLog,
    NetworkConfig,
    RangeRead,
    TransactionRecord,
    derive_transaction_type,
)

DEFAULT_CONFIG = NetworkConfig(300, 1.0, "Majority(Org1,Org2)")


def tx(co, activity="A", reads=(), writes=(), ranges=(), status=SUCCESS, ts=None, block=None,
       endorsers=("Org1.peer0", "Org2.peer0"), org=None, client=None, args=None):
    reads = tuple((k, v) for k, v in reads)
    writes = tuple((k, str(v)) for k, v in writes)
    ranges = tuple(RangeRead(s, e, tuple(obs)) for s, e, obs in ranges)
    org = org or ("Org1" if co % 2 == 0 else "Org2")
    client = client or f"{org}.client{(co // 2) % 2}"
    return TransactionRecord(
        client_ts=float(co * 10 if ts is None else ts),
        activity=activity,
        args=tuple(args) if args is not None else (str(co),),
        endorsers=tuple(endorsers),
        invoker_client=client,
        invoker_org=org,
        read_set=reads,
        write_set=writes,
        range_reads=ranges,
        status=status,
        tx_type=derive_transaction_type(reads, writes, ranges),
        commit_order=co,
        block_number=1 + co // 100 if block is None else block,
    )


def renumber(records, block_size=None):
    """Reassign commit orders 0..n-1 (and optionally blocks) in list order."""
    out = []
    for i, r in enumerate(records):
        d = dict(r.__dict__)
        for k in ("read_keys", "write_keys", "range_keys", "keys"):
            d.pop(k, None)
        d["commit_order"] = i
        if block_size:
            d["block_number"] = 1 + i // block_size
        out.append(TransactionRecord(**d))
    return out


def make_log(records, config=DEFAULT_CONFIG, block_size=None):
    return BlockchainLog.from_records(renumber(records, block_size), config)
