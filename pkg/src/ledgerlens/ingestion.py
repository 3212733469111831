"""Raw block dumps -> canonical BlockchainLog.

A raw dump is newline-delimited JSON, one block per line::

    {"raw_v": 1, "block_number": 3, "cut_reason": "count",
     "transactions": [{"timestamp": 12.5, "kind": "application",
                       "function": "Ship", "args": ["p7"],
                       "endorsers": ["Org1.peer0"],
                       "invoker": {"client": "Org1.client0", "org": "Org1"},
                       "rwset": {"reads": [{"key": "product_p7", "version": 1}],
                                 "writes": [{"key": "product_p7", "value": "shipped"}],
                                 "range_reads": []},
                       "validation_code": "VALID"}]}

Configuration transactions (``"kind": "config"``) may carry a ``config``
object with ``block_count``, ``block_timeout_s`` and ``endorsement_policy``;
it becomes the log's configuration echo.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator

from .model import (
    ENDORSEMENT_POLICY_FAILURE,
    MVCC_READ_CONFLICT,
    PHANTOM_READ_CONFLICT,
    SUCCESS,
    BlockchainLog,
    NetworkConfig,
    RangeRead,
    TransactionRecord,
    derive_transaction_type,
)

RAW_DUMP_VERSION = 1

VALIDATION_CODES = {
    "VALID": SUCCESS,
    "MVCC_READ_CONFLICT": MVCC_READ_CONFLICT,
    "PHANTOM_READ_CONFLICT": PHANTOM_READ_CONFLICT,
    "PHANTOM": PHANTOM_READ_CONFLICT,
    "ENDORSEMENT_POLICY_FAILURE": ENDORSEMENT_POLICY_FAILURE,
}
STATUS_TO_CODE = {
    SUCCESS: "VALID",
    MVCC_READ_CONFLICT: "MVCC_READ_CONFLICT",
    PHANTOM_READ_CONFLICT: "PHANTOM_READ_CONFLICT",
    ENDORSEMENT_POLICY_FAILURE: "ENDORSEMENT_POLICY_FAILURE",
}

__all__ = [
    "RawDumpError",
    "RawTransaction",
    "RawBlock",
    "RawBlockDump",
    "iter_raw_blocks",
    "parse_raw_blocks",
    "preprocess",
    "derive_transaction_type",
    "raw_block_to_json",
]


class RawDumpError(ValueError):
    def __init__(self, block_index: int, path: str, message: str):
        self.block_index = block_index
        self.path = path
        super().__init__(f"block {block_index}: {path}: {message}")


@dataclass(frozen=True)
class RawTransaction:
    timestamp: float
    kind: str
    function: str
    args: tuple[str, ...]
    endorsers: tuple[str, ...]
    invoker_client: str
    invoker_org: str
    rwset: dict | None
    validation_code: str
    config: dict | None = None


@dataclass(frozen=True)
class RawBlock:
    block_number: int
    transactions: tuple[RawTransaction, ...]
    cut_reason: str | None = None


@dataclass(frozen=True)
class RawBlockDump:
    blocks: tuple[RawBlock, ...]

    @property
    def n_transactions(self) -> int:
        return sum(len(b.transactions) for b in self.blocks)


def _need(obj: dict, key: str, typ, idx: int, path: str):
    if not isinstance(obj, dict) or key not in obj:
        raise RawDumpError(idx, f"{path}.{key}", "missing field")
    val = obj[key]
    if typ is float:
        ok = isinstance(val, (int, float)) and not isinstance(val, bool)
    elif typ is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    else:
        ok = isinstance(val, typ)
    if not ok:
        raise RawDumpError(idx, f"{path}.{key}", f"expected {typ.__name__}, got {type(val).__name__}")
    return val


def _parse_tx(doc: dict, idx: int, path: str) -> RawTransaction:
    if not isinstance(doc, dict):
        raise RawDumpError(idx, path, "transaction must be an object")
    kind = _need(doc, "kind", str, idx, path)
    if kind not in ("application", "config"):
        raise RawDumpError(idx, f"{path}.kind", f"unknown tx kind {kind!r}")
    ts = float(_need(doc, "timestamp", float, idx, path))
    if kind == "config":
        cfg = doc.get("config")
        if cfg is not None and not isinstance(cfg, dict):
            raise RawDumpError(idx, f"{path}.config", "expected object")
        return RawTransaction(ts, kind, doc.get("function", "config"), (), (), "", "", doc.get("rwset"),
                              doc.get("validation_code", "VALID"), cfg)
    invoker = _need(doc, "invoker", dict, idx, path)
    args = _need(doc, "args", list, idx, path)
    endorsers = _need(doc, "endorsers", list, idx, path)
    rwset = doc.get("rwset")
    if rwset is not None and not isinstance(rwset, dict):
        raise RawDumpError(idx, f"{path}.rwset", "expected object")
    return RawTransaction(
        timestamp=ts,
        kind=kind,
        function=_need(doc, "function", str, idx, path),
        args=tuple(str(a) for a in args),
        endorsers=tuple(str(e) for e in endorsers),
        invoker_client=_need(invoker, "client", str, idx, f"{path}.invoker"),
        invoker_org=_need(invoker, "org", str, idx, f"{path}.invoker"),
        rwset=rwset,
        validation_code=_need(doc, "validation_code", str, idx, path),
    )


def _parse_block(doc, idx: int) -> RawBlock:
    if not isinstance(doc, dict):
        raise RawDumpError(idx, "$", "block must be a JSON object")
    v = doc.get("raw_v")
    if v != RAW_DUMP_VERSION:
        raise RawDumpError(idx, "$.raw_v", f"expected {RAW_DUMP_VERSION}, got {v!r}")
    number = _need(doc, "block_number", int, idx, "$")
    txs = _need(doc, "transactions", list, idx, "$")
    cut = doc.get("cut_reason")
    parsed = tuple(_parse_tx(t, idx, f"$.transactions[{i}]") for i, t in enumerate(txs))
    return RawBlock(number, parsed, cut)


def iter_raw_blocks(lines: Iterable[str]) -> Iterator[RawBlock]:
    """Stream-parse a raw dump; blank lines are skipped."""
    prev = None
    idx = -1
    for line in lines:
        if not line.strip():
            continue
        idx += 1
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RawDumpError(idx, "$", f"malformed JSON: {exc.msg}") from None
        block = _parse_block(doc, idx)
        if prev is not None and block.block_number <= prev:
            raise RawDumpError(idx, "$.block_number", f"block numbers must increase ({prev} -> {block.block_number})")
        prev = block.block_number
        yield block


def parse_raw_blocks(lines: Iterable[str]) -> RawBlockDump:
    return RawBlockDump(tuple(iter_raw_blocks(lines)))


def _rwset_parts(rwset: dict, idx: int, path: str):
    try:
        reads = tuple((str(r["key"]), int(r["version"])) for r in rwset.get("reads", ()))
        writes = tuple((str(w["key"]), str(w["value"])) for w in rwset.get("writes", ()))
        ranges = tuple(
            RangeRead(
                str(rr["start"]),
                str(rr["end"]),
                tuple((str(o["key"]), int(o["version"])) for o in rr.get("observed", ())),
            )
            for rr in rwset.get("range_reads", ())
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise RawDumpError(idx, path, f"bad rwset entry: {exc}") from None
    return reads, writes, ranges


def preprocess(raw: RawBlockDump | Iterable[RawBlock]) -> BlockchainLog:
    """Drop configuration transactions and build the canonical log.

    Commit orders are assigned 0..n-1 in ledger order; blocks left with no
    application transactions disappear.
    """
    blocks = raw.blocks if isinstance(raw, RawBlockDump) else raw
    records: list[TransactionRecord] = []
    cut_reasons: dict[int, str] = {}
    config = None
    for idx, block in enumerate(blocks):
        app_in_block = 0
        for t_i, tx in enumerate(block.transactions):
            path = f"$.transactions[{t_i}]"
            if tx.kind == "config":
                if tx.config:
                    try:
                        config = NetworkConfig.from_dict(tx.config)
                    except (KeyError, TypeError, ValueError) as exc:
                        raise RawDumpError(idx, f"{path}.config", f"bad config: {exc}") from None
                continue
            if tx.rwset is None:
                raise RawDumpError(idx, f"{path}.rwset", "application transaction without read-write set")
            status = VALIDATION_CODES.get(tx.validation_code)
            if status is None:
                raise RawDumpError(idx, f"{path}.validation_code", f"unknown code {tx.validation_code!r}")
            reads, writes, ranges = _rwset_parts(tx.rwset, idx, f"{path}.rwset")
            try:
                tx_type = derive_transaction_type(reads, writes, ranges)
            except ValueError as exc:
                raise RawDumpError(idx, f"{path}.rwset", str(exc)) from None
            records.append(
                TransactionRecord(
                    client_ts=tx.timestamp,
                    activity=tx.function,
                    args=tx.args,
                    endorsers=tx.endorsers,
                    invoker_client=tx.invoker_client,
                    invoker_org=tx.invoker_org,
                    read_set=reads,
                    write_set=writes,
                    range_reads=ranges,
                    status=status,
                    tx_type=tx_type,
                    commit_order=len(records),
                    block_number=block.block_number,
                )
            )
            app_in_block += 1
        if app_in_block:
            cut_reasons[block.block_number] = block.cut_reason or "flush"
    return BlockchainLog.from_records(records, config, cut_reasons)


def raw_tx_to_json(r: TransactionRecord) -> dict:
    return {
        "timestamp": r.client_ts,
        "kind": "application",
        "function": r.activity,
        "args": list(r.args),
        "endorsers": list(r.endorsers),
        "invoker": {"client": r.invoker_client, "org": r.invoker_org},
        "rwset": {
            "reads": [{"key": k, "version": v} for k, v in r.read_set],
            "writes": [{"key": k, "value": v} for k, v in r.write_set],
            "range_reads": [
                {"start": rr.start, "end": rr.end, "observed": [{"key": k, "version": v} for k, v in rr.observed]}
                for rr in r.range_reads
            ],
        },
        "validation_code": STATUS_TO_CODE[r.status],
    }


def raw_block_to_json(block_number: int, txs: list[dict], cut_reason: str | None = None) -> str:
    doc = {"raw_v": RAW_DUMP_VERSION, "block_number": block_number, "transactions": txs}
    if cut_reason is not None:
        doc["cut_reason"] = cut_reason
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def log_to_raw_lines(log: BlockchainLog, genesis_ts: float = 0.0) -> Iterator[str]:
    """Render a log back as a raw dump, with a genesis config block 0."""
    cfg_tx = {"timestamp": genesis_ts, "kind": "config", "function": "config",
              "config": log.config.to_dict() if log.config else None}
    by_co = log.by_commit_order()
    first = log.blocks[0].block_number if log.blocks else 1
    if first > 0:
        yield raw_block_to_json(first - 1, [cfg_tx], "flush")
    for i, b in enumerate(log.blocks):
        txs = [raw_tx_to_json(by_co[co]) for co in b.tx_commit_orders]
        if i == 0 and first == 0:
            txs.insert(0, cfg_tx)
        yield raw_block_to_json(b.block_number, txs, b.cut_reason)
