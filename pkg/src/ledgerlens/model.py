"""Canonical data model shared by every stage of the toolkit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Any, Iterable, Mapping

SUCCESS = "success"
MVCC_READ_CONFLICT = "mvcc_read_conflict"
PHANTOM_READ_CONFLICT = "phantom_read_conflict"
ENDORSEMENT_POLICY_FAILURE = "endorsement_policy_failure"
STATUSES = (SUCCESS, MVCC_READ_CONFLICT, PHANTOM_READ_CONFLICT, ENDORSEMENT_POLICY_FAILURE)
FAILURE_STATUSES = STATUSES[1:]

TX_TYPES = ("read", "write", "update", "range_read", "delete")
CUT_REASONS = ("count", "timeout", "flush")

# Reserved write value marking a key deletion.
TOMBSTONE = "__DELETED__"


@dataclass(frozen=True)
class RangeRead:
    """Range query over ``[start, end)`` and the (key, version) pairs it saw."""

    start: str
    end: str
    observed: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class TransactionRecord:
    client_ts: float
    activity: str
    args: tuple[str, ...]
    endorsers: tuple[str, ...]
    invoker_client: str
    invoker_org: str
    read_set: tuple[tuple[str, int], ...]
    write_set: tuple[tuple[str, str], ...]
    range_reads: tuple[RangeRead, ...]
    status: str
    tx_type: str
    commit_order: int
    block_number: int

    @cached_property
    def read_keys(self) -> frozenset[str]:
        return frozenset(k for k, _ in self.read_set)

    @cached_property
    def write_keys(self) -> frozenset[str]:
        return frozenset(k for k, _ in self.write_set)

    @cached_property
    def range_keys(self) -> frozenset[str]:
        return frozenset(k for rr in self.range_reads for k, _ in rr.observed)

    @cached_property
    def keys(self) -> frozenset[str]:
        """Every key the transaction touched, range-read results included."""
        return self.read_keys | self.write_keys | self.range_keys

    @property
    def failed(self) -> bool:
        return self.status != SUCCESS

    @property
    def endorser_orgs(self) -> frozenset[str]:
        return frozenset(org_of(e) for e in self.endorsers)


def org_of(identity: str) -> str:
    """``"Org1.peer0"`` -> ``"Org1"``."""
    return identity.split(".", 1)[0]


@dataclass(frozen=True)
class Block:
    block_number: int
    tx_commit_orders: tuple[int, ...]
    cut_reason: str = "flush"


@dataclass(frozen=True)
class NetworkConfig:
    """Configuration echo carried alongside a log (from the config block)."""

    block_count: int
    block_timeout_s: float
    endorsement_policy: str

    def to_dict(self) -> dict:
        return {
            "block_count": self.block_count,
            "block_timeout_s": self.block_timeout_s,
            "endorsement_policy": self.endorsement_policy,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "NetworkConfig":
        return cls(int(d["block_count"]), float(d["block_timeout_s"]), str(d["endorsement_policy"]))


@dataclass(frozen=True)
class BlockchainLog:
    records: tuple[TransactionRecord, ...]
    blocks: tuple[Block, ...] = ()
    config: NetworkConfig | None = None

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @classmethod
    def from_records(
        cls,
        records: Iterable[TransactionRecord],
        config: NetworkConfig | None = None,
        cut_reasons: Mapping[int, str] | None = None,
    ) -> "BlockchainLog":
        """Build a log, grouping records into blocks by ``block_number``."""
        records = tuple(records)
        cut_reasons = cut_reasons or {}
        blocks = []
        cur: list[int] = []
        cur_no = None
        for r in records:
            if r.block_number != cur_no and cur:
                blocks.append(Block(cur_no, tuple(cur), cut_reasons.get(cur_no, "flush")))
                cur = []
            cur_no = r.block_number
            cur.append(r.commit_order)
        if cur:
            blocks.append(Block(cur_no, tuple(cur), cut_reasons.get(cur_no, "flush")))
        return cls(records, tuple(blocks), config)

    def by_commit_order(self) -> dict[int, TransactionRecord]:
        return {r.commit_order: r for r in self.records}


def derive_transaction_type(read_set, write_set, range_reads) -> str:
    """Classify a transaction from its read-write set.

    Range reads dominate, then deletes (tombstone writes). A transaction with
    no writes is a read; a write with any read is an update (even when the
    read and written keys do not overlap); a blind write is a write.
    """
    if not read_set and not write_set and not range_reads:
        raise ValueError("cannot derive a transaction type from an empty read-write set")
    if range_reads:
        return "range_read"
    if any(v == TOMBSTONE for _, v in write_set):
        return "delete"
    if not write_set:
        return "read"
    if read_set:
        return "update"
    return "write"


@dataclass(frozen=True)
class Thresholds:
    """Detection thresholds. Names follow the rule notation, lower-cased."""

    rt1: float = 300.0
    rt2: float = 0.3
    bt: float = 0.6
    et: float = 0.5
    it: float = 0.5
    at: float = 0.4
    hk_frac: float = 0.1
    hk_min: int = 5
    ins: float = 10.0

    def __post_init__(self):
        for name in ("rt2", "bt", "et", "it", "at", "hk_frac"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"threshold {name} must be in (0, 1], got {v}")
        if not self.rt1 > 0:
            raise ValueError("rt1 must be positive")
        if not self.ins > 0:
            raise ValueError("ins must be positive")
        if self.hk_min < 1:
            raise ValueError("hk_min must be >= 1")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "Thresholds":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for raw_key, raw in values.items():
            key = raw_key.strip().lower()
            if key not in known:
                raise ValueError(f"unknown threshold {raw_key!r}")
            kwargs[key] = int(raw) if key == "hk_min" else float(raw)
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> "Thresholds":
        return cls.from_mapping(parse_key_values(text))

    def with_(self, **changes) -> "Thresholds":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def parse_key_values(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip().strip('"').strip("'")
    return out


USER, DATA, SYSTEM = "user", "data", "system"
LEVEL_ORDER = {USER: 0, DATA: 1, SYSTEM: 2}

ACTIVITY_REORDERING = "activity_reordering"
PROCESS_MODEL_PRUNING = "process_model_pruning"
TRANSACTION_RATE_CONTROL = "transaction_rate_control"
DELTA_WRITES = "delta_writes"
SMART_CONTRACT_PARTITIONING = "smart_contract_partitioning"
DATA_MODEL_ALTERATION = "data_model_alteration"
BLOCK_SIZE_ADAPTATION = "block_size_adaptation"
ENDORSER_RESTRUCTURING = "endorser_restructuring"
CLIENT_RESOURCE_BOOST = "client_resource_boost"

KIND_LEVEL = {
    ACTIVITY_REORDERING: USER,
    PROCESS_MODEL_PRUNING: USER,
    TRANSACTION_RATE_CONTROL: USER,
    DELTA_WRITES: DATA,
    SMART_CONTRACT_PARTITIONING: DATA,
    DATA_MODEL_ALTERATION: DATA,
    BLOCK_SIZE_ADAPTATION: SYSTEM,
    ENDORSER_RESTRUCTURING: SYSTEM,
    CLIENT_RESOURCE_BOOST: SYSTEM,
}
KINDS = tuple(KIND_LEVEL)


@dataclass(frozen=True)
class Recommendation:
    kind: str
    evidence: tuple
    suggested_action: dict = field(default_factory=dict)
    explanation: str = ""

    def __post_init__(self):
        if self.kind not in KIND_LEVEL:
            raise ValueError(f"unknown recommendation kind {self.kind!r}")
        if not self.evidence:
            raise ValueError("a recommendation needs evidence")

    @property
    def level(self) -> str:
        return KIND_LEVEL[self.kind]

    def first_commit_order(self) -> int:
        for item in self.evidence:
            if isinstance(item, dict):
                for key in ("commit_order", "first_commit_order"):
                    if key in item:
                        return int(item[key])
                if item.get("commit_orders"):
                    return int(min(item["commit_orders"]))
        return -1

    def sort_key(self):
        return (LEVEL_ORDER[self.level], self.kind, self.first_commit_order())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "level": self.level,
            "evidence": list(self.evidence),
            "suggested_action": self.suggested_action,
            "explanation": self.explanation,
        }


def validate_log(log: BlockchainLog) -> list[str]:
    """Check every structural invariant; returns one message per violation."""
    problems: list[str] = []
    seen: set[int] = set()
    prev_order = None
    prev_block = None
    for r in log.records:
        co = r.commit_order
        if co in seen:
            problems.append(f"commit_order {co}: duplicate commit_order (must be unique)")
        seen.add(co)
        if prev_order is not None and co <= prev_order:
            problems.append(f"commit_order {co}: records not in increasing commit_order")
        prev_order = co
        if co < 0:
            problems.append(f"commit_order {co}: negative commit_order")
        if r.block_number < 0:
            problems.append(f"commit_order {co}: negative block_number")
        if prev_block is not None and r.block_number < prev_block:
            problems.append(f"commit_order {co}: block_number decreases along commit_order")
        prev_block = r.block_number
        if r.status not in STATUSES:
            problems.append(f"commit_order {co}: unknown status {r.status!r}")
        if r.tx_type not in TX_TYPES:
            problems.append(f"commit_order {co}: unknown tx_type {r.tx_type!r}")
        try:
            derived = derive_transaction_type(r.read_set, r.write_set, r.range_reads)
        except ValueError:
            problems.append(f"commit_order {co}: empty read-write set")
        else:
            if derived != r.tx_type:
                problems.append(f"commit_order {co}: tx_type {r.tx_type!r} does not match derived {derived!r}")
        if r.status == PHANTOM_READ_CONFLICT and not r.range_reads:
            problems.append(f"commit_order {co}: phantom_read_conflict without range reads")
        if any(v < 0 for _, v in r.read_set) or any(v < 0 for rr in r.range_reads for _, v in rr.observed):
            problems.append(f"commit_order {co}: negative version in read set")
        if not (isinstance(r.client_ts, (int, float)) and math.isfinite(r.client_ts)):
            problems.append(f"commit_order {co}: non-finite client timestamp")

    if log.blocks:
        block_of = {r.commit_order: r.block_number for r in log.records}
        position = {r.commit_order: i for i, r in enumerate(log.records)}
        covered = 0
        for b in log.blocks:
            if not b.tx_commit_orders:
                problems.append(f"block {b.block_number}: empty block")
                continue
            if b.cut_reason not in CUT_REASONS:
                problems.append(f"block {b.block_number}: unknown cut_reason {b.cut_reason!r}")
            covered += len(b.tx_commit_orders)
            idx = [position.get(co) for co in b.tx_commit_orders]
            if None in idx:
                problems.append(f"block {b.block_number}: references unknown commit_order")
                continue
            if idx != list(range(idx[0], idx[0] + len(idx))):
                problems.append(
                    f"commit_order {b.tx_commit_orders[0]}: block {b.block_number} commit orders not contiguous"
                )
            for co in b.tx_commit_orders:
                if block_of[co] != b.block_number:
                    problems.append(f"commit_order {co}: block_number disagrees with block {b.block_number}")
        if covered != len(log.records):
            problems.append(f"blocks cover {covered} transactions, log has {len(log.records)}")
    return problems
