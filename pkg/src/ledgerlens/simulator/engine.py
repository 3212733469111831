"""Discrete-event execution of the execute-order-validate pipeline.

Events run in time order; at equal times commits go before endorsements, so
a block committed at time t is visible to a proposal endorsed at t.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass, field

from ..ingestion import log_to_raw_lines
from ..model import (
    ENDORSEMENT_POLICY_FAILURE,
    FAILURE_STATUSES,
    MVCC_READ_CONFLICT,
    PHANTOM_READ_CONFLICT,
    SUCCESS,
    BlockchainLog,
    NetworkConfig,
    TransactionRecord,
    derive_transaction_type,
    org_of,
)
from ..policy import resolve_policy
from .config import SimConfig
from .contracts import Abort, TxView, WorldState, make_contract
from .workload import Proposal, _rng, generate_workload

_COMMIT, _ENDORSE, _ARRIVE, _TIMEOUT = range(4)
_ORDER_STREAM = 5
FIRST_BLOCK = 1  # block 0 is the genesis/config block


@dataclass(frozen=True)
class PerfSummary:
    n_transactions: int
    successes: int
    throughput: float
    success_rate: float
    avg_latency_ms: float
    failure_counts: dict[str, int]
    aborted: int = 0
    activity_success: dict[str, tuple[int, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_transactions": self.n_transactions,
            "successes": self.successes,
            "throughput": self.throughput,
            "success_rate": self.success_rate,
            "avg_latency_ms": self.avg_latency_ms,
            "failure_counts": dict(sorted(self.failure_counts.items())),
            "aborted": self.aborted,
            "activity_success": {a: list(v) for a, v in sorted(self.activity_success.items())},
        }


@dataclass
class _Endorsed:
    proposal: Proposal
    client_ts: float
    read_set: tuple
    write_set: tuple
    range_reads: tuple


def validate_tx(state: WorldState, policy, tx: _Endorsed) -> str:
    if not policy.evaluate({org_of(e) for e in tx.proposal.endorsers}):
        return ENDORSEMENT_POLICY_FAILURE
    for k, ver in tx.read_set:
        if state.version(k) != ver:
            return MVCC_READ_CONFLICT
    for rr in tx.range_reads:
        now = tuple((k, ver) for k, _, ver in state.scan(rr.start, rr.end))
        if now != rr.observed:
            return PHANTOM_READ_CONFLICT
    return SUCCESS


def _client_times(cfg: SimConfig, proposals: list[Proposal]) -> list[float]:
    """Each client submits its proposals one at a time."""
    free: dict[str, float] = {}
    out = []
    for p in proposals:
        t = max(p.ts_ms, free.get(p.client, float("-inf")))
        free[p.client] = t + cfg.client_latency_ms
        out.append(t)
    return out


def run(cfg: SimConfig, seed: int | None = None) -> tuple[BlockchainLog, PerfSummary]:
    proposals = generate_workload(cfg, seed)
    contract = make_contract(cfg)
    state = WorldState(contract.initial_state())
    policy = resolve_policy(cfg.endorsement_policy, cfg.n_orgs)

    heap: list = []
    seq = 0

    def push(t, kind, payload):
        nonlocal seq
        heapq.heappush(heap, (t, kind, seq, payload))
        seq += 1

    jitter = _rng(cfg.seed if seed is None else seed, _ORDER_STREAM).random(len(proposals)) * cfg.order_jitter_ms
    for p, t in zip(proposals, _client_times(cfg, proposals)):
        push(t + cfg.endorse_latency_ms, _ENDORSE, (p, t))

    buffer: list[_Endorsed] = []
    generation = 0
    validator_free = 0.0
    next_block = FIRST_BLOCK
    records: list[TransactionRecord] = []
    cut_reasons: dict[int, str] = {}
    commit_time: dict[int, float] = {}
    aborted = 0

    def cut(t, reason):
        nonlocal buffer, generation, validator_free, next_block
        start = max(t, validator_free)
        end = start + cfg.block_overhead_ms + cfg.validate_latency_ms * len(buffer)
        validator_free = end
        push(end, _COMMIT, (next_block, buffer))
        cut_reasons[next_block] = reason
        next_block += 1
        buffer = []
        generation += 1

    while heap:
        t, kind, _, payload = heapq.heappop(heap)
        if kind == _ENDORSE:
            p, sent = payload
            view = TxView(state)
            try:
                contract.execute(p.activity, p.args, view)
            except Abort:
                aborted += 1
                continue
            push(t + cfg.order_latency_ms + float(jitter[p.index]), _ARRIVE, _Endorsed(p, sent, *view.rwset()))
        elif kind == _ARRIVE:
            buffer.append(payload)
            if len(buffer) >= cfg.block_count:
                cut(t, "count")
            elif len(buffer) == 1:
                push(t + cfg.block_timeout * 1000.0, _TIMEOUT, generation)
        elif kind == _TIMEOUT:
            if payload == generation and buffer:
                cut(t, "timeout")
        else:
            block_no, txs = payload
            for tx in txs:
                status = validate_tx(state, policy, tx)
                if status == SUCCESS:
                    state.apply(tx.write_set)
                p = tx.proposal
                commit_time[len(records)] = t
                records.append(TransactionRecord(
                    client_ts=tx.client_ts,
                    activity=p.activity,
                    args=p.args,
                    endorsers=p.endorsers,
                    invoker_client=p.client,
                    invoker_org=p.org,
                    read_set=tx.read_set,
                    write_set=tx.write_set,
                    range_reads=tx.range_reads,
                    status=status,
                    tx_type=derive_transaction_type(tx.read_set, tx.write_set, tx.range_reads),
                    commit_order=len(records),
                    block_number=block_no,
                ))

    config = NetworkConfig(cfg.block_count, cfg.block_timeout, str(policy))
    log = BlockchainLog.from_records(records, config, cut_reasons)
    return log, summarize(log, commit_time, aborted)


def summarize(log: BlockchainLog, commit_time: dict[int, float], aborted: int = 0) -> PerfSummary:
    recs = log.records
    n = len(recs)
    ok = [r for r in recs if r.status == SUCCESS]
    counts = Counter(r.status for r in recs)
    per_act: dict[str, list[int]] = {}
    for r in recs:
        c = per_act.setdefault(r.activity, [0, 0])
        c[0] += r.status == SUCCESS
        c[1] += 1
    if n:
        span_ms = max(commit_time.values()) - min(r.client_ts for r in recs)
    else:
        span_ms = 0.0
    lat = [commit_time[r.commit_order] - r.client_ts for r in ok]
    return PerfSummary(
        n_transactions=n,
        successes=len(ok),
        throughput=len(ok) / (span_ms / 1000.0) if span_ms > 0 else 0.0,
        success_rate=len(ok) / n if n else 0.0,
        avg_latency_ms=sum(lat) / len(lat) if lat else 0.0,
        failure_counts={s: counts.get(s, 0) for s in FAILURE_STATUSES},
        aborted=aborted,
        activity_success={a: (v[0], v[1]) for a, v in per_act.items()},
    )


def emit_raw(log: BlockchainLog) -> list[str]:
    """Raw block dump lines for a simulated log (genesis config block first)."""
    return list(log_to_raw_lines(log))


def initial_state(cfg: SimConfig) -> dict[str, str]:
    return make_contract(cfg).initial_state()
