"""Rate, failure, block, significance, key and correlation metrics of a log."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .model import (
    FAILURE_STATUSES,
    BlockchainLog,
    Thresholds,
)


class MetricsError(ValueError):
    pass


class KeyIndex(NamedTuple):
    """CSR views of a log's key accesses; row ``i`` is the i-th record."""

    keys: list[str]
    all_ptr: np.ndarray
    all_ids: np.ndarray
    write_ptr: np.ndarray
    write_ids: np.ndarray
    read_ptr: np.ndarray
    read_ids: np.ndarray
    failed: np.ndarray


def index_keys(log: BlockchainLog) -> KeyIndex:
    key_id: dict[str, int] = {}

    def ids(keys):
        return sorted(key_id.setdefault(k, len(key_id)) for k in keys)

    rows_all, rows_w, rows_r = [], [], []
    for r in log.records:
        rows_all.append(ids(r.keys))
        rows_w.append(ids(r.write_keys))
        rows_r.append(ids(r.read_keys | r.range_keys))

    def csr(rows):
        ptr = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum([len(x) for x in rows], out=ptr[1:])
        flat = np.fromiter((k for row in rows for k in row), dtype=np.int64, count=int(ptr[-1]))
        return ptr, flat

    a_ptr, a_ids = csr(rows_all)
    w_ptr, w_ids = csr(rows_w)
    r_ptr, r_ids = csr(rows_r)
    failed = np.fromiter((r.failed for r in log.records), dtype=np.uint8, count=len(log.records))
    keys = [None] * len(key_id)
    for k, i in key_id.items():
        keys[i] = k
    return KeyIndex(keys, a_ptr, a_ids, w_ptr, w_ids, r_ptr, r_ids, failed)


class CorrelatedPairs(NamedTuple):
    """Correlated transaction pairs as parallel arrays of record positions.

    Records are in commit order, so positions order like commit orders;
    ``commit_orders`` maps positions to the log's commit_order values.
    """

    x: np.ndarray
    y: np.ndarray
    commit_orders: np.ndarray

    def __len__(self):
        return len(self.x)

    def as_commit_order_pairs(self) -> list[tuple[int, int]]:
        co = self.commit_orders
        return list(zip(co[self.x].tolist(), co[self.y].tolist()))


@dataclass
class MetricsReport:
    n_tx: int
    n_failed: int
    ins: float
    tr: float
    trd: tuple[float, ...]
    trd_counts: tuple[int, ...]
    tfr: float
    failure_rates: dict[str, float]
    failure_counts: dict[str, int]
    frd: tuple[float, ...]
    frd_counts: tuple[int, ...]
    b_count_cfg: int | None
    b_timeout_cfg: float | None
    b_sizeavg: float
    n_blocks: int
    max_block_size: int
    edsig: dict[str, int]
    edsig_org: dict[str, int]
    ivsig_client: dict[str, int]
    ivsig_org: dict[str, int]
    kfreq: dict[str, int]
    ksig: dict[str, int]
    key_activities: dict[str, tuple[str, ...]]
    hotkeys: tuple[str, ...]
    pairs: CorrelatedPairs
    cor_p: np.ndarray
    cor_pa_dist: np.ndarray
    cor_pa: dict[str, list[int]]
    conflict_locality: tuple[int, int]
    index: KeyIndex | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def cordv_pairs(self) -> list[tuple[int, int]]:
        return self.pairs.as_commit_order_pairs()

    def to_json(self, max_pairs: int | None = 100_000) -> dict:
        pairs = self.cordv_pairs
        truncated = max_pairs is not None and len(pairs) > max_pairs
        shown = pairs[:max_pairs] if truncated else pairs
        cor_p = self.cor_p.tolist()[: len(shown)]
        return {
            "n_tx": self.n_tx,
            "n_failed": self.n_failed,
            "ins": self.ins,
            "Tr": self.tr,
            "Trd": list(self.trd),
            "TFr": self.tfr,
            "failure_rates": dict(sorted(self.failure_rates.items())),
            "failure_counts": dict(sorted(self.failure_counts.items())),
            "Frd": list(self.frd),
            "B_count_cfg": self.b_count_cfg,
            "B_timeout_cfg": self.b_timeout_cfg,
            "B_sizeavg": self.b_sizeavg,
            "n_blocks": self.n_blocks,
            "EDsig": dict(sorted(self.edsig.items())),
            "EDsig_org": dict(sorted(self.edsig_org.items())),
            "IVsig_client": dict(sorted(self.ivsig_client.items())),
            "IVsig_org": dict(sorted(self.ivsig_org.items())),
            "Kfreq": dict(sorted(self.kfreq.items())),
            "Ksig": dict(sorted(self.ksig.items())),
            "HK": list(self.hotkeys),
            "corDV_pair_count": len(pairs),
            "corDV_pairs": [list(p) for p in shown],
            "corDV_pairs_truncated": truncated,
            "corP": cor_p,
            "corPA": {a: d for a, d in sorted(self.cor_pa.items())},
            "conflict_locality": {"intra_block": self.conflict_locality[0], "inter_block": self.conflict_locality[1]},
            "notes": list(self.notes),
        }


def _timestamps(log: BlockchainLog) -> np.ndarray:
    return np.fromiter((r.client_ts for r in log.records), dtype=np.float64, count=len(log.records))


def _span_seconds(ts: np.ndarray) -> float:
    if len(ts) < 2:
        return 0.0
    return (float(ts.max()) - float(ts.min())) / 1000.0


def transaction_rate(log: BlockchainLog) -> float:
    """Average send rate: |TX| over the client-timestamp span, in TPS."""
    ts = _timestamps(log)
    span = _span_seconds(ts)
    if span <= 0:
        return 0.0
    return len(ts) / span


def _bucket_counts(ts: np.ndarray, ins: float, mask: np.ndarray | None = None, n_buckets: int | None = None):
    if ins <= 0:
        raise MetricsError("interval size must be positive")
    if len(ts) == 0:
        return np.zeros(0 if n_buckets is None else n_buckets, dtype=np.int64)
    idx = np.floor(ts / (ins * 1000.0)).astype(np.int64)
    if idx.min() < 0:
        raise MetricsError("client timestamps must be non-negative")
    if n_buckets is None:
        n_buckets = int(idx.max()) + 1
    if mask is not None:
        idx = idx[mask]
    return np.bincount(idx, minlength=n_buckets)


def rate_distribution(log: BlockchainLog, ins: float) -> tuple[float, ...]:
    """Per-interval send rate; interval i covers [i*ins, (i+1)*ins) seconds."""
    counts = _bucket_counts(_timestamps(log), ins)
    return tuple((counts / ins).tolist())


def failure_distribution(log: BlockchainLog, ins: float) -> tuple[float, ...]:
    ts = _timestamps(log)
    failed = np.fromiter((r.failed for r in log.records), dtype=bool, count=len(ts))
    counts = _bucket_counts(ts, ins, failed, n_buckets=len(_bucket_counts(ts, ins)))
    return tuple((counts / ins).tolist())


def block_stats(log: BlockchainLog) -> tuple[int, float, float]:
    if log.config is None:
        raise MetricsError("log carries no network configuration record")
    n_blocks = len({r.block_number for r in log.records})
    if n_blocks == 0:
        raise MetricsError("log has no blocks")
    return log.config.block_count, log.config.block_timeout_s, len(log.records) / n_blocks


def endorser_significance(log: BlockchainLog) -> tuple[dict[str, int], dict[str, int]]:
    """Transactions endorsed per endorsing peer and per organization."""
    peers: Counter = Counter()
    orgs: Counter = Counter()
    for r in log.records:
        peers.update(set(r.endorsers))
        orgs.update(r.endorser_orgs)
    return dict(peers), dict(orgs)


def invoker_significance(log: BlockchainLog) -> tuple[dict[str, int], dict[str, int]]:
    clients = Counter(r.invoker_client for r in log.records)
    orgs = Counter(r.invoker_org for r in log.records)
    return dict(clients), dict(orgs)


def key_stats(log: BlockchainLog, thresholds: Thresholds):
    """Returns (Kfreq, Ksig, HK, key -> accessing activities)."""
    kfreq: Counter = Counter()
    acts: dict[str, set] = defaultdict(set)
    total_failed = 0
    for r in log.records:
        for k in r.keys:
            acts[k].add(r.activity)
        if r.failed:
            total_failed += 1
            kfreq.update(r.keys)
    ksig = {k: len(v) for k, v in acts.items()}
    cutoff = max(thresholds.hk_min, thresholds.hk_frac * total_failed)
    hot = tuple(sorted(k for k, c in kfreq.items() if c >= cutoff))
    return dict(kfreq), ksig, hot, {k: tuple(sorted(v)) for k, v in acts.items()}


def data_value_correlation(log: BlockchainLog, index: KeyIndex | None = None) -> CorrelatedPairs:
    """Pairs x < y sharing at least one key where x or y failed."""
    index = index or index_keys(log)
    xs, ys = kernels.correlated_pairs(index.all_ptr, index.all_ids, index.failed, len(index.keys))
    cos = np.fromiter((r.commit_order for r in log.records), dtype=np.int64, count=len(log.records))
    return CorrelatedPairs(xs, ys, cos)


def proximity_correlation(log: BlockchainLog, pairs: CorrelatedPairs):
    """Returns (corP per pair, same-activity distance per pair or -1, corPA).

    The same-activity distance counts positions in the activity's own
    subsequence, so 1 means y is the next transaction of that activity.
    """
    co = pairs.commit_orders
    cor_p = co[pairs.y] - co[pairs.x]
    act_ids: dict[str, int] = {}
    act = np.fromiter((act_ids.setdefault(r.activity, len(act_ids)) for r in log.records), dtype=np.int64,
                      count=len(log.records))
    rank = np.zeros(len(act), dtype=np.int64)
    seen = np.zeros(len(act_ids), dtype=np.int64)
    for i, a in enumerate(act.tolist()):
        rank[i] = seen[a]
        seen[a] += 1
    same = act[pairs.x] == act[pairs.y]
    dist = np.where(same, rank[pairs.y] - rank[pairs.x], -1)
    names = {i: a for a, i in act_ids.items()}
    cor_pa: dict[str, list[int]] = defaultdict(list)
    for i in np.nonzero(same)[0].tolist():
        cor_pa[names[int(act[pairs.x[i]])]].append(int(dist[i]))
    return cor_p.astype(np.int64), dist.astype(np.int64), dict(cor_pa)


def classify_conflict_locality(log: BlockchainLog, pairs: CorrelatedPairs) -> tuple[int, int]:
    """(intra_block, inter_block) counts over pairs whose later tx failed."""
    blocks = np.fromiter((r.block_number for r in log.records), dtype=np.int64, count=len(log.records))
    failed = np.fromiter((r.failed for r in log.records), dtype=bool, count=len(log.records))
    later_failed = failed[pairs.y]
    same = blocks[pairs.x] == blocks[pairs.y]
    intra = int(np.count_nonzero(later_failed & same))
    inter = int(np.count_nonzero(later_failed & ~same))
    return intra, inter


def compute_metrics(log: BlockchainLog, thresholds: Thresholds | None = None) -> MetricsReport:
    thresholds = thresholds or Thresholds()
    ins = thresholds.ins
    ts = _timestamps(log)
    n = len(log.records)
    failed_mask = np.fromiter((r.failed for r in log.records), dtype=bool, count=n)
    trd_counts = _bucket_counts(ts, ins)
    frd_counts = _bucket_counts(ts, ins, failed_mask, n_buckets=len(trd_counts))
    span = _span_seconds(ts)
    counts_by_status = Counter(r.status for r in log.records)
    failure_counts = {s: counts_by_status.get(s, 0) for s in FAILURE_STATUSES}
    n_failed = sum(failure_counts.values())
    notes = []
    if log.config is not None and n:
        b_count, b_timeout, b_avg = block_stats(log)
    else:
        b_count = b_timeout = None
        n_blocks = len({r.block_number for r in log.records})
        b_avg = n / n_blocks if n_blocks else 0.0
        if n:
            notes.append("no configuration record: B_count/B_timeout unknown")
    block_sizes = Counter(r.block_number for r in log.records)
    edsig, edsig_org = endorser_significance(log)
    ivc, ivo = invoker_significance(log)
    kfreq, ksig, hot, key_acts = key_stats(log, thresholds)
    index = index_keys(log)
    pairs = data_value_correlation(log, index)
    cor_p, dist, cor_pa = proximity_correlation(log, pairs)
    locality = classify_conflict_locality(log, pairs)
    return MetricsReport(
        n_tx=n,
        n_failed=n_failed,
        ins=ins,
        tr=n / span if span > 0 else 0.0,
        trd=tuple((trd_counts / ins).tolist()),
        trd_counts=tuple(trd_counts.tolist()),
        tfr=n_failed / span if span > 0 else 0.0,
        failure_rates={s: (c / span if span > 0 else 0.0) for s, c in failure_counts.items()},
        failure_counts=failure_counts,
        frd=tuple((frd_counts / ins).tolist()),
        frd_counts=tuple(frd_counts.tolist()),
        b_count_cfg=b_count,
        b_timeout_cfg=b_timeout,
        b_sizeavg=b_avg,
        n_blocks=len(block_sizes),
        max_block_size=max(block_sizes.values(), default=0),
        edsig=edsig,
        edsig_org=edsig_org,
        ivsig_client=ivc,
        ivsig_org=ivo,
        kfreq=kfreq,
        ksig=ksig,
        key_activities=key_acts,
        hotkeys=hot,
        pairs=pairs,
        cor_p=cor_p,
        cor_pa_dist=dist,
        cor_pa=cor_pa,
        conflict_locality=locality,
        index=index,
        notes=notes,
    )


def steady_state_block_size(b_count: int, tr: float, b_timeout: float) -> float:
    """Expected average block size, min{B_count, Tr * B_timeout}."""
    return min(float(b_count), tr * b_timeout) if math.isfinite(tr) else float(b_count)
