"""Optimization recommendations derived from metrics, the log and mined anomalies.

Each ``detect_*`` function evaluates one rule and returns a Recommendation or
None. ``recommend`` runs all nine and orders the result by (level, kind,
first evidence commit order).
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict

import numpy as np

from . import kernels
from .eventlog import CaseFieldError, build_event_log, derive_case_field
from .metrics import MetricsReport, index_keys
from .miner import AnomalyFinding, detect_anomalous_paths
from .model import (
    ACTIVITY_REORDERING,
    BLOCK_SIZE_ADAPTATION,
    CLIENT_RESOURCE_BOOST,
    DATA_MODEL_ALTERATION,
    DELTA_WRITES,
    ENDORSER_RESTRUCTURING,
    MVCC_READ_CONFLICT,
    PHANTOM_READ_CONFLICT,
    PROCESS_MODEL_PRUNING,
    SMART_CONTRACT_PARTITIONING,
    SUCCESS,
    TRANSACTION_RATE_CONTROL,
    BlockchainLog,
    Recommendation,
    Thresholds,
)

_EPS = 1e-9
MAX_TABLE_ROWS = 20


def _ge(a: float, b: float) -> bool:
    return a >= b - _EPS * max(1.0, abs(b))


def _le(a: float, b: float) -> bool:
    return a <= b + _EPS * max(1.0, abs(b))


# user level


def reorder_attribution(log: BlockchainLog, metrics: MetricsReport):
    """Failed transactions explained by a reorderable predecessor.

    A read conflict of z is attributable when some earlier successful x of a
    different activity, whose write set is disjoint from z's, wrote a key z
    read. Returns (attributable commit orders, total read conflicts,
    Counter of (writer activity, reader activity)).
    """
    recs = log.records
    index = metrics.index or index_keys(log)
    pairs = metrics.pairs
    conflict = np.fromiter(
        (r.status in (MVCC_READ_CONFLICT, PHANTOM_READ_CONFLICT) for r in recs), dtype=bool, count=len(recs)
    )
    total = int(conflict.sum())
    if not len(pairs) or not total:
        return [], total, Counter()
    ok = np.fromiter((r.status == SUCCESS for r in recs), dtype=bool, count=len(recs))
    act_ids: dict[str, int] = {}
    act = np.fromiter((act_ids.setdefault(r.activity, len(act_ids)) for r in recs), dtype=np.int64, count=len(recs))
    cand = conflict[pairs.y] & ok[pairs.x] & (act[pairs.x] != act[pairs.y])
    xs, ys = pairs.x[cand], pairs.y[cand]
    flags = kernels.pair_flags(xs, ys, index.write_ptr, index.write_ids, index.read_ptr, index.read_ids)
    hit = (flags & 3) == 3
    blame: Counter = Counter()
    attributed: set[int] = set()
    for x, y in zip(xs[hit].tolist(), ys[hit].tolist()):
        attributed.add(y)
        blame[(recs[x].activity, recs[y].activity)] += 1
    return sorted(recs[i].commit_order for i in attributed), total, blame


def detect_activity_reordering(log: BlockchainLog, metrics: MetricsReport, thresholds: Thresholds):
    attributed, total, blame = reorder_attribution(log, metrics)
    if not total or not attributed or len(attributed) < thresholds.at * total - _EPS:
        return None
    evidence = tuple(
        {"writer_activity": w, "reader_activity": r, "conflicting_pairs": n}
        for (w, r), n in sorted(blame.items(), key=lambda kv: (-kv[1], kv[0]))
    )
    evidence = ({"commit_order": attributed[0], "attributable_failures": len(attributed),
                 "read_conflicts": total},) + evidence
    share = len(attributed) / total
    return Recommendation(
        ACTIVITY_REORDERING,
        evidence,
        {"reorder": [[w, r] for (w, r) in sorted(blame)]},
        f"{share:.1%} of read conflicts follow a write by a different activity with a disjoint "
        f"write set (threshold {thresholds.at:.0%}); scheduling the reader before the writer removes them.",
    )


def detect_pruning(anomalies: list[AnomalyFinding]):
    if not anomalies:
        return None
    evidence = tuple(
        {
            "activity": a.activity,
            "expected_tx_type": a.expected_tx_type,
            "anomalous_tx_type": a.anomalous_tx_type,
            "first_commit_order": a.witnesses[0],
            "occurrences": len(a.witnesses),
            "preceding_activities": {k: n for k, n in a.context},
        }
        for a in anomalies
    )
    guards = sorted({(a.activity, a.anomalous_tx_type) for a in anomalies})
    return Recommendation(
        PROCESS_MODEL_PRUNING,
        evidence,
        {"early_abort": [{"activity": act, "when_tx_type": tt} for act, tt in guards]},
        "Some activities deviate from their usual transaction type; aborting those paths at "
        "endorsement keeps them out of ordering and validation.",
    )


def flagged_intervals(metrics: MetricsReport, thresholds: Thresholds) -> list[int]:
    out = []
    for i, (trd, frd) in enumerate(zip(metrics.trd, metrics.frd)):
        if _ge(trd, thresholds.rt1) and _ge(frd, trd * thresholds.rt2):
            out.append(i)
    return out


def detect_rate_control(metrics: MetricsReport, thresholds: Thresholds):
    flagged = flagged_intervals(metrics, thresholds)
    if not flagged:
        return None
    fs = set(flagged)
    # the trailing interval is usually partial, so it does not set the cap
    calm = [t for i, t in enumerate(metrics.trd[:-1]) if i not in fs and t > 0]
    cap = max(calm) if calm else thresholds.rt1 / 3
    evidence = tuple(
        {"interval": i, "start_s": i * metrics.ins, "trd": metrics.trd[i], "frd": metrics.frd[i]}
        for i in flagged
    )
    return Recommendation(
        TRANSACTION_RATE_CONTROL,
        evidence,
        {"max_send_rate_tps": round(cap, 3)},
        f"{len(flagged)} interval(s) reach the rate threshold {thresholds.rt1:g} TPS while at least "
        f"{thresholds.rt2:.0%} of their transactions fail.",
    )


# data level


def _number(v: str):
    try:
        x = float(v)
    except (TypeError, ValueError):
        return None
    return x if math.isfinite(x) else None


def _delta_candidates(log: BlockchainLog, metrics: MetricsReport):
    """Adjacent same-activity pairs (x failed with MVCC) writing one shared numeric key."""
    recs = log.records
    adj = np.nonzero(metrics.cor_pa_dist == 1)[0]
    for i in adj.tolist():
        x, y = recs[int(metrics.pairs.x[i])], recs[int(metrics.pairs.y[i])]
        if x.status != MVCC_READ_CONFLICT or len(x.write_set) != 1 or len(y.write_set) != 1:
            continue
        (kx, vx), (ky, vy) = x.write_set[0], y.write_set[0]
        if kx != ky:
            continue
        nx, ny = _number(vx), _number(vy)
        if nx is None or ny is None:
            continue
        yield x, y, kx, abs(ny - nx)


def detect_delta_writes(log: BlockchainLog, metrics: MetricsReport):
    hits: dict[tuple[str, str], list[int]] = defaultdict(list)
    for x, y, key, step in _delta_candidates(log, metrics):
        if step == 1:
            hits[(x.activity, key)].append(x.commit_order)
    if not hits:
        return None
    by_act: dict[str, list] = defaultdict(list)
    for (a, k), cos in hits.items():
        by_act[a].append((min(cos), k, len(cos)))
    evidence = tuple(
        {"activity": a, "first_commit_order": min(c for c, _, _ in v), "keys": len(v),
         "failed_increments": sum(n for _, _, n in v), "example_key": min(v)[1]}
        for a, v in sorted(by_act.items())
    )
    return Recommendation(
        DELTA_WRITES,
        evidence,
        {"delta_write_activities": sorted(by_act)},
        "Failed transactions increment or decrement a single counter key; recording deltas "
        "under unique keys and aggregating on read removes the conflict.",
    )


def delta_write_near_misses(log: BlockchainLog, metrics: MetricsReport) -> list[dict]:
    """Counter-like pairs whose numeric step is not exactly one."""
    seen: dict[tuple[str, str], dict] = {}
    for x, y, key, step in _delta_candidates(log, metrics):
        if step not in (0, 1) and (x.activity, key) not in seen:
            seen[(x.activity, key)] = {"activity": x.activity, "key": key, "step": step,
                                       "commit_order": x.commit_order}
    return [seen[k] for k in sorted(seen)]


def detect_partitioning(metrics: MetricsReport):
    hot = [k for k in metrics.hotkeys if metrics.ksig.get(k, 0) > 1]
    if not hot:
        return None
    evidence = tuple(
        {"hotkey": k, "kfreq": metrics.kfreq.get(k, 0), "activities": list(metrics.key_activities[k])}
        for k in hot
    )
    groups = sorted({tuple(metrics.key_activities[k]) for k in hot})
    return Recommendation(
        SMART_CONTRACT_PARTITIONING,
        evidence,
        {"split_activity_groups": [list(g) for g in groups]},
        "Hot keys are shared by several activities; moving those activities into separate "
        "contracts with their own copies of the data reduces cross-activity conflicts.",
    )


def detect_data_model_alteration(metrics: MetricsReport):
    hot = list(metrics.hotkeys)
    picked = hot if len(hot) == 1 else [k for k in hot if metrics.ksig.get(k, 0) == 1]
    if not picked:
        return None
    evidence = tuple(
        {"hotkey": k, "kfreq": metrics.kfreq.get(k, 0), "activities": list(metrics.key_activities[k])}
        for k in picked
    )
    return Recommendation(
        DATA_MODEL_ALTERATION,
        evidence,
        {"rekey": picked},
        "Conflicts concentrate on a key owned by one activity (or on a single hot key); "
        "choosing a finer-grained primary key spreads the writes.",
    )


# system level


def detect_block_size(metrics: MetricsReport, thresholds: Thresholds):
    tr, avg = metrics.tr, metrics.b_sizeavg
    if metrics.n_tx == 0 or tr <= 0:
        return None
    if not (_ge(avg, tr * (1 + thresholds.bt)) or _le(avg, tr * (1 - thresholds.bt))):
        return None
    return Recommendation(
        BLOCK_SIZE_ADAPTATION,
        ({"b_sizeavg": avg, "tr": tr, "b_count": metrics.b_count_cfg, "b_timeout_s": metrics.b_timeout_cfg},),
        {"block_count": max(1, round(tr)), "block_timeout_s": 1.0},
        f"Average block size {avg:.1f} deviates from the transaction rate {tr:.1f} TPS by at least "
        f"{thresholds.bt:.0%} (relative band around Tr).",
    )


def _dominant(counts: dict[str, int], n_tx: int, frac: float, vs_mean: bool) -> list[str]:
    if not counts:
        return []
    mean = sum(counts.values()) / len(counts)
    out = []
    for name, c in counts.items():
        if c > n_tx * frac and (not vs_mean or c > (1 + frac) * mean):
            out.append(name)
    return sorted(out)


def detect_endorser_restructuring(metrics: MetricsReport, thresholds: Thresholds):
    peers = _dominant(metrics.edsig, metrics.n_tx, thresholds.et, True)
    orgs = _dominant(metrics.edsig_org, metrics.n_tx, thresholds.et, True)
    if not peers and not orgs:
        return None
    evidence = tuple(
        [{"org": o, "endorsements": metrics.edsig_org[o], "share": metrics.edsig_org[o] / metrics.n_tx} for o in orgs]
        + [{"peer": p, "endorsements": metrics.edsig[p], "share": metrics.edsig[p] / metrics.n_tx} for p in peers]
    )
    all_orgs = sorted(metrics.edsig_org)
    return Recommendation(
        ENDORSER_RESTRUCTURING,
        evidence,
        {"endorsement_policy": f"OutOf({min(2, len(all_orgs))},{','.join(all_orgs)})",
         "balance_client_endorser_mapping": True},
        f"Endorsement load is concentrated: these endorsers exceed {thresholds.et:.0%} of all "
        "transactions and sit well above the average endorser.",
    )


def detect_client_boost(metrics: MetricsReport, thresholds: Thresholds):
    clients = _dominant(metrics.ivsig_client, metrics.n_tx, thresholds.it, False)
    orgs = _dominant(metrics.ivsig_org, metrics.n_tx, thresholds.it, False)
    if not clients and not orgs:
        return None
    evidence = tuple(
        [{"org": o, "invocations": metrics.ivsig_org[o], "share": metrics.ivsig_org[o] / metrics.n_tx} for o in orgs]
        + [{"client": c, "invocations": metrics.ivsig_client[c], "share": metrics.ivsig_client[c] / metrics.n_tx}
           for c in clients]
    )
    return Recommendation(
        CLIENT_RESOURCE_BOOST,
        evidence,
        {"scale_clients_of": orgs or clients},
        f"More than {thresholds.it:.0%} of transactions come from one invoker; adding client "
        "resources there relieves the submission bottleneck.",
    )


def mine_anomalies(log: BlockchainLog) -> list[AnomalyFinding]:
    if not log.records:
        return []
    try:
        cf, _ = derive_case_field(log)
    except CaseFieldError:
        return []
    return detect_anomalous_paths(log, build_event_log(log, cf))


def recommend(log: BlockchainLog, metrics: MetricsReport, thresholds: Thresholds | None = None,
              anomalies: list[AnomalyFinding] | None = None) -> list[Recommendation]:
    thresholds = thresholds or Thresholds()
    if not log.records:
        return []
    if anomalies is None:
        anomalies = mine_anomalies(log)
    found = [
        detect_activity_reordering(log, metrics, thresholds),
        detect_pruning(anomalies),
        detect_rate_control(metrics, thresholds),
        detect_delta_writes(log, metrics),
        detect_partitioning(metrics),
        detect_data_model_alteration(metrics),
        detect_block_size(metrics, thresholds),
        detect_endorser_restructuring(metrics, thresholds),
        detect_client_boost(metrics, thresholds),
    ]
    return sorted((r for r in found if r is not None), key=lambda r: r.sort_key())


# reporting


def _cell(v) -> str:
    if isinstance(v, float):
        s = f"{v:.4g}"
    elif isinstance(v, (dict, list, tuple)):
        s = json.dumps(v, sort_keys=True)
    else:
        s = "" if v is None else str(v)
    return s.replace("|", "\\|")


def _table(rows: list[dict]) -> list[str]:
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for r in rows[:MAX_TABLE_ROWS]:
        lines.append("| " + " | ".join(_cell(r.get(c)) for c in cols) + " |")
    if len(rows) > MAX_TABLE_ROWS:
        lines.append(f"\n_{len(rows) - MAX_TABLE_ROWS} more rows in the JSON report._")
    return lines


def report_json(recs: list[Recommendation], metrics: MetricsReport | None = None,
                notes: list[str] | None = None) -> dict:
    out = {"recommendations": [r.to_dict() for r in sorted(recs, key=lambda r: r.sort_key())],
           "notes": list(notes or [])}
    if metrics is not None:
        out["summary"] = {"n_tx": metrics.n_tx, "n_failed": metrics.n_failed, "tr": metrics.tr,
                          "b_sizeavg": metrics.b_sizeavg, "hotkeys": list(metrics.hotkeys)}
    return out


def render_report(recs: list[Recommendation], metrics: MetricsReport | None = None,
                  notes: list[str] | None = None) -> tuple[str, str]:
    """Markdown report and its JSON twin; both are byte-stable for equal input."""
    recs = sorted(recs, key=lambda r: r.sort_key())
    md = ["# Optimization recommendations", ""]
    if metrics is not None:
        md += [
            f"Transactions: {metrics.n_tx}, failed: {metrics.n_failed}, "
            f"Tr: {metrics.tr:.2f} TPS, average block size: {metrics.b_sizeavg:.2f}.",
            "",
        ]
    if not recs:
        md += ["No recommendations: no rule fired for this log.", ""]
    for i, r in enumerate(recs, 1):
        md += [f"## {i}. {r.kind} ({r.level} level)", "", r.explanation, "", "Suggested action:", "",
               "```json", json.dumps(r.suggested_action, sort_keys=True, indent=2), "```", "",
               "Evidence:", ""]
        md += _table([e if isinstance(e, dict) else {"value": e} for e in r.evidence])
        md.append("")
    for n in notes or []:
        md.append(f"- note: {n}")
    text = "\n".join(md).rstrip("\n") + "\n"
    js = json.dumps(report_json(recs, metrics, notes), sort_keys=True, indent=2) + "\n"
    return text, js
