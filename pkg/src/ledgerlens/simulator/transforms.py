"""Config changes that put a recommendation into effect."""

from __future__ import annotations

from ..model import (
    ACTIVITY_REORDERING,
    BLOCK_SIZE_ADAPTATION,
    CLIENT_RESOURCE_BOOST,
    DATA_MODEL_ALTERATION,
    DELTA_WRITES,
    ENDORSER_RESTRUCTURING,
    PROCESS_MODEL_PRUNING,
    SMART_CONTRACT_PARTITIONING,
    TRANSACTION_RATE_CONTROL,
    Recommendation,
    org_of,
)
from .config import SimConfig

_VARIANT = {
    PROCESS_MODEL_PRUNING: "pruned",
    DELTA_WRITES: "delta_write",
    SMART_CONTRACT_PARTITIONING: "partitioned",
    DATA_MODEL_ALTERATION: "altered_data_model",
}


def deferred_readers(pairs: list[list[str]]) -> tuple[str, ...]:
    """Reader activities to move behind their writers.

    Readers that also act as writers in another pair stay put when possible,
    otherwise every reader is deferred.
    """
    writers = {w for w, _ in pairs}
    readers = {r for _, r in pairs}
    pure = readers - writers
    return tuple(sorted(pure or readers))


def apply_optimization(cfg: SimConfig, rec: Recommendation | None) -> SimConfig:
    if rec is None:
        return cfg
    act = rec.suggested_action
    if rec.kind == BLOCK_SIZE_ADAPTATION:
        return cfg.replace(block_count=int(act["block_count"]), block_timeout=float(act.get("block_timeout_s", 1.0)))
    if rec.kind == ENDORSER_RESTRUCTURING:
        return cfg.replace(endorsement_policy="P4", endorser_skew=0.0)
    if rec.kind == TRANSACTION_RATE_CONTROL:
        return cfg.replace(send_rate=float(act["max_send_rate_tps"]))
    if rec.kind == CLIENT_RESOURCE_BOOST:
        orgs = tuple(sorted({org_of(x) for x in act["scale_clients_of"]} | set(cfg.client_boost_orgs)))
        return cfg.replace(client_boost_orgs=orgs)
    if rec.kind == ACTIVITY_REORDERING:
        return cfg.replace(deferred_activities=deferred_readers(act["reorder"]))
    if rec.kind in _VARIANT:
        return cfg.replace(contract_variant=_VARIANT[rec.kind])
    raise ValueError(f"no simulator transform for {rec.kind!r}")
