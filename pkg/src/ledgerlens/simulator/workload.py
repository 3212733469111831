"""Proposal streams for the synthetic and use-case workloads."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..policy import choose_endorsers, resolve_policy
from .config import SimConfig

HEAVY_SHARE = 0.7
JITTER = 0.2
SCM_BATCH = 150
SYNTHETIC_OPS = ("Read", "Insert", "Update", "RangeRead")
_HEAVY_OP = {"read_heavy": "Read", "insert_heavy": "Insert", "update_heavy": "Update",
             "rangeread_heavy": "RangeRead"}

# separate random streams so that e.g. changing the invoker skew keeps the op sequence
_OPS, _JITTER, _INVOKERS, _ENDORSERS, _MISS = range(5)


@dataclass(frozen=True)
class Proposal:
    index: int
    ts_ms: float  # scheduled send time
    activity: str
    args: tuple[str, ...]
    client: str
    org: str
    endorsers: tuple[str, ...]


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream])


def zipf_probs(n: int, s: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1, dtype=float) ** s
    return w / w.sum()


def op_mix(workload_type: str) -> dict[str, float]:
    if workload_type == "uniform":
        return {op: 1 / len(SYNTHETIC_OPS) for op in SYNTHETIC_OPS}
    heavy = _HEAVY_OP[workload_type]
    rest = (1 - HEAVY_SHARE) / (len(SYNTHETIC_OPS) - 1)
    return {op: HEAVY_SHARE if op == heavy else rest for op in SYNTHETIC_OPS}


def _synthetic(cfg: SimConfig, rng) -> list[tuple[str, tuple, float]]:
    from .contracts import SyntheticContract

    c = SyntheticContract(cfg)
    mix = op_mix(cfg.workload_type)
    ops = rng.choice(len(SYNTHETIC_OPS), size=cfg.n_transactions, p=[mix[o] for o in SYNTHETIC_OPS])
    keys = rng.choice(cfg.key_space_size, size=cfg.n_transactions, p=zipf_probs(cfg.key_space_size, cfg.key_skew))
    out = []
    for i, (o, k) in enumerate(zip(ops.tolist(), keys.tolist())):
        op = SYNTHETIC_OPS[o]
        args = (c.key(k), str(i)) if op in ("Insert", "Update") else (c.key(k),)
        out.append((op, args, cfg.send_rate))
    return out


def _scm(cfg: SimConfig, rng) -> list[tuple[str, tuple, float]]:
    out: list[tuple[str, tuple]] = []
    pushed: list[str] = []
    next_product = 0
    while len(out) < cfg.n_transactions:
        batch = [f"p{next_product + j:05d}" for j in range(SCM_BATCH)]
        next_product += SCM_BATCH
        for step in ("PushASN", "Ship", "QueryASN", "Unload"):
            for p in batch:
                out.append((step, (p,)))
                if step == "PushASN":
                    pushed.append(p)
                u = rng.random()
                if u < 0.2:
                    q = pushed[int(rng.integers(len(pushed)))]
                    out.append(("QueryProducts" if u < 0.1 else "UpdateAuditInfo", (q,)))
    return [(a, args, cfg.send_rate) for a, args in out[: cfg.n_transactions]]


DRM_MIX = {"Play": 0.70, "viewMetaData": 0.14, "queryRightHolders": 0.10, "calcRevenue": 0.05, "addMusic": 0.01}
DRM_ALBUM = 4
DRM_REVENUE_READS = 10


def _drm(cfg: SimConfig, rng) -> list[tuple[str, tuple, float]]:
    names = list(DRM_MIX)
    acts = rng.choice(len(names), size=cfg.n_transactions, p=list(DRM_MIX.values()))
    probs = zipf_probs(cfg.key_space_size, cfg.key_skew)
    new_id = cfg.key_space_size
    out = []
    for i, a in enumerate(acts.tolist()):
        act = names[a]
        m = f"{int(rng.choice(cfg.key_space_size, p=probs)):05d}"
        if act == "Play":
            args = (m, str(i))
        elif act == "calcRevenue":
            others = sorted({f"{x:05d}" for x in rng.choice(cfg.key_space_size, size=DRM_REVENUE_READS - 1,
                                                                 p=probs).tolist()} - {m})
            args = (m, *others)
        elif act == "viewMetaData":
            album = sorted({f"{x:05d}" for x in rng.choice(cfg.key_space_size, size=DRM_ALBUM - 1,
                                                               p=probs).tolist()} - {m})
            args = (m, *album)
        elif act == "addMusic":
            args = (f"{new_id:05d}",)
            new_id += 1
        else:
            args = (m,)
        out.append((act, args, cfg.send_rate))
    return out


EHR_MIX = {"updateEHR": 0.70, "readEHR": 0.10, "grantAccess": 0.08, "revokeAccess": 0.07, "addEHR": 0.05}
EHR_DOCTORS = 4


def _ehr(cfg: SimConfig, rng) -> list[tuple[str, tuple, float]]:
    names = list(EHR_MIX)
    acts = rng.choice(len(names), size=cfg.n_transactions, p=list(EHR_MIX.values()))
    probs = zipf_probs(cfg.key_space_size, cfg.key_skew)
    new_id = cfg.key_space_size
    out = []
    for i, a in enumerate(acts.tolist()):
        act = names[a]
        p = f"{int(rng.choice(cfg.key_space_size, p=probs)):05d}"
        if act == "updateEHR":
            args = (p, str(i))
        elif act in ("grantAccess", "revokeAccess"):
            args = (p, f"d{int(rng.integers(1, EHR_DOCTORS + 1))}")
        elif act == "addEHR":
            args = (f"{new_id:05d}",)
            new_id += 1
        else:
            args = (p,)
        out.append((act, args, cfg.send_rate))
    return out


DV_QUERY_RATE = 100.0


def _dv(cfg: SimConfig, rng) -> list[tuple[str, tuple, float]]:
    n = cfg.n_transactions
    n_query = n // 6
    n_tail = min(2, n - n_query)
    n_vote = n - n_query - n_tail
    out = [("queryParties", ("1",), min(DV_QUERY_RATE, cfg.send_rate))] * n_query
    parties = rng.integers(1, 5, size=n_vote).tolist()
    out += [("Vote", (f"v{i:06d}", f"p{p}"), cfg.send_rate) for i, p in enumerate(parties)]
    out += [("seeResults", ("1",), cfg.send_rate), ("endElection", ("1",), cfg.send_rate)][:n_tail]
    return out


def _lap(cfg: SimConfig, rng) -> list[tuple[str, tuple, float]]:
    emp = rng.choice(cfg.key_space_size, size=cfg.n_transactions, p=zipf_probs(cfg.key_space_size, cfg.key_skew))
    return [("submitApplication", (f"{e:05d}", str(i)), cfg.send_rate) for i, e in enumerate(emp.tolist())]


GENERATORS = {"synthetic": _synthetic, "scm": _scm, "drm": _drm, "ehr": _ehr, "dv": _dv, "lap": _lap}


def defer(items: list, deferred: tuple[str, ...]) -> list:
    """Stable move of the deferred activities behind everything else."""
    if not deferred:
        return items
    ds = set(deferred)
    return [it for it in items if it[0] not in ds] + [it for it in items if it[0] in ds]


def schedule(rates: list[float], rng) -> np.ndarray:
    """Send times on a constant-rate grid per run of equal rates, plus jitter below 20% of a slot."""
    ts = np.empty(len(rates))
    start = 0.0
    i = 0
    while i < len(rates):
        j = i
        while j < len(rates) and rates[j] == rates[i]:
            j += 1
        step = 1000.0 / rates[i]
        ts[i:j] = start + step * np.arange(j - i)
        start += step * (j - i)
        i = j
    steps = 1000.0 / np.asarray(rates, dtype=float) if rates else np.empty(0)
    return ts + rng.random(len(rates)) * JITTER * steps


def invoker_orgs(cfg: SimConfig, rng) -> list[str]:
    """Exact per-org quotas, shuffled. Org1 takes ``tx_dist_skew`` of the load when it is set."""
    n, orgs = cfg.n_transactions, cfg.orgs
    if cfg.tx_dist_skew > 0 and len(orgs) > 1:
        first = round(cfg.tx_dist_skew * n)
        rest = [(n - first) // (len(orgs) - 1)] * (len(orgs) - 1)
        for i in range((n - first) - sum(rest)):
            rest[i] += 1
        quotas = [first] + rest
    else:
        quotas = [n // len(orgs)] * len(orgs)
        for i in range(n - sum(quotas)):
            quotas[i] += 1
    seq = np.repeat(np.arange(len(orgs)), quotas)
    return [orgs[i] for i in rng.permutation(seq).tolist()]


def clients_of(cfg: SimConfig, org: str) -> int:
    return cfg.clients_per_org * (2 if org in cfg.client_boost_orgs else 1)


def generate_workload(cfg: SimConfig, seed: int | None = None) -> list[Proposal]:
    seed = cfg.seed if seed is None else seed
    items = GENERATORS[cfg.scenario](cfg, _rng(seed, _OPS))
    items = defer(items, cfg.deferred_activities)
    ts = schedule([r for _, _, r in items], _rng(seed, _JITTER))
    orgs = invoker_orgs(cfg, _rng(seed, _INVOKERS))
    policy = resolve_policy(cfg.endorsement_policy, cfg.n_orgs)
    erng = _rng(seed, _ENDORSERS)
    org_w = dict(zip(cfg.orgs, zipf_probs(cfg.n_orgs, cfg.endorser_skew).tolist()))
    peer_p = zipf_probs(cfg.peers_per_org, cfg.endorser_skew)
    miss = _rng(seed, _MISS)
    rr: dict[str, int] = {}
    out = []
    for i, ((act, args, _), t, org) in enumerate(zip(items, ts.tolist(), orgs)):
        c = rr.get(org, 0)
        rr[org] = c + 1
        client = f"{org}.client{c % clients_of(cfg, org)}"
        chosen = sorted(choose_endorsers(policy, org_w, erng))
        if cfg.endorsement_miss_rate and miss.random() < cfg.endorsement_miss_rate and chosen:
            chosen.pop(int(miss.integers(len(chosen))))
        endorsers = tuple(f"{o}.peer{int(erng.choice(cfg.peers_per_org, p=peer_p))}" for o in chosen)
        out.append(Proposal(i, t, act, tuple(args), client, org, endorsers))
    return out
