"""World state and the smart contracts executed by simulated endorsers."""

from __future__ import annotations

import bisect

from ..model import TOMBSTONE, RangeRead


class Abort(Exception):
    """Raised by a contract to refuse endorsement (pruned variants)."""


class WorldState:
    """Versioned key-value store. Versions count committed writes per key."""

    def __init__(self, initial: dict[str, str] | None = None):
        self._data: dict[str, tuple[str, int]] = {k: (v, 0) for k, v in (initial or {}).items()}
        self._sorted = sorted(self._data)

    def get(self, key: str) -> tuple[str | None, int]:
        v, ver = self._data.get(key, (None, 0))
        return (None if v == TOMBSTONE else v), ver

    def version(self, key: str) -> int:
        return self._data.get(key, (None, 0))[1]

    def scan(self, start: str, end: str) -> list[tuple[str, str, int]]:
        lo = bisect.bisect_left(self._sorted, start)
        hi = bisect.bisect_left(self._sorted, end)
        out = []
        for k in self._sorted[lo:hi]:
            v, ver = self._data[k]
            if v != TOMBSTONE:
                out.append((k, v, ver))
        return out

    def apply(self, writes) -> None:
        for k, v in writes:
            if k not in self._data:
                bisect.insort(self._sorted, k)
                self._data[k] = (v, 1)
            else:
                self._data[k] = (v, self._data[k][1] + 1)

    def items(self):
        return self._data.items()


class TxView:
    """Execution context of one endorsement: records reads, writes and range reads."""

    def __init__(self, state: WorldState):
        self._state = state
        self.reads: dict[str, int] = {}
        self.writes: dict[str, str] = {}
        self.ranges: list[RangeRead] = []

    def get(self, key: str) -> str | None:
        if key in self.writes:
            v = self.writes[key]
            return None if v == TOMBSTONE else v
        v, ver = self._state.get(key)
        self.reads.setdefault(key, ver)
        return v

    def put(self, key: str, value: str) -> None:
        self.writes[key] = value

    def delete(self, key: str) -> None:
        self.writes[key] = TOMBSTONE

    def range(self, start: str, end: str) -> list[tuple[str, str]]:
        rows = self._state.scan(start, end)
        self.ranges.append(RangeRead(start, end, tuple((k, ver) for k, _, ver in rows)))
        return [(k, v) for k, v, _ in rows]

    def rwset(self):
        return (
            tuple(self.reads.items()),
            tuple(self.writes.items()),
            tuple(self.ranges),
        )


def _int(v: str | None) -> int:
    return int(v) if v is not None and v.lstrip("-").isdigit() else 0


def key_name(prefix: str, i: int, width: int) -> str:
    return f"{prefix}{i:0{width}d}"


class Contract:
    """Base contract: ``initial_state`` seeds the world state, ``execute`` runs one proposal."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.variant = cfg.contract_variant

    def initial_state(self) -> dict[str, str]:
        return {}

    def execute(self, activity: str, args: tuple[str, ...], view: TxView) -> None:
        getattr(self, "tx_" + activity)(view, *args)


class SyntheticContract(Contract):
    """Generic key-value operations over ``key_000000``-style keys."""

    def __init__(self, cfg):
        super().__init__(cfg)
        self.width = max(6, len(str(cfg.key_space_size)))

    def key(self, i: int) -> str:
        return key_name("key_", i, self.width)

    def initial_state(self):
        return {self.key(i): "0" for i in range(self.cfg.key_space_size)}

    def tx_Read(self, v, k):
        v.get(k)

    def tx_Insert(self, v, k, nonce):
        v.put(k, "i" + nonce)

    def tx_Update(self, v, k, nonce):
        v.get(k)
        v.put(k, "u" + nonce)

    def tx_RangeRead(self, v, k):
        i = int(k[len("key_"):])
        v.range(k, self.key(i + self.cfg.range_size))


class SupplyChainContract(Contract):
    """Products move through ASN -> shipped -> unloaded."""

    def tx_PushASN(self, v, p):
        v.put("product_" + p, "asn")

    def tx_Ship(self, v, p):
        if v.get("product_" + p) == "asn":
            v.put("product_" + p, "shipped")
        elif self.variant == "pruned":
            raise Abort("ship without ASN")

    def tx_QueryASN(self, v, p):
        v.get("product_" + p)

    def tx_Unload(self, v, p):
        if v.get("product_" + p) == "shipped":
            v.put("product_" + p, "unloaded")
        elif self.variant == "pruned":
            raise Abort("unload before ship")

    def tx_UpdateAuditInfo(self, v, p):
        v.get("product_" + p)
        v.put("audit_" + p, "audited")

    def tx_QueryProducts(self, v, p):
        v.get("product_" + p)


class DigitalRightsContract(Contract):
    """Music play counts, metadata queries and revenue calculation."""

    def _k(self, m: str, reader: bool) -> str:
        if self.variant == "partitioned":
            return ("md/" if reader else "pc/") + "music_" + m
        return "music_" + m

    def initial_state(self):
        out = {}
        for i in range(self.cfg.key_space_size):
            m = f"{i:05d}"
            if self.variant == "partitioned":
                out["pc/music_" + m] = "0"
                out["md/music_" + m] = "meta"
            else:
                out["music_" + m] = "0"
            out["rights_" + m] = "holders"
        return out

    def tx_Play(self, v, m, nonce):
        if self.variant == "delta_write":
            v.put(f"music_{m}_delta_{nonce}", "1")
            return
        k = self._k(m, False)
        v.put(k, str(_int(v.get(k)) + 1))

    def tx_viewMetaData(self, v, m, *album):
        for x in (m,) + album:
            v.get(self._k(x, True))

    def tx_queryRightHolders(self, v, m):
        v.get(self._k(m, True))
        v.get("rights_" + m)

    def tx_calcRevenue(self, v, m, *others):
        total = 0
        for x in (m,) + others:
            total += _int(v.get(self._k(x, False)))
        v.put("revenue_" + m, f"r{total}")

    def tx_addMusic(self, v, m):
        if self.variant == "partitioned":
            v.put("pc/music_" + m, "0")
            v.put("md/music_" + m, "meta")
        else:
            v.put("music_" + m, "0")
        v.put("rights_" + m, "holders")


class HealthRecordContract(Contract):
    """Patient records guarded by an access list."""

    def initial_state(self):
        out = {}
        for i in range(self.cfg.key_space_size):
            p = f"{i:05d}"
            out["ehr_" + p] = "record"
            out["access_" + p] = "d0"
        return out

    def tx_updateEHR(self, v, p, nonce):
        v.get("access_" + p)
        v.put("ehr_" + p, "rec" + nonce)

    def tx_readEHR(self, v, p):
        v.get("access_" + p)
        v.get("ehr_" + p)

    def tx_grantAccess(self, v, p, d):
        acl = (v.get("access_" + p) or "").split(",")
        if d not in acl:
            acl.append(d)
        v.put("access_" + p, ",".join(a for a in acl if a))

    def tx_revokeAccess(self, v, p, d):
        acl = (v.get("access_" + p) or "").split(",")
        if d in acl:
            v.put("access_" + p, ",".join(a for a in acl if a and a != d))
        elif self.variant == "pruned":
            raise Abort("revoke without grant")

    def tx_addEHR(self, v, p):
        v.put("ehr_" + p, "record")
        v.put("access_" + p, "d0")


class VotingContract(Contract):
    """One election whose tally lives under a single key."""

    def initial_state(self):
        return {"parties_1": "p1,p2,p3,p4", "election_1": "p1:0|p2:0|p3:0|p4:0",
                "results_1": "pending", "status_1": "open"}

    def tx_queryParties(self, v, e):
        v.get("parties_" + e)

    def tx_Vote(self, v, voter, party):
        if self.variant == "altered_data_model":
            v.put("voter_" + voter, party)
            return
        tally = dict(item.split(":") for item in (v.get("election_1") or "").split("|") if item)
        tally[party] = str(_int(tally.get(party)) + 1)
        v.put("election_1", "|".join(f"{p}:{n}" for p, n in sorted(tally.items())))

    def tx_seeResults(self, v, e):
        v.get("results_" + e)

    def tx_endElection(self, v, e):
        v.get("status_" + e)
        v.put("status_" + e, "closed")


class LoanApplicationContract(Contract):
    """Applications filed against an employee record."""

    def initial_state(self):
        return {f"employee_{i:05d}": "none" for i in range(self.cfg.key_space_size)}

    def tx_submitApplication(self, v, e, nonce):
        if self.variant == "altered_data_model":
            v.put("application_" + nonce, e)
            return
        v.get("employee_" + e)
        v.put("employee_" + e, "app" + nonce)


CONTRACTS = {
    "synthetic": SyntheticContract,
    "scm": SupplyChainContract,
    "drm": DigitalRightsContract,
    "ehr": HealthRecordContract,
    "dv": VotingContract,
    "lap": LoanApplicationContract,
}


def make_contract(cfg) -> Contract:
    return CONTRACTS[cfg.scenario](cfg)
