"""Simulation parameters."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from typing import Any, Mapping

from ..model import parse_key_values
from ..policy import PolicyError, resolve_policy

WORKLOAD_TYPES = ("uniform", "read_heavy", "insert_heavy", "update_heavy", "rangeread_heavy")
CONTRACT_VARIANTS = ("baseline", "pruned", "delta_write", "partitioned", "altered_data_model")
SCENARIOS = ("synthetic", "scm", "drm", "ehr", "dv", "lap")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    n_transactions: int = 2000
    send_rate: float = 300.0
    workload_type: str = "uniform"
    key_space_size: int = 1000
    key_skew: float = 1.0
    n_orgs: int = 2
    endorsement_policy: str = "P3"
    endorser_skew: float = 0.0
    tx_dist_skew: float = 0.0
    block_count: int = 300
    block_timeout: float = 1.0
    endorse_latency_ms: float = 50.0
    order_latency_ms: float = 100.0
    validate_latency_ms: float = 1.0
    clients_per_org: int = 5
    contract_variant: str = "baseline"
    # knobs beyond the basic control variables
    scenario: str = "synthetic"
    peers_per_org: int = 2
    client_latency_ms: float = 5.0
    block_overhead_ms: float = 150.0
    order_jitter_ms: float = 100.0
    endorsement_miss_rate: float = 0.0
    range_size: int = 10
    deferred_activities: tuple[str, ...] = field(default=())
    client_boost_orgs: tuple[str, ...] = field(default=())

    def __post_init__(self):
        problems = []
        if not self.send_rate > 0:
            problems.append("send_rate must be > 0")
        if self.block_count < 1:
            problems.append("block_count must be >= 1")
        if not self.block_timeout > 0:
            problems.append("block_timeout must be > 0")
        if self.key_space_size < 1:
            problems.append("key_space_size must be >= 1")
        if self.key_skew < 0 or self.endorser_skew < 0:
            problems.append("skews must be >= 0")
        if not 0 <= self.tx_dist_skew < 1:
            problems.append("tx_dist_skew must be in [0, 1)")
        if self.n_transactions < 0:
            problems.append("n_transactions must be >= 0")
        if self.n_orgs < 1 or self.clients_per_org < 1 or self.peers_per_org < 1:
            problems.append("n_orgs, clients_per_org and peers_per_org must be >= 1")
        if not self.validate_latency_ms > 0:
            problems.append("validate_latency_ms must be > 0")
        if min(self.endorse_latency_ms, self.order_latency_ms, self.client_latency_ms, self.block_overhead_ms,
               self.order_jitter_ms) < 0:
            problems.append("latencies must be >= 0")
        if not 0 <= self.endorsement_miss_rate <= 1:
            problems.append("endorsement_miss_rate must be in [0, 1]")
        if self.workload_type not in WORKLOAD_TYPES:
            problems.append(f"workload_type must be one of {', '.join(WORKLOAD_TYPES)}")
        if self.contract_variant not in CONTRACT_VARIANTS:
            problems.append(f"contract_variant must be one of {', '.join(CONTRACT_VARIANTS)}")
        if self.scenario not in SCENARIOS:
            problems.append(f"scenario must be one of {', '.join(SCENARIOS)}")
        if self.range_size < 1:
            problems.append("range_size must be >= 1")
        try:
            resolve_policy(self.endorsement_policy, self.n_orgs)
        except PolicyError as exc:
            problems.append(f"endorsement_policy: {exc}")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def orgs(self) -> list[str]:
        return [f"Org{i}" for i in range(1, self.n_orgs + 1)]

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v) for f in fields(self)}

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any], base: "SimConfig | None" = None) -> "SimConfig":
        base = base or cls()
        known = {f.name: f for f in fields(cls)}
        changes = {}
        for raw_key, raw in values.items():
            key = raw_key.strip().lower()
            if key not in known:
                raise ConfigError(f"unknown simulation setting {raw_key!r}")
            current = getattr(base, key)
            try:
                if isinstance(current, tuple):
                    items = raw if isinstance(raw, (list, tuple)) else str(raw).split(",")
                    changes[key] = tuple(str(s).strip() for s in items if str(s).strip())
                elif isinstance(current, bool):
                    changes[key] = str(raw).lower() in ("1", "true", "yes")
                elif isinstance(current, int):
                    changes[key] = int(raw)
                elif isinstance(current, float):
                    changes[key] = float(raw)
                else:
                    changes[key] = str(raw).strip()
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        return dataclasses.replace(base, **changes)

    @classmethod
    def from_text(cls, text: str, base: "SimConfig | None" = None) -> "SimConfig":
        """Parse a flat ``key = value`` file. A ``preset`` key starts from a built-in scenario."""
        values = parse_key_values(text)
        preset = values.pop("preset", None)
        if preset is not None:
            from .scenarios import builtin_scenarios

            presets = builtin_scenarios()
            if preset not in presets:
                raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(sorted(presets))}")
            base = presets[preset]
        return cls.from_mapping(values, base)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {','.join(v) if isinstance(v, tuple) else v}")
        return "\n".join(lines) + "\n"
