"""Built-in simulation presets."""

from __future__ import annotations

from .config import SimConfig


def builtin_scenarios() -> dict[str, SimConfig]:
    return {
        "default": SimConfig(),
        "scm": SimConfig(scenario="scm", n_transactions=6000, send_rate=300.0),
        "drm": SimConfig(scenario="drm", n_transactions=10000, send_rate=250.0, key_space_size=1000, key_skew=0.9,
                         block_count=150),
        "ehr": SimConfig(scenario="ehr", n_transactions=6000, send_rate=300.0, key_space_size=80, key_skew=0.0),
        "dv": SimConfig(scenario="dv", n_transactions=6002, send_rate=300.0),
        "lap": SimConfig(scenario="lap", n_transactions=2000, send_rate=10.0, key_space_size=200, key_skew=1.0),
        "block50": SimConfig(n_transactions=12000, block_count=50),
        "read_update": SimConfig(n_transactions=4000, workload_type="read_heavy", key_space_size=500),
    }
