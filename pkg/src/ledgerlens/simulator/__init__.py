"""Deterministic execute-order-validate simulator and workload generator."""

from ..policy import evaluate_policy
from .config import CONTRACT_VARIANTS, SCENARIOS, WORKLOAD_TYPES, ConfigError, SimConfig
from .contracts import WorldState
from .engine import PerfSummary, emit_raw, run
from .scenarios import builtin_scenarios
from .transforms import apply_optimization
from .workload import Proposal, generate_workload

__all__ = [
    "CONTRACT_VARIANTS",
    "SCENARIOS",
    "WORKLOAD_TYPES",
    "ConfigError",
    "PerfSummary",
    "Proposal",
    "SimConfig",
    "WorldState",
    "apply_optimization",
    "builtin_scenarios",
    "emit_raw",
    "evaluate_policy",
    "generate_workload",
    "run",
]
