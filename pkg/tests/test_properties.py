"""Property tests of simulator and pipeline invariants over random small configurations."""

from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import serial_revalidate
from strategies import logs

from ledgerlens.canonical import dumps
from ledgerlens.eventlog import CaseFieldError, build_event_log, derive_case_field
from ledgerlens.metrics import compute_metrics
from ledgerlens.policy import resolve_policy
from ledgerlens.recommender import recommend
from ledgerlens.simulator import SimConfig, run
from ledgerlens.simulator.engine import initial_state

CONFIGS = st.builds(
    SimConfig,
    seed=st.integers(0, 10_000),
    n_transactions=st.integers(1, 250),
    send_rate=st.sampled_from([20.0, 300.0, 2000.0]),
    workload_type=st.sampled_from(["uniform", "read_heavy", "insert_heavy", "update_heavy", "rangeread_heavy"]),
    key_space_size=st.integers(1, 60),
    key_skew=st.sampled_from([0.0, 1.0]),
    n_orgs=st.integers(1, 5),
    endorsement_policy=st.sampled_from(["P1", "P2", "P3", "P4"]),
    block_count=st.integers(1, 60),
    block_timeout=st.sampled_from([0.05, 1.0]),
    scenario=st.sampled_from(["synthetic", "scm", "drm", "ehr", "dv", "lap"]),
    endorsement_miss_rate=st.sampled_from([0.0, 0.1]),
    order_jitter_ms=st.sampled_from([0.0, 100.0]),
)


@settings(max_examples=120, deadline=None)
@given(CONFIGS)
def test_simulator_invariants(cfg):
    log, perf = run(cfg)
    # every proposal commits exactly once (baseline contracts never abort)
    assert len(log) == cfg.n_transactions and perf.aborted == 0
    assert [r.commit_order for r in log.records] == list(range(len(log)))
    assert all(len(b.tx_commit_orders) <= cfg.block_count for b in log.blocks)
    blocks = [r.block_number for r in log.records]
    assert blocks == sorted(blocks)
    pol = resolve_policy(cfg.endorsement_policy, cfg.n_orgs)
    assert serial_revalidate(log, initial_state(cfg), pol.evaluate) == [r.status for r in log.records]
    # a read can only have seen versions committed before it
    last = {}
    for r in log.records:
        for k, v in r.read_set:
            assert 0 <= v <= last.get(k, 0)
        if r.status == "success":
            for k, _ in r.write_set:
                last[k] = last.get(k, 0) + 1
    assert dumps(run(cfg)[0]) == dumps(log)


@settings(max_examples=150, deadline=None)
@given(logs(max_size=30))
def test_trace_lengths_sum_to_log_size(log):
    try:
        cf, _ = derive_case_field(log)
    except CaseFieldError:
        return
    assert sum(len(t) for t in build_event_log(log, cf).traces.values()) == len(log)


@settings(max_examples=150, deadline=None)
@given(logs(max_size=30))
def test_recommendations_are_well_formed_and_ordered(log):
    recs = recommend(log, compute_metrics(log))
    keys = [r.sort_key() for r in recs]
    assert keys == sorted(keys)
    assert len({r.kind for r in recs}) == len(recs)
    assert all(r.evidence for r in recs)
