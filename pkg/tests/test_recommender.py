import json

import pytest
from golden import CASES, build, data_model, delta, filler, partitioning, rate_control, reordering
from helpers import make_log, tx

from ledgerlens.metrics import compute_metrics
from ledgerlens.model import KINDS, Recommendation, Thresholds
from ledgerlens.recommender import (
    MAX_TABLE_ROWS,
    delta_write_near_misses,
    detect_block_size,
    detect_endorser_restructuring,
    detect_rate_control,
    recommend,
    render_report,
)


def kinds(log, th=None):
    return [r.kind for r in recommend(log, compute_metrics(log, th), th)]


@pytest.mark.parametrize("kind", list(CASES))
def test_golden_case_fires_only_its_rule(kind):
    fire, perturbed, _ = CASES[kind]
    assert kinds(fire()) == [kind]
    assert kinds(perturbed()) == []


def test_every_kind_has_a_golden_case():
    assert set(CASES) == set(KINDS)


def test_reordering_evidence_and_action():
    log = reordering(40, 60)
    [rec] = recommend(log, compute_metrics(log))
    head = rec.evidence[0]
    assert head["attributable_failures"] == 40 and head["read_conflicts"] == 100
    assert head["commit_order"] == 1
    assert rec.suggested_action == {"reorder": [["W", "R"]]}


def test_reordering_threshold_is_configurable():
    assert kinds(reordering(39, 61), Thresholds(at=0.39)) == ["activity_reordering"]


def test_rate_cap_comes_from_calm_intervals():
    # interval 0: 1500 calm txs; interval 1: 3000 txs, 900 failing; interval 2: a 10-tx tail
    ts = [i * 10000 / 1500 for i in range(1500)] + [10000 + i * 10000 / 3000 for i in range(3000)] + [
        20000 + i for i in range(10)]
    recs = [tx(i, "Q", reads=((f"q_{i}", 0),), ts=t, block=1 + i // 300,
               status="endorsement_policy_failure" if 1500 <= i < 4200 and i % 3 == 0 else "success")
            for i, t in enumerate(ts)]
    m = compute_metrics(make_log(recs))
    assert m.trd_counts == (1500, 3000, 10) and m.frd_counts == (0, 900, 0)
    rec = detect_rate_control(m, Thresholds())
    assert [e["interval"] for e in rec.evidence] == [1]
    assert rec.suggested_action == {"max_send_rate_tps": 150.0}
    only = detect_rate_control(compute_metrics(rate_control(900)), Thresholds())
    assert only.suggested_action == {"max_send_rate_tps": 100.0}  # no calm interval: Rt1 / 3


def test_delta_near_miss_is_reported_not_fired():
    log = delta("7")
    misses = delta_write_near_misses(log, compute_metrics(log))
    assert misses == [{"activity": "C", "key": "c_1", "step": 2.0, "commit_order": 40}]
    assert delta_write_near_misses(delta("6"), compute_metrics(delta("6"))) == []


def test_hotkey_rules_split_on_activity_count():
    p = recommend(partitioning(3, 2), compute_metrics(partitioning(3, 2)))[0]
    assert p.suggested_action == {"split_activity_groups": [["A", "B"]]}
    d = recommend(data_model(5), compute_metrics(data_model(5)))[0]
    assert d.suggested_action == {"rekey": ["h_1"]}


def test_block_size_band_is_relative_to_tr():
    big = build(filler(200), span_ms=2000.0, block_size=160)  # avg 100: inside the band
    assert detect_block_size(compute_metrics(big), Thresholds()) is None
    huge = build(filler(200), span_ms=2000.0, block_size=200)  # avg 200 >= 160
    rec = detect_block_size(compute_metrics(huge), Thresholds())
    assert rec.suggested_action == {"block_count": 100, "block_timeout_s": 1.0}


def test_balanced_majority_endorsement_does_not_fire():
    # every tx endorsed by both orgs: each org at 100% but none above the mean
    log = build(filler(100))
    assert detect_endorser_restructuring(compute_metrics(log), Thresholds()) is None


def test_results_are_sorted_by_level_then_kind():
    recs = [Recommendation(k, ({"commit_order": 9 - i},)) for i, k in enumerate(reversed(KINDS))]
    md, js = render_report(recs)
    order = [r["kind"] for r in json.loads(js)["recommendations"]]
    assert order == sorted(KINDS, key=lambda k: Recommendation(k, ({},)).sort_key()[:2])


def test_report_rendering_is_byte_stable_and_capped():
    log = reordering(40, 60)
    m = compute_metrics(log)
    recs = recommend(log, m)
    a = render_report(recs, m, ["n1"])
    b = render_report(list(reversed(recs)), compute_metrics(log), ["n1"])
    assert a == b
    many = Recommendation("delta_writes", tuple({"commit_order": i, "x": "a|b"} for i in range(30)))
    md, js = render_report([many])
    assert md.count("\n| ") == MAX_TABLE_ROWS + 1
    assert "10 more rows" in md and "a\\|b" in md
    assert len(json.loads(js)["recommendations"][0]["evidence"]) == 30


def test_no_recommendation_stub():
    log = build(filler(100))
    md, js = render_report(recommend(log, compute_metrics(log)), compute_metrics(log))
    assert "No recommendations" in md
    assert json.loads(js)["recommendations"] == []
