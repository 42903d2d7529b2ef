import json

import pytest

from detrec.campaign import BUDGET_EXHAUSTED, CampaignConfig, random_campaign, replay_trace, run_one
from detrec.objects import ObjectKind
from detrec.traceio import loads


def report_bytes(kind, **cfg):
    rep = random_campaign(kind, 3, CampaignConfig(**cfg))
    return json.dumps(rep.to_dict(), sort_keys=True)


def test_same_seed_same_report():
    a = report_bytes("cas-detect+cas:skip-cp1", schedules=150, seed=4)
    assert a == report_bytes("cas-detect+cas:skip-cp1", schedules=150, seed=4)
    assert a != report_bytes("cas-detect+cas:skip-cp1", schedules=150, seed=5)


def test_workers_do_not_change_the_report():
    one = report_bytes("reg-detect", schedules=40, seed=2)
    two = report_bytes("reg-detect", schedules=40, seed=2, workers=2)
    assert one == two


def test_report_fields():
    rep = random_campaign("maxreg", 2, CampaignConfig(schedules=20, seed=1))
    d = rep.to_dict()
    assert set(d) == {"version", "config", "totals", "perVerdict", "counterexamples"}
    assert d["totals"]["schedules"] == 20 == sum(d["perVerdict"].values())
    assert d["config"]["budget"] == 10 * 2 * 2 * 3
    assert "workers" not in d["config"]
    timed = random_campaign("maxreg", 2, CampaignConfig(schedules=5, seed=1), timing=True).to_dict()
    assert isinstance(timed["timingMs"], int)


def test_unmutated_objects_pass():
    for kind in ("reg-detect", "cas-detect", "maxreg"):
        rep = random_campaign(kind, 3, CampaignConfig(schedules=200, seed=9))
        assert rep.counts["fail"] == 0 and rep.counts["inconclusive"] == 0, kind


def test_counterexamples_replay():
    rep = random_campaign("cas-detect+harness:skip-announce-reset", 3, CampaignConfig(schedules=300, seed=1))
    assert rep.verdict == "fail" and rep.counterexamples
    for trace in rep.counterexamples:
        again = replay_trace(loads(trace.dumps()))
        assert again.matches
        assert again.verdict == trace.verdict


def test_tight_budget_is_budget_exhausted():
    out = run_one(ObjectKind("reg-detect"), 2, CampaignConfig(budget=5, seed=0), 0, {})
    assert out.verdict == BUDGET_EXHAUSTED and out.steps == 5


def test_retries_reinvoke_failed_operations():
    rep = random_campaign("cas-detect", 2, CampaignConfig(schedules=100, seed=3, retries=1, crash_prob=0.3))
    assert rep.counts["fail"] == 0


@pytest.mark.parametrize("budget,expected", [(None, 60), (7, 7)])
def test_effective_budget(budget, expected):
    assert CampaignConfig(budget=budget, ops_per_process=1, max_crashes=2).effective_budget(2) == expected
