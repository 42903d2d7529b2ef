import itertools

import pytest

from detrec.checker import (
    FAIL_VERDICT,
    INCONCLUSIVE,
    PASS,
    check_detectability,
    check_durable_linearizability,
    combined_verdict,
    operations,
    replay_witness,
)
from detrec.errors import MalformedHistory
from detrec.explore import enumerate_schedules
from detrec.history import HistoryEvent
from detrec.monitor import Monitor
from detrec.nvm import ACK, FAIL
from detrec.seqspec import CasSpec, QueueSpec, RegisterSpec

from conftest import CAS, READ, W

REG = RegisterSpec((0, 1, 2))


def H(*rows):
    """Rows are (kind, pid, instance, op, value) or just "crash"."""
    out = []
    for i, row in enumerate(rows):
        if row == "crash":
            out.append(HistoryEvent(i, "crash"))
        else:
            out.append(HistoryEvent(i, *row))
    return out


def inv(p, k, op):
    return ("invoke", p, f"p{p}.{k}", op, None)


def ret(p, k, op, v):
    return ("respond", p, f"p{p}.{k}", op, v)


def rinv(p, k, op):
    return ("recoverInvoke", p, f"p{p}.{k}", op, None)


def rret(p, k, op, v):
    return ("recoverRespond", p, f"p{p}.{k}", op, v)


def both(h, spec=REG):
    return check_durable_linearizability(h, spec).verdict, check_detectability(h, spec).verdict


def test_sequential_history_passes():
    h = H(inv(0, 0, W(1)), ret(0, 0, W(1), ACK), inv(1, 0, READ), ret(1, 0, READ, 1))
    res = check_detectability(h, REG)
    assert res.ok and replay_witness(res.witness, REG)
    assert [w[0] for w in res.witness] == ["p0.0", "p1.0"]


def test_stale_read_fails():
    h = H(inv(0, 0, W(1)), ret(0, 0, W(1), ACK), inv(1, 0, READ), ret(1, 0, READ, 0))
    res = check_durable_linearizability(h, REG)
    assert res.verdict == FAIL_VERDICT
    assert "p1.0" in res.explanation


def test_concurrent_read_may_see_either():
    for v in (0, 1):
        h = H(inv(0, 0, W(1)), inv(1, 0, READ), ret(1, 0, READ, v), ret(0, 0, W(1), ACK))
        assert both(h) == (PASS, PASS)


def test_crashed_write_may_take_effect():
    # pending after the crash: either order is durable
    for v in (0, 1):
        h = H(inv(0, 0, W(1)), "crash", inv(1, 0, READ), ret(1, 0, READ, v))
        assert both(h) == (PASS, PASS)


def test_recovered_fail_must_not_take_effect():
    h = H(inv(0, 0, W(1)), "crash", rinv(0, 0, W(1)), rret(0, 0, W(1), FAIL),
          inv(1, 0, READ), ret(1, 0, READ, 1))
    assert both(h) == (PASS, FAIL_VERDICT)


def test_recovered_response_is_required():
    h = H(inv(0, 0, W(1)), "crash", rinv(0, 0, W(1)), rret(0, 0, W(1), ACK),
          inv(1, 0, READ), ret(1, 0, READ, 0))
    assert both(h) == (FAIL_VERDICT, FAIL_VERDICT)


def test_recovery_interval_extends_to_recover_respond():
    # the read overlaps p0's write up to its recovery, so 0 and 1 are both fine
    for v in (0, 1):
        h = H(inv(0, 0, W(1)), "crash", inv(1, 0, READ), ret(1, 0, READ, v),
              rinv(0, 0, W(1)), rret(0, 0, W(1), ACK))
        assert both(h) == (PASS, PASS)


def test_unresolved_op_placed_before_later_required_op():
    # once a later op is linearized, an optional op left out can never follow it
    h = H(inv(0, 0, W(1)), "crash", inv(1, 0, READ), ret(1, 0, READ, 0),
          inv(1, 1, READ), ret(1, 1, READ, 1))
    assert both(h)[0] == PASS  # write lands between the reads
    h = H(inv(1, 0, READ), ret(1, 0, READ, 1), inv(0, 0, W(1)), "crash")
    assert both(h)[0] == FAIL_VERDICT


def test_cas_history():
    spec = CasSpec((0, 1, 2))
    h = H(inv(0, 0, CAS(0, 1)), inv(1, 0, CAS(0, 2)), ret(1, 0, CAS(0, 2), True),
          ret(0, 0, CAS(0, 1), True))
    assert both(h, spec) == (FAIL_VERDICT, FAIL_VERDICT)


def test_queue_spec():
    from detrec.nvm import Op
    spec = QueueSpec((0, 1))
    enq = lambda v: Op("enq", (v,))  # noqa: E731
    deq = Op("deq")
    h = H(inv(0, 0, enq(0)), ret(0, 0, enq(0), ACK), inv(0, 1, enq(1)), ret(0, 1, enq(1), ACK),
          inv(1, 0, deq), ret(1, 0, deq, 0))
    assert check_detectability(h, spec).ok


def test_node_cap_gives_inconclusive():
    rows = []
    for p in range(6):
        rows.append(inv(p, 0, W(p % 3)))
    for p in range(6):
        rows.append(ret(p, 0, W(p % 3), ACK))
    rows += [inv(6, 0, READ), ret(6, 0, READ, 7)]
    res = check_durable_linearizability(H(*rows), RegisterSpec(tuple(range(8))), node_cap=5)
    assert res.verdict == INCONCLUSIVE
    assert combined_verdict(res, check_detectability(H(), REG)) == INCONCLUSIVE


def test_combined_verdict_prefers_fail():
    ok = check_detectability(H(), REG)
    bad = check_detectability(H(inv(0, 0, READ), ret(0, 0, READ, 2)), REG)
    assert combined_verdict(ok, bad, ok) == FAIL_VERDICT
    assert combined_verdict(ok) == PASS


@pytest.mark.parametrize("rows,fragment", [
    ([ret(0, 0, READ, 0)], "unknown"),
    ([inv(0, 0, READ), inv(0, 0, READ)], "twice"),
    ([inv(0, 0, READ), rinv(0, 0, READ)], "running"),
    ([inv(0, 0, READ), "crash", ret(0, 0, READ, 0)], "without a live"),
])
def test_malformed_histories(rows, fragment):
    with pytest.raises(MalformedHistory, match=fragment):
        operations(H(*rows))


def test_sequence_numbers_must_increase():
    h = [HistoryEvent(1, *inv(0, 0, READ)), HistoryEvent(0, *ret(0, 0, READ, 0))]
    with pytest.raises(MalformedHistory, match="event 0"):
        check_detectability(h, REG)


def agree(kind, n, *, scripts, crashes, limit=4000, **opts):
    spec = None
    mons = None
    seen = 0
    bad = 0
    for _, hist in itertools.islice(
            enumerate_schedules(kind, n, max_crashes=crashes, scripts=scripts, prune=False,
                                object_options=opts), limit):
        if spec is None:
            from detrec.objects import build
            spec = build(kind, n, **opts).seqspec()
            mons = Monitor(spec, detect=False), Monitor(spec, detect=True)
        dl = check_durable_linearizability(hist, spec).ok
        det = check_detectability(hist, spec).ok
        assert mons[0].run(hist).violated == (not dl), hist
        assert mons[1].run(hist).violated == (not det), hist
        seen += 1
        bad += not det
    return seen, bad


def test_monitor_agrees_with_checker_on_register():
    seen, bad = agree("reg-detect", 2, scripts=[[W(1)], [W(2), READ]], crashes=1)
    assert seen > 100 and bad == 0


def test_monitor_agrees_on_literal_register():
    # the defect needs one specific interleaving, so take the histories the
    # exhaustive search flagged
    from detrec.explore import exhaustive
    rep = exhaustive("reg-detect", 2, max_crashes=1, scripts=[[W(0)], [W(1), READ]], keep=20,
                     object_options={"literal_init": True})
    assert rep.violations > 0
    mons = Monitor(REG, detect=False), Monitor(REG, detect=True)
    for cx in rep.counterexamples:
        assert cx.durable.ok and not mons[0].run(cx.history).violated
        assert not cx.detect.ok and mons[1].run(cx.history).violated


def test_monitor_agrees_on_mutants():
    _, bad = agree("cas-detect+cas:skip-cp1", 2, scripts=[[CAS(0, 1)], [CAS(0, 2), READ]], crashes=1)
    assert bad > 0
    _, bad = agree("cas-detect", 2, scripts=[[CAS(0, 0)], [CAS(0, 1)]], crashes=0, literal=True)
    assert bad > 0
