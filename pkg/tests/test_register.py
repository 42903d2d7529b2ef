import pytest

from detrec.checker import check_detectability, check_durable_linearizability
from detrec.nvm import ACK, ANN_RESP, FAIL, CellId, Memory
from detrec.objects import build
from detrec.seqspec import RegisterSpec

from conftest import CRASH, READ, W, recover_fully, responses, run, solo


def view(res, n, **kw):
    return build("reg-detect", n, **kw).layout.as_dict(res.final.mem)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_solo_write_takes_n_plus_9_steps(n):
    scripts = [[W(1)]] + [[] for _ in range(n - 1)]
    res = run("reg-detect", scripts, solo(0, 1 + n + 9))  # announce + body
    (fin,) = res.finished
    assert fin.steps == n + 9 and fin.response is ACK
    assert build("reg-detect", n).step_bound("write", False) == n + 9


def test_read_takes_two_steps():
    res = run("reg-detect", [[READ]], solo(0, 3))
    assert [(f.steps, f.response) for f in res.finished] == [(2, 0)]


def test_write_then_read_by_other():
    res = run("reg-detect", [[W(2)], [READ]], solo(0, 12) + solo(1, 3))
    assert responses(res.history) == [("p0.0", "respond", ACK), ("p1.0", "respond", 2)]
    m = view(res, 2)
    assert m["R"] == (2, 0, 1)  # p0 starts on toggle 1
    assert m["A[0][0][1]"] == m["A[1][0][1]"] == 1
    assert m["T[0]"] == 0


def test_toggles_alternate():
    res = run("reg-detect", [[W(1), W(2), W(0)]], solo(0, 3 * 11))
    toggles = [acc.after[2] for step_acc in res.accesses for acc in step_acc
               if acc.kind == "write" and str(acc.cell) == "R"]
    assert toggles == [1, 0, 1]


def test_literal_init_keeps_t0_zero():
    assert view(run("reg-detect", [[]], [], literal_init=True), 1, literal_init=True)["T[0]"] == 0
    assert view(run("reg-detect", [[]], []), 1)["T[0]"] == 1


def test_recovery_after_crash_before_cp1_fails():
    res, _ = recover_fully("reg-detect", [[W(1)]], solo(0, 3) + [CRASH], 0)
    assert res.history[-1].kind == "recoverRespond" and res.history[-1].value is FAIL
    assert view(res, 1)["R"] == (0, 0, 0)


def test_recovery_after_write_completes_the_epilogue():
    # announce + 6 steps puts p0 right after writing R
    res, _ = recover_fully("reg-detect", [[W(1)], []], solo(0, 7) + [CRASH], 0)
    assert res.history[-1].value is ACK
    m = view(res, 2)
    assert m["R"] == (1, 0, 1) and m["A[1][0][1]"] == 1 and m["T[0]"] == 0
    (fin,) = [f for f in res.finished if f.recovering]
    assert fin.steps <= 2 + 5


def test_recovery_sees_overwrite_through_toggle_bit():
    # p0 checkpoints 1 and writes R, p1 overwrites it completely, then the crash
    scripts = [[W(1)], [W(2)]]
    prefix = solo(0, 7) + solo(1, 12) + [CRASH]
    res, _ = recover_fully("reg-detect", scripts, prefix, 0)
    assert res.history[-1].value is ACK
    assert check_detectability(res.history, RegisterSpec((0, 1, 2))).ok


def test_recovery_bound():
    assert build("reg-detect", 3).step_bound("write", True) == 8


def test_read_recovery_rereads():
    res, _ = recover_fully("reg-detect", [[READ]], solo(0, 2) + [CRASH], 0)
    assert res.history[-1].kind == "recoverRespond" and res.history[-1].value == 0
    assert [f.steps for f in res.finished] == [2]


def literal_defect_run(literal_init):
    # p0 snapshots the initial triple and checkpoints, p1 writes 1, p0 then
    # writes 0 with toggle T_0, p1 reads, crash, p0 recovers
    scripts = [[W(0)], [W(1), READ]]
    prefix = solo(0, 6) + solo(1, 12) + solo(0, 1) + solo(1, 3) + [CRASH]
    return recover_fully("reg-detect", scripts, prefix, 0, literal_init=literal_init)[0]


def test_literal_initialization_breaks_detectability():
    res = literal_defect_run(True)
    assert responses(res.history)[-2:] == [("p1.1", "respond", 0), ("p0.0", "recoverRespond", FAIL)]
    spec = RegisterSpec((0, 1, 2))
    assert check_durable_linearizability(res.history, spec).ok
    assert not check_detectability(res.history, spec).ok


def test_default_initialization_repairs_it():
    res = literal_defect_run(False)
    assert res.history[-1].value is ACK
    assert check_detectability(res.history, RegisterSpec((0, 1, 2))).ok


def test_solo_write_by_process_1():
    res = run("reg-detect", [[], [W(5)]], solo(1, 12), domain=(0, 5))
    m = view(res, 2, domain=(0, 5))
    assert m["R"] == (5, 1, 0)
    assert m["A[0][1][0]"] == m["A[1][1][0]"] == 1
    assert m["T[1]"] == 1


def test_process_1_toggles_zero_then_one():
    res = run("reg-detect", [[], [W(1), W(2)]], solo(1, 24))
    assert [a.after[2] for accs in res.accesses for a in accs
            if a.kind == "write" and a.cell.name == "R"] == [0, 1]


def test_write_that_sees_r_change_skips_its_r_write():
    # p0 reads R and snapshots it, p1 writes, p0 re-reads and jumps to cp := 2
    res = run("reg-detect", [[W(1)], [W(2)]], solo(0, 4) + solo(1, 12) + solo(0, 6))
    assert [r[2] for r in responses(res.history)] == [ACK, ACK]
    writers = [a.after[1] for accs in res.accesses for a in accs if a.kind == "write" and a.cell.name == "R"]
    assert writers == [1]
    assert view(res, 2)["R"] == (2, 1, 0)


def test_recovery_at_cp1_with_r_unchanged_fails():
    # crash right after cp := 1: R still holds the snapshot and nobody set the toggle bit
    res, _ = recover_fully("reg-detect", [[W(1)], []], solo(0, 6) + [CRASH], 0)
    assert res.history[-1].value is FAIL


def test_read_recovery_returns_persisted_value():
    # a schedule cannot crash between persisting resp and returning, so drive
    # the recovery step machine directly
    obj = build("reg-detect", 2, (0, 5))
    m = Memory(obj.layout, obj.layout.initial)
    m.write(0, CellId(ANN_RESP, (0,)), 5)
    assert obj.program(READ, True)(0, (), 0, {}, m)[2] == 5


def test_fresh_read_and_read_after_write():
    res = run("reg-detect", [[READ], [W(2)], [READ]], solo(0, 3) + solo(1, 13) + solo(2, 3))
    assert [r[2] for r in responses(res.history)] == [0, ACK, 2]
