import pytest
from hypothesis import given, strategies as st

from detrec.errors import ConfigurationError, ModelViolation, ScheduleError
from detrec.history import Schedule, step
from detrec.nvm import (
    ACK,
    ANN_CP,
    ANN_OP,
    ANN_RESP,
    BOTTOM,
    CRASHED,
    IDLE,
    RUNNING,
    CellDecl,
    CellId,
    Layout,
    Memory,
    Op,
    ProcessContext,
    announce,
    cas_cell,
    crash_contexts,
    read_cell,
    write_cell,
)
from detrec.objects import build
from detrec.system import System, run_schedule

from conftest import CAS, CRASH, W, recover, run, solo


@pytest.fixture
def reg():
    return build("reg-detect", 3)


def test_fresh_register_cells(reg):
    vals = reg.layout.initial
    assert read_cell(reg.layout, vals, 0, CellId("R")) == (0, 0, 0)
    assert read_cell(reg.layout, vals, 1, CellId("RD", (1,))) is BOTTOM
    assert read_cell(reg.layout, vals, 0, CellId("A", (2, 1, 0))) == 0


def test_write_then_read(reg):
    vals = write_cell(reg.layout, reg.layout.initial, 1, CellId("R"), (5, 1, 0))
    assert read_cell(reg.layout, vals, 2, CellId("R")) == (5, 1, 0)


def test_last_writer_wins(reg):
    vals = write_cell(reg.layout, reg.layout.initial, 0, CellId("R"), (1, 0, 1))
    vals = write_cell(reg.layout, vals, 2, CellId("R"), (2, 2, 0))
    assert read_cell(reg.layout, vals, 1, CellId("R")) == (2, 2, 0)


def test_unknown_cell_is_configuration_error(reg):
    with pytest.raises(ConfigurationError):
        read_cell(reg.layout, reg.layout.initial, 0, CellId("nope"))
    with pytest.raises(ConfigurationError):
        read_cell(reg.layout, reg.layout.initial, 0, CellId("A", (3, 0, 0)))


def test_private_cell_of_other_process_is_model_violation(reg):
    with pytest.raises(ModelViolation):
        read_cell(reg.layout, reg.layout.initial, 0, CellId("RD", (1,)))
    with pytest.raises(ModelViolation):
        write_cell(reg.layout, reg.layout.initial, 2, CellId(ANN_CP, (0,)), 1)


def test_cas_cell_examples():
    layout = Layout(1, [CellDecl("X", 5, cas=True)])
    ok, vals = cas_cell(layout, layout.initial, 0, CellId("X"), 5, 7)
    assert ok and vals == (7,)
    ok, vals = cas_cell(layout, (5,), 0, CellId("X"), 6, 7)
    assert not ok and vals == (5,)


def test_cas_on_structured_cell():
    cas = build("cas-detect", 2)
    c = CellId("C")
    ok, vals = cas_cell(cas.layout, cas.layout.initial, 0, c, (0, (0, 0)), (1, (1, 0)))
    assert ok
    assert read_cell(cas.layout, vals, 1, c) == (1, (1, 0))


def test_cas_requires_declared_cell(reg):
    with pytest.raises(ConfigurationError):
        cas_cell(reg.layout, reg.layout.initial, 0, CellId("R"), (0, 0, 0), (1, 0, 0))


@pytest.mark.parametrize("op", [W(5), CAS(0, 1)])
def test_announce_resets_record(reg, op):
    cas = build("cas-detect", 3)
    for obj in (reg, cas):
        m = Memory(obj.layout, obj.layout.initial)
        m.write(1, CellId(ANN_CP, (1,)), 2)
        m.write(1, CellId(ANN_RESP, (1,)), ACK)
        m.visible = 0
        announce(m, 1, op)
        assert m.visible == 1  # persisted as one primitive
        view = obj.layout.as_dict(m.freeze())
        assert (view["Ann.op[1]"], view["Ann.resp[1]"], view["Ann.cp[1]"]) == (op, BOTTOM, 0)


def test_double_announce_is_rejected():
    # the scheduler is the only caller of announce and refuses to invoke an
    # operation while the previous one is in flight
    scripts = [[W(1), W(2)]]
    system = System(build("reg-detect", 1), scripts=scripts)
    state = system.apply(system.initial(), system.moves(system.initial())[0]).state
    assert state.procs[0].status == RUNNING
    assert all(mv.op is None for mv in system.moves(state))
    from detrec.history import Directive
    with pytest.raises(ScheduleError):
        run_schedule(system, Schedule(scripts, [step(0)] * 13 + [Directive("recover", 0)]))


def test_crash_with_nothing_in_flight():
    before = run("reg-detect", [[]], [])
    after = run("reg-detect", [[]], [CRASH])
    assert after.final.mem == before.final.mem
    assert after.final.procs == (ProcessContext(0),)
    assert [e.kind for e in after.history] == ["crash"]


def test_crash_keeps_checkpoint_and_wipes_locals():
    # invoke, read R, clear, persist RD, re-read, cp:=1 -> crash
    res = run("reg-detect", [[], [W(1)]], solo(1, 6) + [CRASH])
    obj = build("reg-detect", 2)
    assert obj.layout.as_dict(res.final.mem)["Ann.cp[1]"] == 1
    ctx = res.final.procs[1]
    assert ctx.status == CRASHED and ctx.pc == 0 and ctx.locals == () and ctx.op is None
    assert res.images[-1] == res.images[-2]


def test_two_crashes_restart_recovery_from_scratch():
    scripts = [[W(1)]]
    res = run("reg-detect", scripts, solo(0, 8) + [CRASH] + recover(0, 2) + [CRASH] + recover(0, 4))
    kinds = [e.kind for e in res.history]
    assert kinds.count("recoverInvoke") == 2
    assert kinds[-1] == "recoverRespond"
    assert res.history[-1].value is ACK


def test_crash_contexts_volatile_wipe():
    procs = (ProcessContext(0, RUNNING, 0, 0, W(1), 4, (("x", 1),), 4),
             ProcessContext(1, IDLE, 2, 0, None))
    out = crash_contexts(procs)
    assert out[0] == ProcessContext(0, CRASHED, 0, 0, None)
    assert out[1] == procs[1]


@given(st.text(alphabet="abcdefgXYZ", min_size=1, max_size=8),
       st.lists(st.integers(-5, 50), max_size=3))
def test_op_descriptor_roundtrip(name, args):
    op = Op(name, tuple(args))
    assert Op.parse(str(op)) == op


def test_ann_cells_are_private(reg):
    for name in (ANN_OP, ANN_RESP, ANN_CP):
        assert reg.layout.owner[reg.layout.slot(CellId(name, (2,)))] == 2
