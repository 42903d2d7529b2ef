"""Deterministic system simulator: processes, crashes and recovery dispatch.

A :class:`System` is a pure transition function over immutable
:class:`SysState` values.  Exhaustive exploration, random campaigns and
schedule replay all drive the same :meth:`System.apply`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

from detrec.errors import ConfigurationError, DetrecError, ScheduleError
from detrec.history import (
    CRASH,
    CRASH_DIRECTIVE,
    INVOKE,
    RECOVER_INVOKE,
    RECOVER_RESPOND,
    RESPOND,
    Directive,
    HistoryEvent,
    Schedule,
)
from detrec.nvm import (
    ANN_OP,
    CRASHED,
    FAIL,
    IDLE,
    RECOVERING,
    RUNNING,
    Access,
    CellId,
    Memory,
    Op,
    ProcessContext,
    announce,
    crash_contexts,
)
from detrec.objects import ANNOUNCE_RESET_MUTATION, ObjectKind, ObjectModel, build

_MAX_FOLD = 64


class EncodingError(DetrecError):
    """A step machine performed more than one visible primitive in one step."""


class SysState(NamedTuple):
    mem: tuple
    procs: tuple
    crashes: int = 0


class Move(NamedTuple):
    kind: str  # step | recover | crash
    pid: int | None = None
    op: Op | None = None  # operation chosen at an invocation

    def directive(self) -> Directive:
        return Directive(self.kind, self.pid)


class Finished(NamedTuple):
    """An op or recovery that returned during a step, with its step count."""

    pid: int
    op: Op
    recovering: bool
    steps: int
    response: Any


class StepResult(NamedTuple):
    state: SysState
    events: list  # (kind, pid, instance, op, value) tuples
    finished: Finished | None = None
    over_budget: bool = False


@dataclass
class System:
    """A configured system of ``n`` processes sharing one recoverable object.

    Exactly one of ``scripts`` (fixed per-process op lists) or
    ``ops_per_process`` (each invocation chooses any op of ``alphabet``) is
    used.  ``retries`` is the caller policy after a recovery returns fail:
    0 drops the operation, k re-announces it up to k times.
    """

    obj: ObjectModel
    scripts: Sequence[Sequence[Op]] | None = None
    ops_per_process: int | None = None
    alphabet: Sequence[Op] | None = None
    max_crashes: int = 0
    retries: int = 0
    op_budget: int | None = None
    reset_announcement: bool = field(default=True)

    def __post_init__(self) -> None:
        if self.scripts is None and self.ops_per_process is None:
            raise ConfigurationError("give either scripts or ops_per_process")
        if self.scripts is not None:
            if len(self.scripts) != self.obj.n:
                raise ConfigurationError(f"{len(self.scripts)} scripts for {self.obj.n} processes")
            self.scripts = [list(s) for s in self.scripts]
        if self.alphabet is None:
            self.alphabet = self.obj.alphabet()
        if ANNOUNCE_RESET_MUTATION in self.obj.mutations:
            self.reset_announcement = False
        layout = self.obj.layout
        self._dead = [tuple(layout.slot(c) for c in self.obj.idle_dead_cells(p)) for p in range(self.n)]

    @property
    def n(self) -> int:
        return self.obj.n

    def initial(self) -> SysState:
        return SysState(self.obj.layout.initial, tuple(ProcessContext(p) for p in range(self.n)), 0)

    def remaining(self, ctx: ProcessContext) -> bool:
        if ctx.status != IDLE:
            return False
        if ctx.attempt:
            return True
        total = len(self.scripts[ctx.pid]) if self.scripts is not None else self.ops_per_process
        return ctx.op_index < total

    def terminal(self, state: SysState) -> bool:
        return not any(ctx.status != IDLE or self.remaining(ctx) for ctx in state.procs)

    def in_flight(self, state: SysState) -> bool:
        return any(ctx.status in (RUNNING, RECOVERING) for ctx in state.procs)

    def memo_key(self, state: SysState) -> tuple:
        """``state`` with dead private cells of idle processes blanked.

        Two states with equal keys have the same set of futures up to those
        cells' values, so explorers may memoize on the key.
        """
        vals = None
        for ctx in state.procs:
            if ctx.status == IDLE and self._dead[ctx.pid]:
                if vals is None:
                    vals = list(state.mem)
                for slot in self._dead[ctx.pid]:
                    vals[slot] = None
        mem = state.mem if vals is None else tuple(vals)
        return mem, state.procs, state.crashes

    def moves(self, state: SysState) -> list[Move]:
        out: list[Move] = []
        for ctx in state.procs:
            if ctx.status == IDLE:
                if not self.remaining(ctx):
                    continue
                if ctx.attempt:
                    out.append(Move("step", ctx.pid, ctx.op))
                elif self.scripts is not None:
                    out.append(Move("step", ctx.pid, self.scripts[ctx.pid][ctx.op_index]))
                else:
                    out.extend(Move("step", ctx.pid, op) for op in self.alphabet)
            elif ctx.status == RUNNING:
                out.append(Move("step", ctx.pid))
            else:
                out.append(Move("recover", ctx.pid))
        if state.crashes < self.max_crashes and self.in_flight(state):
            out.append(Move("crash"))
        return out

    # -- transitions ---------------------------------------------------

    def apply(self, state: SysState, move: Move, log: list[Access] | None = None) -> StepResult:
        if move.kind == "crash":
            procs = crash_contexts(state.procs)
            return StepResult(SysState(state.mem, procs, state.crashes + 1), [(CRASH, None, None, None, None)])
        ctx = state.procs[move.pid]
        mem = Memory(self.obj.layout, state.mem, log)
        p = ctx.pid
        if ctx.status == IDLE:
            op = move.op
            if op is None:
                raise ConfigurationError(f"invocation by p{p} needs an operation")
            announce(mem, p, op, reset=self.reset_announcement)
            new = ProcessContext(p, RUNNING, ctx.op_index, ctx.attempt, op)
            return self._result(state, mem, p, new, [(INVOKE, p, new.instance, op, None)])
        events = []
        if ctx.status == CRASHED:
            op = mem.read(p, CellId(ANN_OP, (p,)))
            ctx = ProcessContext(p, RECOVERING, ctx.op_index, ctx.attempt, op)
            events.append((RECOVER_INVOKE, p, ctx.instance, op, None))
        recovering = ctx.status == RECOVERING
        prog = self.obj.program(ctx.op, recovering)
        pc, loc = ctx.pc, dict(ctx.locals)
        for _ in range(_MAX_FOLD):
            pc, loc, resp = prog(p, ctx.op.args, pc, loc, mem)
            if mem.visible > 1:
                raise EncodingError(f"{self.obj.kind} {ctx.op} pc {pc}: {mem.visible} primitives in one step")
            if resp is not None or mem.visible:
                break
        else:
            raise EncodingError(f"{self.obj.kind} {ctx.op}: no primitive within {_MAX_FOLD} folded pcs")
        steps = ctx.steps + 1
        if resp is None:
            new = ctx._replace(pc=pc, locals=tuple(sorted(loc.items())), steps=steps)
            over = self.op_budget is not None and steps >= self.op_budget
            return self._result(state, mem, p, new, events, over_budget=over)
        kind = RECOVER_RESPOND if recovering else RESPOND
        events.append((kind, p, ctx.instance, ctx.op, resp))
        if resp is FAIL and ctx.attempt < self.retries:
            new = ProcessContext(p, IDLE, ctx.op_index, ctx.attempt + 1, ctx.op)
        else:
            new = ProcessContext(p, IDLE, ctx.op_index + 1, 0, None)
        done = Finished(p, ctx.op, recovering, steps, resp)
        return self._result(state, mem, p, new, events, done)

    @staticmethod
    def _result(state, mem, p, ctx, events, finished=None, over_budget=False) -> StepResult:
        procs = state.procs[:p] + (ctx,) + state.procs[p + 1:]
        return StepResult(SysState(mem.freeze(), procs, state.crashes), events, finished, over_budget)

    def move_for(self, state: SysState, directive: Directive, index: int = 0) -> Move:
        """Translate a schedule directive into a move, validating it."""
        if directive.kind == "crash":
            return Move("crash")
        if directive.pid is None or not 0 <= directive.pid < self.n:
            raise ScheduleError(index, f"no process {directive.pid}")
        ctx = state.procs[directive.pid]
        if directive.kind == "step":
            if ctx.status == RUNNING:
                return Move("step", ctx.pid)
            if ctx.status == IDLE and self.remaining(ctx):
                if ctx.attempt:
                    return Move("step", ctx.pid, ctx.op)
                if self.scripts is None:
                    raise ScheduleError(index, "invocations need fixed scripts")
                return Move("step", ctx.pid, self.scripts[ctx.pid][ctx.op_index])
            raise ScheduleError(index, f"p{ctx.pid} has no enabled step (status {ctx.status})")
        if directive.kind == "recover":
            if ctx.status in (CRASHED, RECOVERING):
                return Move("recover", ctx.pid)
            raise ScheduleError(index, f"p{ctx.pid} is not recovering (status {ctx.status})")
        raise ScheduleError(index, f"unknown directive {directive.kind!r}")


def stamp(events: list, start: int) -> list[HistoryEvent]:
    return [HistoryEvent(start + i, *e) for i, e in enumerate(events)]


@dataclass
class RunResult:
    history: list[HistoryEvent]
    images: list[tuple]  # memory image after every directive, images[0] is initial
    accesses: list[list[Access]]  # primitives applied by every directive
    finished: list[Finished]
    final: SysState
    budget_exhausted: bool = False


def make_system(kind: ObjectKind | str, n: int, domain=None, scripts=None, *, max_crashes: int = 10**9,
                retries: int = 0, op_budget: int | None = None, object_options: dict | None = None) -> System:
    obj = build(kind, n, domain, **(object_options or {}))
    return System(obj, scripts=scripts, max_crashes=max_crashes, retries=retries, op_budget=op_budget)


def run_schedule(system: System, schedule: Schedule, *, budget: int | None = None, trace: bool = True) -> RunResult:
    """Execute ``schedule`` deterministically and record history and memory trace.

    ``budget`` caps the number of directives executed; a run stopped by it, or
    by the system's per-operation budget, is flagged ``budget_exhausted``.
    """
    if schedule.scripts is not None and system.scripts is not None:
        if [list(s) for s in schedule.scripts] != system.scripts:
            raise ConfigurationError("schedule scripts differ from the system's scripts")
    state = system.initial()
    history: list[HistoryEvent] = []
    images = [state.mem]
    accesses: list[list[Access]] = []
    finished: list[Finished] = []
    exhausted = False
    for index, directive in enumerate(schedule.directives):
        if budget is not None and index >= budget:
            exhausted = True
            break
        move = system.move_for(state, directive, index)
        if move.kind == "crash" and state.crashes >= system.max_crashes:
            raise ScheduleError(index, "crash budget exceeded")
        log: list[Access] | None = [] if trace else None
        res = system.apply(state, move, log)
        state = res.state
        history.extend(stamp(res.events, len(history)))
        if trace:
            images.append(state.mem)
            accesses.append(log)
        if res.finished:
            finished.append(res.finished)
        if res.over_budget:
            exhausted = True
            break
    return RunResult(history, images, accesses, finished, state, exhausted)


def directives_complete(system: System, state: SysState) -> bool:
    return system.terminal(state)


__all__ = [
    "CRASH_DIRECTIVE",
    "EncodingError",
    "Finished",
    "Move",
    "RunResult",
    "StepResult",
    "SysState",
    "System",
    "make_system",
    "run_schedule",
    "stamp",
]
