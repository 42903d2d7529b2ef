"""Exhaustive exploration of all schedules within small bounds.

Depth-first search over every interleaving of process steps, recovery steps
and crash points.  States are memoized on the memory image, all process
contexts, the crashes used and the incremental monitor's state; two paths
reaching the same key have identical futures and identical verdicts.
"""

from __future__ import annotations

import math
import sys
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

from detrec.checker import CheckResult, check_detectability, check_durable_linearizability
from detrec.errors import BoundsExceeded
from detrec.history import Schedule, step
from detrec.monitor import Monitor
from detrec.nvm import Op
from detrec.objects import ObjectKind, build
from detrec.system import Move, RunResult, System, run_schedule, stamp

MAX_N, MAX_OPS, MAX_CRASHES = 3, 2, 2
DEFAULT_STATE_CAP = 5_000_000


@dataclass
class Violation:
    schedule: Schedule
    history: list
    durable: CheckResult
    detect: CheckResult


@dataclass
class ExploreReport:
    kind: str
    n: int
    ops_per_process: int
    max_crashes: int
    domain: tuple
    states: int = 0  # distinct system states (memory image and all contexts)
    keys: int = 0  # distinct (system state, monitor state) pairs visited
    terminals: int = 0
    violations: int = 0
    budget_exhausted: int = 0
    capped: bool = False
    stopped_early: bool = False  # stop_on_violation cut the search
    counterexamples: list[Violation] = field(default_factory=list)
    # (op name, recovering) -> max steps of one uninterrupted run
    max_steps: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if self.violations:
            return "fail"
        if self.capped:
            return "inconclusive"
        return "pass"

    def to_dict(self) -> dict:
        return {
            "object": self.kind,
            "n": self.n,
            "opsPerProcess": self.ops_per_process,
            "maxCrashes": self.max_crashes,
            "domain": list(self.domain),
            "states": self.states,
            "keys": self.keys,
            "terminals": self.terminals,
            "violations": self.violations,
            "budgetExhausted": self.budget_exhausted,
            "capped": self.capped,
            "stoppedEarly": self.stopped_early,
            "verdict": self.verdict,
            "maxSteps": {f"{op}{'.recover' if rec else ''}": s for (op, rec), s in sorted(self.max_steps.items())},
        }


def estimate_states(n: int, ops: int, crashes: int, alphabet: int, op_len: int) -> float:
    """Crude upper estimate: op choices x interleavings x crash placements."""
    per = ops * (op_len + 1)
    total = n * per
    log = n * ops * math.log(max(alphabet, 1))
    log += math.lgamma(total + 1) - n * math.lgamma(per + 1)
    log += crashes * math.log(total + 1)
    return math.exp(min(log, 700))


def check_bounds(system: System, n: int, ops: int, crashes: int) -> None:
    if n <= MAX_N and ops <= MAX_OPS and crashes <= MAX_CRASHES:
        return
    op_len = max((system.obj.step_bound(op.name, False) or 2 * n + 1) for op in system.alphabet)
    est = estimate_states(n, ops, crashes, len(system.alphabet), op_len)
    raise BoundsExceeded(
        f"exhaustive bounds are N<={MAX_N}, ops<={MAX_OPS}, crashes<={MAX_CRASHES}; "
        f"got N={n}, ops={ops}, crashes={crashes}", est)


def make_choice_system(kind, n: int, ops: int, crashes: int, domain=None, *, retries: int = 0,
                       op_budget: int | None = None, object_options: dict | None = None) -> System:
    obj = build(kind, n, domain, **(object_options or {}))
    return System(obj, ops_per_process=ops, max_crashes=crashes, retries=retries, op_budget=op_budget)


def path_schedule(system: System, moves: list[Move]) -> Schedule:
    """Turn an explored move sequence into a replayable scripted schedule."""
    scripts: list[list[Op]] = [[] for _ in range(system.n)]
    state = system.initial()
    for mv in moves:
        if mv.kind == "step" and mv.op is not None and state.procs[mv.pid].attempt == 0:
            scripts[mv.pid].append(mv.op)
        state = system.apply(state, mv).state
    return Schedule(scripts, [mv.directive() for mv in moves])


def scripted(system: System, scripts) -> System:
    return System(system.obj, scripts=scripts, max_crashes=system.max_crashes,
                  retries=system.retries, op_budget=system.op_budget)


def replay_path(system: System, moves: list[Move]) -> tuple[Schedule, RunResult]:
    schedule = path_schedule(system, moves)
    return schedule, run_schedule(scripted(system, schedule.scripts), schedule)


def exhaustive(kind, n: int = 2, ops: int = 2, max_crashes: int = 1, domain=None, *, retries: int = 0,
               op_budget: int | None = None, state_cap: int = DEFAULT_STATE_CAP, keep: int = 5,
               scripts=None, stop_on_violation: bool = False,
               object_options: dict | None = None) -> ExploreReport:
    """Explore every schedule with ``ops`` operations per process chosen freely
    from the object's alphabet and at most ``max_crashes`` crashes.  Fixed
    per-process ``scripts`` replace the free choice when given.

    Every history is checked on the fly for detectability, which implies
    durable linearizability.  Offending paths are pruned and re-checked
    with both standalone checkers.
    """
    if scripts is not None:
        obj = build(kind, n, domain, **(object_options or {}))
        system = System(obj, scripts=scripts, max_crashes=max_crashes, retries=retries, op_budget=op_budget)
        ops = max((len(s) for s in system.scripts), default=0)
    else:
        system = make_choice_system(kind, n, ops, max_crashes, domain, retries=retries, op_budget=op_budget,
                                    object_options=object_options)
    check_bounds(system, n, ops, max_crashes)
    spec = system.obj.seqspec()
    mon = Monitor(spec, detect=True)
    report = ExploreReport(str(kind), n, ops, max_crashes, system.obj.domain)
    seen: set = set()
    # interned ids keep the visited set small
    sys_ids: dict = {}
    mon_ids: dict = {}
    path: list[Move] = []
    max_steps = report.max_steps

    def visit(state, ms) -> None:
        if stop_on_violation and report.violations:
            return
        key = (sys_ids.setdefault(system.memo_key(state), len(sys_ids)), mon_ids.setdefault(ms, len(mon_ids)))
        if key in seen:
            return
        if len(seen) >= state_cap:
            report.capped = True
            return
        seen.add(key)
        moves = system.moves(state)
        if not moves:
            report.terminals += 1
            return
        for mv in moves:
            res = system.apply(state, mv)
            if res.finished:
                f = res.finished
                k = (f.op.name, f.recovering)
                if f.steps > max_steps.get(k, 0):
                    max_steps[k] = f.steps
            path.append(mv)
            nms = mon.feed(ms, res.events)
            if nms.violated:
                report.violations += 1
                if len(report.counterexamples) < keep:
                    report.counterexamples.append(_violation(system, list(path), spec))
            elif res.over_budget:
                report.budget_exhausted += 1
            else:
                visit(res.state, nms)
            path.pop()

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20_000))
    try:
        visit(system.initial(), mon.initial())
    finally:
        sys.setrecursionlimit(limit)
    report.stopped_early = stop_on_violation and report.violations > 0
    report.keys = len(seen)
    report.states = len(sys_ids)
    return report


def _violation(system: System, moves: list[Move], spec) -> Violation:
    schedule, run = replay_path(system, moves)
    return Violation(schedule, run.history, check_durable_linearizability(run.history, spec),
                     check_detectability(run.history, spec))


def enumerate_schedules(kind, n: int, ops: int = 1, max_crashes: int = 0, domain=None, *, scripts=None,
                        prune: bool = True, object_options: dict | None = None) -> Iterator[tuple[Schedule, list]]:
    """Yield ``(schedule, history)`` for every complete schedule.

    With ``prune`` a schedule reaching an already visited system state is cut,
    so each distinct state's future is enumerated once.  Without it every
    interleaving is produced.
    """
    obj = build(kind, n, domain, **(object_options or {}))
    if scripts is not None:
        system = System(obj, scripts=scripts, max_crashes=max_crashes)
        ops = max((len(s) for s in scripts), default=0)
    else:
        system = System(obj, ops_per_process=ops, max_crashes=max_crashes)
    check_bounds(system, n, ops, max_crashes)
    seen: set = set()
    stack = [(system.initial(), [], [])]
    while stack:
        state, moves, events = stack.pop()
        if prune:
            if state in seen:
                continue
            seen.add(state)
        nexts = system.moves(state)
        if not nexts:
            yield path_schedule(system, moves), stamp(events, 0)
            continue
        for mv in reversed(nexts):
            res = system.apply(state, mv)
            stack.append((res.state, moves + [mv], events + res.events))


@dataclass
class MemoryStates:
    count: int
    complete: bool  # search ended before reaching the depth bound
    capped: bool
    depth: int
    images: set


def enumerate_memory_states(kind, n: int, depth: int = 40, *, domain=None, ops: int = 1, max_crashes: int = 1,
                            include_private: bool = False, state_cap: int = 2_000_000,
                            object_options: dict | None = None) -> MemoryStates:
    """Count distinct reachable memory images by BFS up to ``depth`` steps.

    Only shared cells are compared unless ``include_private`` is set.
    """
    system = make_choice_system(kind, n, ops, max_crashes, domain, object_options=object_options)
    layout = system.obj.layout
    project = (lambda mem: mem) if include_private else layout.shared_image
    start = system.initial()
    # dead private cells never reach a shared image, so deduplicating on the
    # memo key loses nothing unless private cells are counted
    key = (lambda st: st) if include_private else system.memo_key
    seen = {key(start)}
    images = {project(start.mem)}
    frontier = deque([(start, 0)])
    reached_depth = False
    capped = False
    while frontier:
        state, d = frontier.popleft()
        if d >= depth:
            if system.moves(state):
                reached_depth = True
            continue
        for mv in system.moves(state):
            nxt = system.apply(state, mv).state
            k = key(nxt)
            if k in seen:
                continue
            if len(seen) >= state_cap:
                capped = True
                break
            seen.add(k)
            images.add(project(nxt.mem))
            frontier.append((nxt, d + 1))
    return MemoryStates(len(images), not reached_depth and not capped, capped, depth, images)


def starvation_schedule(rounds: int) -> Schedule:
    """Max-register schedule in which process 1 keeps raising ``MR[1]`` so
    process 0's double-collect read never sees two equal collects.
    """
    scripts = [[Op("read")], [Op("writeMax", (v,)) for v in range(1, rounds + 1)]]
    directives = [step(0)]
    for _ in range(rounds):
        directives += [step(1)] * 3  # announce, read MR[1], write MR[1]
        directives += [step(0)] * 4  # compare pass, then copy pass
    return Schedule(scripts, directives)


def run_starvation(rounds: int = 20, op_budget: int | None = None) -> RunResult:
    obj = build("maxreg", 2, tuple(range(rounds + 1)))
    budget = op_budget if op_budget is not None else 10 * 2 * 2
    system = System(obj, scripts=starvation_schedule(rounds).scripts, op_budget=budget)
    return run_schedule(system, starvation_schedule(rounds))


__all__ = [
    "ExploreReport",
    "MemoryStates",
    "Violation",
    "enumerate_memory_states",
    "enumerate_schedules",
    "estimate_states",
    "exhaustive",
    "path_schedule",
    "replay_path",
    "run_starvation",
    "starvation_schedule",
]
