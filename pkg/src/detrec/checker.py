"""Durable-linearizability and detectability checking of recorded histories.

Both checkers run the same Wing–Gong style search: repeatedly pick an
operation all of whose real-time predecessors are already placed, apply it to
the sequential specification, and backtrack on a response mismatch.  Visited
(placed-set, spec-state) pairs are memoized.

Interval rules, shared by both modes:

* an operation's interval runs from its invoke to its response, or to the
  recoverRespond that resolves it; a crash does not end it;
* ``x`` precedes ``y`` in real time iff ``x`` was resolved before ``y`` was
  invoked;
* operations still unresolved at the end of the history are optional.

In detectability mode an operation whose final recovery returned fail must be
excluded; in plain DL mode it is optional.  An operation resolved with a value
(by its response or by its recovery) is required with exactly that value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable

from detrec.errors import MalformedHistory
from detrec.history import CRASH, INVOKE, RECOVER_INVOKE, RECOVER_RESPOND, RESPOND, HistoryEvent
from detrec.nvm import FAIL, Op
from detrec.seqspec import SeqSpec

PASS = "pass"
FAIL_VERDICT = "fail"
INCONCLUSIVE = "inconclusive"

DEFAULT_NODE_CAP = 200_000


@dataclass
class OpRecord:
    instance: str
    pid: int
    op: Op
    invoked: int
    resolved: float = math.inf
    outcome: str = "pending"  # pending | response | recovered | failed
    value: Any = None
    crashes: int = 0


@dataclass
class CheckResult:
    verdict: str
    witness: list[tuple[str, Op, Any]] = field(default_factory=list)
    explanation: str = ""
    nodes: int = 0

    @property
    def ok(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": [[inst, str(op), _show(v)] for inst, op, v in self.witness],
            "explanation": self.explanation,
        }


def _show(v: Any) -> Any:
    return v if isinstance(v, (bool, int)) else str(v)


def operations(history: Iterable[HistoryEvent]) -> list[OpRecord]:
    """Collect one record per operation instance, validating well-formedness."""
    ops: dict[str, OpRecord] = {}
    live: set[str] = set()
    last = -1
    for ev in history:
        if ev.seq <= last:
            raise MalformedHistory(ev.seq, "event sequence numbers must increase")
        last = ev.seq
        if ev.kind == CRASH:
            for inst in live:
                ops[inst].crashes += 1
            live.clear()
            continue
        rec = ops.get(ev.instance)
        if ev.kind == INVOKE:
            if rec is not None:
                raise MalformedHistory(ev.seq, f"instance {ev.instance} invoked twice")
            ops[ev.instance] = OpRecord(ev.instance, ev.pid, ev.op, ev.seq)
            live.add(ev.instance)
            continue
        if rec is None or rec.outcome != "pending":
            raise MalformedHistory(ev.seq, f"{ev.kind} for unknown or resolved instance {ev.instance}")
        if ev.kind == RECOVER_INVOKE:
            if ev.instance in live:
                raise MalformedHistory(ev.seq, f"recovery of {ev.instance} while it is running")
            live.add(ev.instance)
        elif ev.kind in (RESPOND, RECOVER_RESPOND):
            if ev.instance not in live:
                raise MalformedHistory(ev.seq, f"response of {ev.instance} without a live invocation")
            live.discard(ev.instance)
            rec.resolved = ev.seq
            rec.value = ev.value
            if ev.kind == RESPOND:
                rec.outcome = "response"
            else:
                rec.outcome = "failed" if ev.value is FAIL else "recovered"
        else:
            raise MalformedHistory(ev.seq, f"unknown event kind {ev.kind!r}")
    return list(ops.values())


REQUIRED, OPTIONAL, EXCLUDED = "required", "optional", "excluded"


def _role(rec: OpRecord, detect: bool) -> str:
    if rec.outcome in ("response", "recovered"):
        return REQUIRED
    if rec.outcome == "failed" and detect:
        return EXCLUDED
    return OPTIONAL


def _search(history, spec: SeqSpec, detect: bool, node_cap: int) -> CheckResult:
    recs = [r for r in operations(history)]
    roles = [_role(r, detect) for r in recs]
    idx = [i for i, role in enumerate(roles) if role != EXCLUDED]
    recs = [recs[i] for i in idx]
    roles = [roles[i] for i in idx]
    k = len(recs)
    preds = [0] * k
    for j, y in enumerate(recs):
        for i, x in enumerate(recs):
            if x.resolved < y.invoked:
                preds[j] |= 1 << i
    required = sum(1 << i for i in range(k) if roles[i] == REQUIRED)
    optional = ((1 << k) - 1) & ~required

    seen: set[tuple[int, Any]] = set()
    nodes = 0
    best: list = []
    order: list = []

    def dfs(done: int, state: Any) -> bool | None:
        nonlocal nodes, best
        if done & required == required:
            return True
        key = (done, state)
        if key in seen:
            return False
        seen.add(key)
        nodes += 1
        if nodes > node_cap:
            return None
        for j in range(k):
            bit = 1 << j
            if done & bit:
                continue
            missing = preds[j] & ~done
            if missing & required:
                continue
            new_state, resp = spec.apply(state, recs[j].op)
            if roles[j] == REQUIRED and resp != recs[j].value:
                continue
            order.append((recs[j].instance, recs[j].op, resp))
            if len(order) > len(best):
                best = list(order)
            # optional predecessors not placed now can never be placed
            r = dfs(done | bit | (missing & optional), new_state)
            if r or r is None:
                return r
            order.pop()
        return False

    found = dfs(0, spec.initial)
    if found is None:
        return CheckResult(INCONCLUSIVE, explanation=f"search cap of {node_cap} nodes exceeded", nodes=nodes)
    if found:
        return CheckResult(PASS, witness=list(order), nodes=nodes)
    placed = {inst for inst, _, _ in best}
    stuck = [f"{r.instance}:{r.op}->{_show(r.value)}" for r, role in zip(recs, roles)
             if role == REQUIRED and r.instance not in placed]
    excluded = [r.instance for r in operations(history) if _role(r, detect) == EXCLUDED]
    msg = "no admissible linearization; longest consistent prefix " + (
        ", ".join(f"{i}:{o}->{_show(v)}" for i, o, v in best) or "(empty)")
    msg += "; unplaceable required ops " + ", ".join(stuck)
    if excluded:
        msg += "; excluded (recovered fail) " + ", ".join(excluded)
    return CheckResult(FAIL_VERDICT, witness=best, explanation=msg, nodes=nodes)


def check_durable_linearizability(history, spec: SeqSpec, node_cap: int = DEFAULT_NODE_CAP) -> CheckResult:
    return _search(history, spec, detect=False, node_cap=node_cap)


def check_detectability(history, spec: SeqSpec, node_cap: int = DEFAULT_NODE_CAP) -> CheckResult:
    return _search(history, spec, detect=True, node_cap=node_cap)


def replay_witness(witness, spec: SeqSpec) -> bool:
    """True iff the witness order replays through ``spec`` to its recorded responses."""
    state = spec.initial
    for _, op, resp in witness:
        state, r = spec.apply(state, op)
        if r != resp:
            return False
    return True


def combined_verdict(*results: CheckResult) -> str:
    verdicts = {r.verdict for r in results}
    if FAIL_VERDICT in verdicts:
        return FAIL_VERDICT
    if INCONCLUSIVE in verdicts:
        return INCONCLUSIVE
    return PASS
