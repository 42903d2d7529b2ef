"""Incremental linearizability monitor for exhaustive exploration.

The monitor consumes history events one at a time and keeps the set of every
spec configuration consistent with the history so far.  A configuration is
``(spec_state, linearized)`` where ``linearized`` holds ``(instance, resp)``
for operations already placed but not yet resolved.  Its state is hashable,
so the explorer can memoize on it.

It implements the same interval rules as :mod:`detrec.checker` and is
cross-checked against it in the tests.
"""

from __future__ import annotations

from typing import Any, NamedTuple

from detrec.history import INVOKE, RECOVER_RESPOND, RESPOND
from detrec.nvm import FAIL, Op
from detrec.seqspec import SeqSpec


class MonitorState(NamedTuple):
    open: frozenset  # (instance, op) of invoked, unresolved operations
    configs: frozenset  # (spec_state, frozenset((instance, resp)))

    @property
    def violated(self) -> bool:
        return not self.configs


class Monitor:
    """``detect=True`` excludes operations whose recovery returned fail."""

    def __init__(self, spec: SeqSpec, detect: bool = True) -> None:
        self.spec = spec
        self.detect = detect

    def initial(self) -> MonitorState:
        return MonitorState(frozenset(), frozenset({(self.spec.initial, frozenset())}))

    def _closure(self, open_ops: frozenset, configs: frozenset) -> set:
        out = set(configs)
        frontier = list(configs)
        while frontier:
            state, lin = frontier.pop()
            placed = {inst for inst, _ in lin}
            for inst, op in open_ops:
                if inst in placed:
                    continue
                nstate, resp = self.spec.apply(state, op)
                cfg = (nstate, lin | {(inst, resp)})
                if cfg not in out:
                    out.add(cfg)
                    frontier.append(cfg)
        return out

    def event(self, ms: MonitorState, kind: str, instance: str | None, op: Op | None, value: Any) -> MonitorState:
        if ms.violated:
            return ms
        if kind == INVOKE:
            # configurations are kept closed under linearizing open
            # operations, which makes equivalent monitor states equal
            opened = ms.open | {(instance, op)}
            return MonitorState(opened, frozenset(self._closure(opened, ms.configs)))
        if kind not in (RESPOND, RECOVER_RESPOND):
            return ms  # crashes and recoverInvoke do not constrain
        configs = ms.configs
        kept = set()
        if kind == RECOVER_RESPOND and value is FAIL:
            for state, lin in configs:
                hit = [e for e in lin if e[0] == instance]
                if hit and self.detect:
                    continue
                kept.add((state, lin - set(hit)))
        else:
            entry = (instance, value)
            for state, lin in configs:
                if entry in lin:
                    kept.add((state, lin - {entry}))
        return MonitorState(ms.open - {(instance, op)}, frozenset(kept))

    def feed(self, ms: MonitorState, events) -> MonitorState:
        for kind, _pid, instance, op, value in events:
            ms = self.event(ms, kind, instance, op, value)
        return ms

    def run(self, history) -> MonitorState:
        ms = self.initial()
        for ev in history:
            ms = self.event(ms, ev.kind, ev.instance, ev.op, ev.value)
        return ms
