"""History events and schedules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

from detrec.nvm import Op

INVOKE = "invoke"
RESPOND = "respond"
CRASH = "crash"
RECOVER_INVOKE = "recoverInvoke"
RECOVER_RESPOND = "recoverRespond"

EVENT_KINDS = (INVOKE, RESPOND, CRASH, RECOVER_INVOKE, RECOVER_RESPOND)


class HistoryEvent(NamedTuple):
    seq: int
    kind: str
    pid: int | None = None
    instance: str | None = None
    op: Op | None = None
    value: Any = None

    def __str__(self) -> str:
        if self.kind == CRASH:
            return f"{self.seq:4d} CRASH"
        tail = "" if self.kind in (INVOKE, RECOVER_INVOKE) else f" -> {self.value!r}"
        return f"{self.seq:4d} {self.kind:<14} p{self.pid} {self.instance:<8} {self.op}{tail}"


History = list  # list[HistoryEvent]


class Directive(NamedTuple):
    """One scheduler decision: ``step``, ``recover`` (a recovery step) or ``crash``."""

    kind: str
    pid: int | None = None

    def __str__(self) -> str:
        return "crash" if self.kind == "crash" else f"{self.kind}({self.pid})"


def step(pid: int) -> Directive:
    return Directive("step", pid)


def recover_step(pid: int) -> Directive:
    return Directive("recover", pid)


CRASH_DIRECTIVE = Directive("crash")


@dataclass
class Schedule:
    """Per-process op scripts plus the directive sequence that drives them."""

    scripts: list[list[Op]]
    directives: list[Directive] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.scripts)
