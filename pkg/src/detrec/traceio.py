"""Line-delimited JSON serialization of schedules, histories and verdicts.

A trace file starts with a versioned header record, followed by one record
per script, per directive and per history event, and optionally a verdict::

    {"format": "detrec-trace", "version": 1, "object": "cas-detect", ...}
    {"type": "script", "pid": 0, "ops": ["cas(0,1)"]}
    {"type": "directive", "kind": "step", "pid": 0}
    {"type": "event", "seq": 0, "kind": "invoke", ...}
    {"type": "verdict", ...}

Replaying the schedule reproduces the recorded events line for line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from detrec.errors import TraceFormatError
from detrec.history import EVENT_KINDS, Directive, HistoryEvent, Schedule
from detrec.nvm import Op, Sym
from detrec.objects import ObjectKind

FORMAT = "detrec-trace"
VERSION = 1
_SYMS = {s.value: s for s in Sym}


def encode_value(v: Any) -> Any:
    if isinstance(v, Sym):
        return v.value
    return v


def decode_value(v: Any) -> Any:
    if isinstance(v, str):
        try:
            return _SYMS[v]
        except KeyError:
            raise ValueError(f"unknown symbolic value {v!r}") from None
    return v


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


def event_record(ev: HistoryEvent) -> dict:
    return {
        "type": "event",
        "seq": ev.seq,
        "kind": ev.kind,
        "pid": ev.pid,
        "instance": ev.instance,
        "op": None if ev.op is None else str(ev.op),
        "value": encode_value(ev.value),
    }


def history_lines(history) -> list[str]:
    return [dumps(event_record(ev)) for ev in history]


@dataclass
class Trace:
    kind: ObjectKind
    n: int
    domain: tuple | None
    schedule: Schedule
    history: list[HistoryEvent] = field(default_factory=list)
    retries: int = 0
    max_crashes: int = 10**9
    op_budget: int | None = None
    options: dict = field(default_factory=dict)
    verdict: dict | None = None

    def header(self) -> dict:
        return {
            "format": FORMAT,
            "version": VERSION,
            "object": str(self.kind),
            "n": self.n,
            "domain": None if self.domain is None else list(self.domain),
            "retries": self.retries,
            "maxCrashes": self.max_crashes,
            "opBudget": self.op_budget,
            "options": self.options,
        }

    def lines(self) -> list[str]:
        out = [dumps(self.header())]
        for pid, script in enumerate(self.schedule.scripts):
            out.append(dumps({"type": "script", "pid": pid, "ops": [str(op) for op in script]}))
        for d in self.schedule.directives:
            out.append(dumps({"type": "directive", "kind": d.kind, "pid": d.pid}))
        out.extend(history_lines(self.history))
        if self.verdict is not None:
            out.append(dumps({"type": "verdict", **self.verdict}))
        return out

    def dumps(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="utf-8")
        return path


def loads(text: str) -> Trace:
    lines = text.splitlines()
    if not lines:
        raise TraceFormatError(1, "empty trace")
    records = []
    for no, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(no, f"not a JSON record ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise TraceFormatError(no, "record must be an object")
        records.append((no, rec))
    no, head = records[0]
    if head.get("format") != FORMAT:
        raise TraceFormatError(no, f"missing {FORMAT} header")
    if head.get("version") != VERSION:
        raise TraceFormatError(no, f"unsupported trace version {head.get('version')!r} (expected {VERSION})")
    try:
        kind = ObjectKind.parse(head["object"])
        n = int(head["n"])
        domain = tuple(head["domain"]) if head.get("domain") is not None else None
    except Exception as exc:  # noqa: BLE001 - surfaced with the line number
        raise TraceFormatError(no, f"bad header: {exc}") from None
    scripts: list[list[Op] | None] = [None] * n
    directives: list[Directive] = []
    history: list[HistoryEvent] = []
    verdict = None
    for no, rec in records[1:]:
        try:
            typ = rec["type"]
            if typ == "script":
                scripts[rec["pid"]] = [Op.parse(s) for s in rec["ops"]]
            elif typ == "directive":
                if rec["kind"] not in ("step", "recover", "crash"):
                    raise ValueError(f"unknown directive {rec['kind']!r}")
                directives.append(Directive(rec["kind"], rec.get("pid")))
            elif typ == "event":
                if rec["kind"] not in EVENT_KINDS:
                    raise ValueError(f"unknown event kind {rec['kind']!r}")
                op = Op.parse(rec["op"]) if rec.get("op") is not None else None
                history.append(HistoryEvent(rec["seq"], rec["kind"], rec.get("pid"), rec.get("instance"), op,
                                            decode_value(rec.get("value"))))
            elif typ == "verdict":
                verdict = {k: v for k, v in rec.items() if k != "type"}
            else:
                raise ValueError(f"unknown record type {typ!r}")
        except (KeyError, ValueError, TypeError, IndexError) as exc:
            raise TraceFormatError(no, f"bad record: {exc}") from None
    if any(s is None for s in scripts):
        missing = [p for p, s in enumerate(scripts) if s is None]
        raise TraceFormatError(len(lines), f"missing script records for processes {missing}")
    return Trace(kind, n, domain, Schedule(scripts, directives), history, int(head.get("retries", 0)),
                 int(head.get("maxCrashes", 10**9)), head.get("opBudget"), dict(head.get("options") or {}),
                 verdict)


def read(path: str | Path) -> Trace:
    return loads(Path(path).read_text(encoding="utf-8"))
