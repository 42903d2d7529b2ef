"""Private-cache NVM system model.

Shared cells and per-process private cells all live in non-volatile memory;
process contexts (program counter and locals) are volatile and are wiped by a
system-wide crash.  A :class:`Memory` is a mutable view used while executing a
single scheduler step; the persistent state is an immutable ``values`` tuple
indexed through a :class:`Layout`.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Any, Callable, Iterable, NamedTuple

from detrec.errors import ConfigurationError, ModelViolation


class Sym(enum.Enum):
    """Distinguished values that are not part of any object's value domain."""

    BOTTOM = "⊥"
    ACK = "ack"
    FAIL = "fail"

    def __repr__(self) -> str:
        return self.value

    __str__ = __repr__


BOTTOM = Sym.BOTTOM
ACK = Sym.ACK
FAIL = Sym.FAIL


class Op(NamedTuple):
    """An operation descriptor: operation name plus its abstract arguments."""

    name: str
    args: tuple = ()

    def __str__(self) -> str:
        return f"{self.name}({','.join(str(a) for a in self.args)})"

    @classmethod
    def parse(cls, text: str) -> Op:
        text = text.strip()
        if not text.endswith(")") or "(" not in text:
            raise ValueError(f"malformed operation descriptor {text!r}")
        name, _, rest = text.partition("(")
        body = rest[:-1].strip()
        args = tuple(int(a) for a in body.split(",")) if body else ()
        return cls(name, args)


class CellId(NamedTuple):
    name: str
    index: tuple = ()

    def __str__(self) -> str:
        if not self.index:
            return self.name
        return self.name + "".join(f"[{i}]" for i in self.index)


@dataclass(frozen=True)
class CellDecl:
    """Declaration of a (possibly array-valued) cell family.

    ``private=True`` declares one cell per process, addressed as
    ``CellId(name, (pid,))``.  ``bits`` maps ``(value_bits, n)`` to the width
    of one cell and is only used for analytic space accounting.
    """

    name: str
    initial: Any
    shape: tuple = ()
    private: bool = False
    cas: bool = False
    bits: Callable[[int, int], int] | None = None


# Every process owns an announcement structure.  Its fields are separate
# private cells: algorithms write cp and resp individually, while the
# caller's announcement persists all three as one record.
ANN_OP = "Ann.op"
ANN_RESP = "Ann.resp"
ANN_CP = "Ann.cp"


def announcement_decls() -> list[CellDecl]:
    return [
        CellDecl(ANN_OP, BOTTOM, private=True),
        CellDecl(ANN_RESP, BOTTOM, private=True),
        CellDecl(ANN_CP, 0, private=True),
    ]


class Layout:
    """Maps every concrete CellId of a system to a slot in the values tuple."""

    def __init__(self, n: int, decls: Iterable[CellDecl]) -> None:
        self.n = n
        self.decls = list(decls)
        self.slots: dict[CellId, int] = {}
        self.owner: list[int | None] = []
        self.cas_ok: list[bool] = []
        initial: list[Any] = []
        for decl in self.decls:
            if decl.private:
                indices = [(p,) for p in range(n)]
            else:
                indices = list(itertools.product(*(range(d) for d in decl.shape)))
            for idx in indices:
                cell = CellId(decl.name, idx)
                if cell in self.slots:
                    raise ConfigurationError(f"duplicate cell {cell}")
                self.slots[cell] = len(initial)
                self.owner.append(idx[0] if decl.private else None)
                self.cas_ok.append(decl.cas)
                init = decl.initial
                initial.append(init(idx) if callable(init) else init)
        self.initial = tuple(initial)
        self.shared_slots = tuple(i for i, o in enumerate(self.owner) if o is None)

    def slot(self, cell: CellId) -> int:
        try:
            return self.slots[cell]
        except KeyError:
            raise ConfigurationError(f"unknown cell {cell}") from None

    def shared_image(self, values: tuple) -> tuple:
        return tuple(values[i] for i in self.shared_slots)

    def as_dict(self, values: tuple) -> dict[str, Any]:
        return {str(c): values[i] for c, i in self.slots.items()}

    def shared_bits(self, value_bits: int) -> int:
        total = 0
        for decl in self.decls:
            if decl.private:
                continue
            if decl.bits is None:
                raise ConfigurationError(f"cell {decl.name} declares no bit width")
            count = 1
            for d in decl.shape:
                count *= d
            total += count * decl.bits(value_bits, self.n)
        return total


class Access(NamedTuple):
    """One primitive applied to memory, recorded when tracing is enabled."""

    pid: int
    kind: str  # read | write | cas
    cell: CellId
    before: Any
    after: Any
    result: Any


class Memory:
    """Mutable view of a memory image for the duration of one scheduler step.

    Reads of the caller's own private cells are *folded*: they do not count
    as visible primitives, since no other process can observe or change them.
    Every shared access and every write counts as one visible primitive.
    """

    __slots__ = ("layout", "vals", "visible", "log")

    def __init__(self, layout: Layout, values: tuple, log: list[Access] | None = None) -> None:
        self.layout = layout
        self.vals = list(values)
        self.visible = 0
        self.log = log

    def _slot(self, p: int, cell: CellId) -> int:
        slot = self.layout.slot(cell)
        owner = self.layout.owner[slot]
        if owner is not None and owner != p:
            raise ModelViolation(f"process {p} accessed private cell {cell} of process {owner}")
        return slot

    def read(self, p: int, cell: CellId) -> Any:
        slot = self._slot(p, cell)
        value = self.vals[slot]
        if self.layout.owner[slot] is None:
            self.visible += 1
        if self.log is not None:
            self.log.append(Access(p, "read", cell, value, value, value))
        return value

    def write(self, p: int, cell: CellId, value: Any) -> None:
        slot = self._slot(p, cell)
        before = self.vals[slot]
        self.vals[slot] = value
        self.visible += 1
        if self.log is not None:
            self.log.append(Access(p, "write", cell, before, value, None))

    def cas(self, p: int, cell: CellId, expected: Any, new: Any) -> bool:
        slot = self._slot(p, cell)
        if not self.layout.cas_ok[slot]:
            raise ConfigurationError(f"cell {cell} is not CAS-capable")
        before = self.vals[slot]
        ok = before == expected
        if ok:
            self.vals[slot] = new
        self.visible += 1
        if self.log is not None:
            self.log.append(Access(p, "cas", cell, before, self.vals[slot], ok))
        return ok

    def write_record(self, p: int, fields: dict[CellId, Any]) -> None:
        """Persist several fields of one private record as a single primitive."""
        for cell, value in fields.items():
            slot = self._slot(p, cell)
            if self.layout.owner[slot] is None:
                raise ModelViolation(f"record write to shared cell {cell}")
            before = self.vals[slot]
            self.vals[slot] = value
            if self.log is not None:
                self.log.append(Access(p, "write", cell, before, value, None))
        self.visible += 1

    def freeze(self) -> tuple:
        return tuple(self.vals)


# Stand-alone primitive helpers mirroring the model's vocabulary.  They work
# on immutable images and return the new image alongside the result.

def read_cell(layout: Layout, values: tuple, p: int, cell: CellId) -> Any:
    return Memory(layout, values).read(p, cell)


def write_cell(layout: Layout, values: tuple, p: int, cell: CellId, value: Any) -> tuple:
    m = Memory(layout, values)
    m.write(p, cell, value)
    return m.freeze()


def cas_cell(layout: Layout, values: tuple, p: int, cell: CellId, expected: Any, new: Any) -> tuple[bool, tuple]:
    m = Memory(layout, values)
    ok = m.cas(p, cell, expected, new)
    return ok, m.freeze()


IDLE = "idle"
RUNNING = "running"
CRASHED = "crashed"
RECOVERING = "recovering"


class ProcessContext(NamedTuple):
    """Volatile state of one process plus the harness's bookkeeping.

    ``pc``, ``locals`` and ``steps`` are volatile and wiped by a crash.
    ``status``, ``op_index``, ``attempt`` and ``op`` are harness state: which
    script entry the process is on and whether it must recover.
    """

    pid: int
    status: str = IDLE
    op_index: int = 0
    attempt: int = 0
    op: Op | None = None
    pc: int = 0
    locals: tuple = ()
    steps: int = 0

    @property
    def instance(self) -> str:
        return instance_id(self.pid, self.op_index, self.attempt)

    @property
    def in_flight(self) -> bool:
        return self.status != IDLE


def instance_id(pid: int, op_index: int, attempt: int = 0) -> str:
    base = f"p{pid}.{op_index}"
    return f"{base}.r{attempt}" if attempt else base


def announce(mem: Memory, p: int, op: Op, reset: bool = True) -> None:
    """Caller-side announcement made immediately before invoking ``op``.

    With ``reset=False`` the response and checkpoint fields are left as they
    were, which removes the auxiliary state the caller normally provides.
    """
    fields: dict[CellId, Any] = {CellId(ANN_OP, (p,)): op}
    if reset:
        fields[CellId(ANN_RESP, (p,))] = BOTTOM
        fields[CellId(ANN_CP, (p,))] = 0
    mem.write_record(p, fields)


def crash_contexts(procs: Iterable[ProcessContext]) -> tuple[ProcessContext, ...]:
    """Reset every volatile context; in-flight processes become crashed."""
    out = []
    for ctx in procs:
        if ctx.status in (RUNNING, RECOVERING, CRASHED):
            out.append(ProcessContext(ctx.pid, CRASHED, ctx.op_index, ctx.attempt, None))
        else:
            out.append(ProcessContext(ctx.pid, IDLE, ctx.op_index, ctx.attempt, ctx.op))
    return tuple(out)
