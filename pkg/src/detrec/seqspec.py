"""Sequential specifications: deterministic ``(state, op) -> (state, response)``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from detrec.errors import ConfigurationError
from detrec.nvm import ACK, BOTTOM, Op


class SeqSpec:
    name = ""
    initial: Any = None

    def apply(self, state: Any, op: Op) -> tuple[Any, Any]:
        raise NotImplementedError

    def alphabet(self) -> list[Op]:
        raise NotImplementedError

    def run(self, ops: Iterable[Op], state: Any = None) -> tuple[Any, list[Any]]:
        """Replay ``ops`` from ``state`` (default: initial) and collect responses."""
        state = self.initial if state is None else state
        responses = []
        for op in ops:
            state, r = self.apply(state, op)
            responses.append(r)
        return state, responses

    def _bad(self, op: Op) -> ConfigurationError:
        return ConfigurationError(f"{self.name} spec has no operation {op}")


@dataclass
class RegisterSpec(SeqSpec):
    domain: tuple = (0, 1, 2)
    name = "rw"

    @property
    def initial(self):  # type: ignore[override]
        return self.domain[0]

    def apply(self, state, op):
        if op.name == "write":
            return op.args[0], ACK
        if op.name == "read":
            return state, state
        raise self._bad(op)

    def alphabet(self):
        return [Op("read")] + [Op("write", (v,)) for v in self.domain]


@dataclass
class CasSpec(SeqSpec):
    domain: tuple = (0, 1, 2)
    name = "cas"

    @property
    def initial(self):  # type: ignore[override]
        return self.domain[0]

    def apply(self, state, op):
        if op.name == "cas":
            old, new = op.args
            if state == old:
                return new, True
            return state, False
        if op.name == "read":
            return state, state
        raise self._bad(op)

    def alphabet(self):
        return [Op("read")] + [Op("cas", (a, b)) for a in self.domain for b in self.domain]


@dataclass
class MaxRegisterSpec(SeqSpec):
    domain: tuple = (0, 1, 2)
    name = "maxreg"
    initial = 0

    def apply(self, state, op):
        if op.name == "writeMax":
            return max(state, op.args[0]), ACK
        if op.name == "read":
            return state, state
        raise self._bad(op)

    def alphabet(self):
        return [Op("read")] + [Op("writeMax", (v,)) for v in self.domain]


@dataclass
class CounterSpec(SeqSpec):
    """Counter over ``{0..bound}``; increments saturate at ``bound``."""

    bound: int | None = None
    name = "counter"
    initial = 0

    def apply(self, state, op):
        if op.name == "inc":
            nxt = state + 1
            if self.bound is not None:
                nxt = min(nxt, self.bound)
            return nxt, ACK
        if op.name == "read":
            return state, state
        raise self._bad(op)

    def alphabet(self):
        return [Op("inc"), Op("read")]


@dataclass
class FetchAndAddSpec(SeqSpec):
    deltas: tuple = (1,)
    name = "faa"
    initial = 0

    def apply(self, state, op):
        if op.name == "faa":
            return state + op.args[0], state
        if op.name == "read":
            return state, state
        raise self._bad(op)

    def alphabet(self):
        return [Op("faa", (d,)) for d in self.deltas] + [Op("read")]


@dataclass
class QueueSpec(SeqSpec):
    """FIFO queue; dequeue on an empty queue returns ⊥."""

    values: tuple = (0, 1)
    name = "queue"
    initial = ()

    def apply(self, state, op):
        if op.name == "enq":
            return state + (op.args[0],), ACK
        if op.name == "deq":
            if not state:
                return state, BOTTOM
            return state[1:], state[0]
        raise self._bad(op)

    def alphabet(self):
        return [Op("enq", (v,)) for v in self.values] + [Op("deq")]


SPECS = {
    "rw": lambda domain: RegisterSpec(tuple(domain or (0, 1))),
    "cas": lambda domain: CasSpec(tuple(domain or (0, 1))),
    "maxreg": lambda domain: MaxRegisterSpec(tuple(domain or (0, 1, 2))),
    "counter": lambda domain: CounterSpec(max(domain) if domain else None),
    "faa": lambda domain: FetchAndAddSpec(tuple(domain or (1,))),
    "queue": lambda domain: QueueSpec(tuple(domain or (0, 1))),
}


def make_spec(name: str, domain: Iterable[int] | None = None) -> SeqSpec:
    try:
        factory = SPECS[name]
    except KeyError:
        raise ConfigurationError(f"unknown spec {name!r}; choose from {sorted(SPECS)}") from None
    return factory(tuple(domain) if domain is not None else None)
