"""Bounded search for doubly-perturbing witnesses over sequential specs.

An operation ``op_p`` is perturbing with respect to ``op'`` (by another
process) after ``H`` when ``op'`` responds differently in ``H.op_p.op'`` and
in ``H.op'``.  A witness consists of ``H1``, ``op_p``, ``op'_1`` with ``op_p``
perturbing w.r.t. ``op'_1`` after ``H1``, and a p-free extension ``E`` such
that ``op_p`` is again perturbing, w.r.t. ``op'_2``, after
``H2 = H1.op_p.op'_1.E``.

The shipped specs do not depend on which process calls an operation, so
perturbation after ``H`` depends only on the state ``H`` leads to.  The
search therefore enumerates histories breadth-first in (length, lexicographic)
order and keeps only the first history reaching each state.  Process ``p`` is
fixed to 0 and every other operation is attributed to process 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from detrec.history import INVOKE, RESPOND, HistoryEvent
from detrec.nvm import Op
from detrec.seqspec import SeqSpec

P, Q = 0, 1
DEFAULT_BOUND = 6
DEFAULT_EXTENSION_BOUND = 4


def _state_after(spec: SeqSpec, ops, state=None):
    return spec.run(ops, state)[0]


def is_perturbing_after(spec: SeqSpec, history, op_a: Op, op_b: Op) -> bool:
    """True iff ``op_b`` responds differently after ``history.op_a`` and after ``history``."""
    state = _state_after(spec, history)
    return _perturbs(spec, state, op_a, op_b)


def _perturbs(spec: SeqSpec, state, op_a: Op, op_b: Op) -> bool:
    after_a, _ = spec.apply(state, op_a)
    return spec.apply(after_a, op_b)[1] != spec.apply(state, op_b)[1]


@dataclass
class Witness:
    h1: list[Op]
    op_p: Op
    op_prime1: Op
    extension: list[Op]
    op_prime2: Op

    @property
    def h2(self) -> list[Op]:
        return [*self.h1, self.op_p, self.op_prime1, *self.extension]

    def labelled_h2(self) -> list[tuple[int, Op]]:
        return [(Q, op) for op in self.h1] + [(P, self.op_p), (Q, self.op_prime1)] + [(Q, op) for op in self.extension]

    def to_dict(self) -> dict:
        return {
            "p": P,
            "opP": str(self.op_p),
            "H1": [str(op) for op in self.h1],
            "opPrime1": str(self.op_prime1),
            "extension": [str(op) for op in self.extension],
            "H2": [f"{op}@p{pid}" for pid, op in self.labelled_h2()],
            "opPrime2": str(self.op_prime2),
        }


@dataclass
class SearchResult:
    witness: Witness | None
    bound: int
    extension_bound: int
    states: int = 0
    exhausted_at_bound: bool = field(default=False)

    @property
    def found(self) -> bool:
        return self.witness is not None


def verify_witness(spec: SeqSpec, w: Witness) -> bool:
    """Check both conditions by direct replay from the initial state."""
    first = is_perturbing_after(spec, w.h1, w.op_p, w.op_prime1)
    second = is_perturbing_after(spec, w.h2, w.op_p, w.op_prime2)
    return first and second


def _histories(spec: SeqSpec, start, alphabet, max_len: int):
    """Yield ``(history, state)`` in (length, lex) order, first visit per state."""
    seen = {start}
    layer = [([], start)]
    yield [], start
    for _ in range(max_len):
        nxt = []
        for hist, state in layer:
            for op in alphabet:
                s2, _ = spec.apply(state, op)
                if s2 in seen:
                    continue
                seen.add(s2)
                nxt.append((hist + [op], s2))
                yield hist + [op], s2
        layer = nxt


def search_doubly_perturbing_witness(spec: SeqSpec, bound: int = DEFAULT_BOUND,
                                     extension_bound: int = DEFAULT_EXTENSION_BOUND,
                                     alphabet: list[Op] | None = None) -> SearchResult:
    """Return the first witness with ``|H2| <= bound`` in canonical order.

    ``alphabet`` defaults to ``spec.alphabet()``.  Finding none
    only means the bounded space is exhausted.
    """
    ops = sorted(alphabet if alphabet is not None else spec.alphabet(), key=str)
    states = 0
    for h1, s1 in _histories(spec, spec.initial, ops, max(bound - 2, -1)):
        states += 1
        room = min(extension_bound, bound - len(h1) - 2)
        if room < 0:
            continue
        for op_p in ops:
            for op1 in ops:
                if not _perturbs(spec, s1, op_p, op1):
                    continue
                s_mid = _state_after(spec, [op_p, op1], s1)
                for ext, s2 in _histories(spec, s_mid, ops, room):
                    states += 1
                    for op2 in ops:
                        if _perturbs(spec, s2, op_p, op2):
                            w = Witness(h1, op_p, op1, ext, op2)
                            if not verify_witness(spec, w):
                                raise AssertionError(f"witness failed replay: {w.to_dict()}")
                            return SearchResult(w, bound, extension_bound, states)
    return SearchResult(None, bound, extension_bound, states, exhausted_at_bound=True)


def witness_histories(spec: SeqSpec, w: Witness) -> dict[str, list[HistoryEvent]]:
    """Sequential histories certifying the witness, in the harness event format.

    Keys name the four runs compared by the two conditions.
    """
    runs = {
        "H1.opP.opPrime1": [(Q, op) for op in w.h1] + [(P, w.op_p), (Q, w.op_prime1)],
        "H1.opPrime1": [(Q, op) for op in w.h1] + [(Q, w.op_prime1)],
        "H2.opP.opPrime2": w.labelled_h2() + [(P, w.op_p), (Q, w.op_prime2)],
        "H2.opPrime2": w.labelled_h2() + [(Q, w.op_prime2)],
    }
    return {name: sequential_history(spec, seq) for name, seq in runs.items()}


def sequential_history(spec: SeqSpec, labelled: list[tuple[int, Op]]) -> list[HistoryEvent]:
    state: Any = spec.initial
    events: list[HistoryEvent] = []
    counts: dict[int, int] = {}
    for pid, op in labelled:
        k = counts.get(pid, 0)
        counts[pid] = k + 1
        inst = f"p{pid}.{k}"
        state, resp = spec.apply(state, op)
        events.append(HistoryEvent(len(events), INVOKE, pid, inst, op, None))
        events.append(HistoryEvent(len(events), RESPOND, pid, inst, op, resp))
    return events


# Hand-built witnesses for each shipped spec, over values
# v0=0 and v1=1.
def known_witnesses() -> dict[str, Witness]:
    w = Op("write", (1,))
    cas01 = Op("cas", (0, 1))
    deq = Op("deq")
    return {
        "rw": Witness([], w, Op("read"), [Op("write", (0,))], Op("read")),
        "counter": Witness([], Op("inc"), Op("read"), [], Op("read")),
        "cas": Witness([], cas01, cas01, [Op("cas", (1, 0))], cas01),
        "faa": Witness([], Op("faa", (1,)), Op("read"), [], Op("read")),
        "queue": Witness([Op("enq", (0,)), Op("enq", (1,))], deq, deq,
                         [Op("enq", (0,)), Op("enq", (1,))], deq),
    }
