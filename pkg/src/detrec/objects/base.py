from __future__ import annotations

from typing import Any, Callable

from detrec.errors import ConfigurationError
from detrec.nvm import ANN_CP, ANN_OP, ANN_RESP, CellDecl, CellId, Layout, Memory, Op, announcement_decls
from detrec.seqspec import SeqSpec

# A step function runs one pc of a step machine.  It returns the next pc, the
# new locals and ``None`` while running, or the response once finished.
StepFn = Callable[[int, tuple, int, dict, Memory], "tuple[int, dict, Any]"]


class ObjectModel:
    """Base for recoverable objects implemented as step machines."""

    kind: str = ""
    known_mutations: frozenset[str] = frozenset()

    def __init__(self, n: int, domain: tuple[int, ...], mutations: frozenset[str] = frozenset()) -> None:
        if n < 1:
            raise ConfigurationError("need at least one process")
        if not domain:
            raise ConfigurationError("value domain must not be empty")
        unknown = set(mutations) - self.known_mutations - {"harness:skip-announce-reset"}
        if unknown:
            raise ConfigurationError(f"mutations {sorted(unknown)} do not apply to {self.kind}")
        self.n = n
        self.domain = tuple(domain)
        self.v_init = self.domain[0]
        self.mutations = frozenset(mutations)
        self.layout = Layout(n, [*self.cell_decls(), *announcement_decls()])
        self.programs: dict[str, tuple[StepFn, StepFn]] = {}

    def cell_decls(self) -> list[CellDecl]:
        raise NotImplementedError

    def seqspec(self) -> SeqSpec:
        raise NotImplementedError

    def alphabet(self) -> list[Op]:
        return self.seqspec().alphabet()

    def step_bound(self, op_name: str, recovering: bool) -> int | None:
        """Static worst-case steps of one crash-free execution, or None if unbounded."""
        return None

    def idle_dead_cells(self, p: int) -> list[CellId]:
        """Private cells of ``p`` whose value cannot influence any future step
        while ``p`` is idle: the next announcement overwrites them before any
        step reads them.  Used only to shrink memoization keys.
        """
        cells = [CellId(ANN_OP, (p,))]
        if not self.has("harness:skip-announce-reset"):
            cells += [self.resp(p), self.cp(p)]
        return cells

    def program(self, op: Op, recovering: bool) -> StepFn:
        try:
            pair = self.programs[op.name]
        except KeyError:
            raise ConfigurationError(f"{self.kind} has no operation {op.name!r}") from None
        return pair[1] if recovering else pair[0]

    def has(self, mutation: str) -> bool:
        return mutation in self.mutations

    # helpers shared by the object programs

    @staticmethod
    def cp(p: int) -> CellId:
        return CellId(ANN_CP, (p,))

    @staticmethod
    def resp(p: int) -> CellId:
        return CellId(ANN_RESP, (p,))

    def __repr__(self) -> str:
        muts = f", mutations={sorted(self.mutations)}" if self.mutations else ""
        return f"{type(self).__name__}(n={self.n}, domain={self.domain}{muts})"
