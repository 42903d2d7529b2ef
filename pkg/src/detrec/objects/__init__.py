"""Object registry and mutation operators."""

from __future__ import annotations

from dataclasses import dataclass, field

from detrec.errors import ConfigurationError
from detrec.objects.base import ObjectModel
from detrec.objects.cas import DetectableCas
from detrec.objects.maxreg import MaxRegister
from detrec.objects.register import DetectableRegister

OBJECTS: dict[str, type[ObjectModel]] = {
    "reg-detect": DetectableRegister,
    "cas-detect": DetectableCas,
    "maxreg": MaxRegister,
}

# mutation id -> object kind it applies to (None: any object)
MUTATIONS: dict[str, str | None] = {
    "reg:skip-cp1": "reg-detect",
    "reg:skip-toggle-clear": "reg-detect",
    "reg:skip-toggle-set": "reg-detect",
    "cas:skip-cp1": "cas-detect",
    "cas:skip-rd-persist": "cas-detect",
    "harness:skip-announce-reset": None,
}

ANNOUNCE_RESET_MUTATION = "harness:skip-announce-reset"


@dataclass(frozen=True)
class ObjectKind:
    """An object kind plus the set of mutations applied to it."""

    name: str
    mutations: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.name not in OBJECTS:
            raise ConfigurationError(f"unknown object kind {self.name!r}; choose from {sorted(OBJECTS)}")

    def __str__(self) -> str:
        if not self.mutations:
            return self.name
        return self.name + "+" + "+".join(sorted(self.mutations))

    @classmethod
    def parse(cls, text: str) -> ObjectKind:
        name, *muts = text.split("+")
        kind = cls(name)
        for mut in muts:
            kind = apply_mutation(kind, mut)
        return kind


def apply_mutation(kind: ObjectKind | str, mutation_id: str) -> ObjectKind:
    if isinstance(kind, str):
        kind = ObjectKind.parse(kind)
    if mutation_id not in MUTATIONS:
        raise ConfigurationError(f"unknown mutation {mutation_id!r}; choose from {sorted(MUTATIONS)}")
    target = MUTATIONS[mutation_id]
    if target is not None and target != kind.name:
        raise ConfigurationError(f"mutation {mutation_id} applies to {target}, not {kind.name}")
    return ObjectKind(kind.name, kind.mutations | {mutation_id})


def build(kind: ObjectKind | str, n: int, domain=None, **options) -> ObjectModel:
    """Instantiate the step-machine object for ``kind`` with ``n`` processes."""
    if isinstance(kind, str):
        kind = ObjectKind.parse(kind)
    cls = OBJECTS[kind.name]
    kwargs = dict(options)
    if domain is not None:
        kwargs["domain"] = tuple(domain)
    return cls(n, mutations=kind.mutations, **kwargs)


__all__ = [
    "ANNOUNCE_RESET_MUTATION",
    "MUTATIONS",
    "OBJECTS",
    "ObjectKind",
    "ObjectModel",
    "DetectableCas",
    "DetectableRegister",
    "MaxRegister",
    "apply_mutation",
    "build",
]
