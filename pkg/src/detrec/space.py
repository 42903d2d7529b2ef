"""Analytic shared-space accounting from the declared cell layouts."""

from __future__ import annotations

from detrec.errors import ConfigurationError
from detrec.objects import ObjectKind, build


def space_audit(kind, n: int, value_bits: int) -> int:
    """Total bits of shared (non-private) cells for ``kind`` with ``n`` processes."""
    if value_bits < 1:
        raise ConfigurationError("value_bits must be positive")
    if isinstance(kind, str):
        kind = ObjectKind.parse(kind)
    return build(kind, n).layout.shared_bits(value_bits)


def breakdown(kind, n: int, value_bits: int) -> dict[str, int]:
    """Shared bits per declared cell family."""
    obj = build(kind, n)
    out = {}
    for decl in obj.layout.decls:
        if decl.private:
            continue
        count = 1
        for d in decl.shape:
            count *= d
        out[decl.name] = count * decl.bits(value_bits, n)
    return out
