"""Detectable max register that needs no auxiliary state.

``MR[p]`` is written only by ``p`` and only ever grows.  Reads take a double
collect; every recovery simply re-invokes its operation.
"""

from __future__ import annotations

from detrec.nvm import ACK, CellDecl, CellId
from detrec.objects.base import ObjectModel
from detrec.seqspec import MaxRegisterSpec


def mr(i: int) -> CellId:
    return CellId("MR", (i,))


class MaxRegister(ObjectModel):
    kind = "maxreg"

    def __init__(self, n, domain=(0, 1, 2), mutations=frozenset()):
        super().__init__(n, domain, mutations)
        self.programs = {
            "writeMax": (self.write_max, self.write_max),
            "read": (self.read, self.read),
        }

    def cell_decls(self):
        return [CellDecl("MR", 0, shape=(self.n,), bits=lambda vb, n: vb)]

    def seqspec(self):
        return MaxRegisterSpec(self.domain)

    def step_bound(self, op_name, recovering):
        return 2 if op_name == "writeMax" else None

    def write_max(self, p, args, pc, loc, m):
        (val,) = args
        if pc == 0:
            if m.read(p, mr(p)) < val:
                return 1, loc, None
            return 0, loc, ACK
        m.write(p, mr(p), val)
        return 2, loc, ACK

    def read(self, p, args, pc, loc, m):
        # pc in [0, n): compare a[pc] with MR[pc], leaving for the copy pass
        # at the first difference; [n, 2n): copy MR into a; 2n: persist the
        # maximum and return it.
        n = self.n
        a = loc.get("a", (0,) * n)
        if pc < n:
            if m.read(p, mr(pc)) != a[pc]:
                return n, {"a": a}, None
            return (pc + 1 if pc + 1 < n else 2 * n), {"a": a}, None
        if pc < 2 * n:
            i = pc - n
            a = a[:i] + (m.read(p, mr(i)),) + a[i + 1:]
            return (pc + 1 if i + 1 < n else 0), {"a": a}, None
        res = max(a)
        m.write(p, self.resp(p), res)
        return pc + 1, loc, res
