"""Bounded-space detectable CAS object.

A single CAS-capable cell ``C`` holds ``(value, vec)`` where ``vec`` has one
bit per process.  A successful CAS by ``p`` flips ``vec[p]``; since only
``p`` ever flips that bit, recovery compares it against the bit ``p``
persisted in ``RD_p`` before attempting the CAS.
"""

from __future__ import annotations

from detrec.nvm import BOTTOM, FAIL, CellDecl, CellId
from detrec.objects.base import ObjectModel
from detrec.seqspec import CasSpec

C = CellId("C")

CAS_READ_C, CAS_RETURN_FALSE, CAS_PERSIST_RD, CAS_CP1, CAS_ATTEMPT, CAS_PERSIST_RES = range(6)


def flip_bit(vec: tuple, p: int) -> tuple:
    return vec[:p] + (1 - vec[p],) + vec[p + 1:]


class DetectableCas(ObjectModel):
    """Detectable CAS object.

    With ``literal=False`` (default) a ``cas(v, v)`` that finds value ``v``
    returns true at its read of ``C`` without installing a new ``vec``.
    Installing it would flip ``vec[p]`` without changing the value, making a
    concurrent ``cas(v, w)`` fail although the value was ``v`` throughout.
    """

    kind = "cas-detect"
    known_mutations = frozenset({"cas:skip-cp1", "cas:skip-rd-persist"})

    def __init__(self, n, domain=None, mutations=frozenset(), literal: bool = False):
        self.literal = literal
        super().__init__(n, tuple(domain) if domain is not None else tuple(range(n + 1)), mutations)
        self.programs = {
            "cas": (self.cas, self.cas_recover),
            "read": (self.read, self.read_recover),
        }

    def cell_decls(self):
        return [
            CellDecl("C", (self.v_init, (0,) * self.n), cas=True, bits=lambda vb, n: vb + n),
            CellDecl("RD", BOTTOM, private=True),
        ]

    def idle_dead_cells(self, p):
        # RD_p is read by recovery only once cp is nonzero, which a fresh
        # announcement prevents until RD_p has been rewritten
        cells = super().idle_dead_cells(p)
        if not (self.mutations & {"harness:skip-announce-reset", "cas:skip-rd-persist"}):
            cells.append(CellId("RD", (p,)))
        return cells

    def seqspec(self):
        return CasSpec(self.domain)

    def step_bound(self, op_name, recovering):
        if op_name == "read":
            return 2
        return 2 if recovering else 5

    def cas(self, p, args, pc, loc, m):
        old, new = args
        if pc == CAS_READ_C:
            val, vec = m.read(p, C)
            if val != old:
                return CAS_RETURN_FALSE, loc, None
            if old == new and not self.literal:
                return CAS_RETURN_FALSE, {"res": True}, None
            nxt = CAS_CP1 if self.has("cas:skip-rd-persist") else CAS_PERSIST_RD
            return nxt, {"val": val, "vec": vec, "newvec": flip_bit(vec, p)}, None
        if pc == CAS_RETURN_FALSE:
            res = loc.get("res", False)
            m.write(p, self.resp(p), res)
            return pc + 1, loc, res
        if pc == CAS_PERSIST_RD:
            m.write(p, CellId("RD", (p,)), loc["newvec"][p])
            nxt = CAS_ATTEMPT if self.has("cas:skip-cp1") else CAS_CP1
            return nxt, loc, None
        if pc == CAS_CP1:
            m.write(p, self.cp(p), 1)
            return CAS_ATTEMPT, loc, None
        if pc == CAS_ATTEMPT:
            res = m.cas(p, C, (loc["val"], loc["vec"]), (new, loc["newvec"]))
            return CAS_PERSIST_RES, {"res": res}, None
        m.write(p, self.resp(p), loc["res"])
        return pc + 1, loc, loc["res"]

    def cas_recover(self, p, args, pc, loc, m):
        if pc == 0:
            resp = m.read(p, self.resp(p))
            if resp is not BOTTOM:
                return pc, loc, resp
            if m.read(p, self.cp(p)) == 0:
                return pc, loc, FAIL
            return 1, loc, None
        if pc == 1:
            _, vec = m.read(p, C)
            if vec[p] != m.read(p, CellId("RD", (p,))):
                return pc, loc, FAIL  # CAS failed or was never performed
            return 2, loc, None
        m.write(p, self.resp(p), True)
        return 3, loc, True

    def read(self, p, args, pc, loc, m):
        if pc == 0:
            val, _ = m.read(p, C)
            return 1, {"val": val}, None
        m.write(p, self.resp(p), loc["val"])
        return 2, loc, loc["val"]

    def read_recover(self, p, args, pc, loc, m):
        if pc == 0:
            resp = m.read(p, self.resp(p))
            if resp is not BOTTOM:
                return pc, loc, resp
            return 1, loc, None
        npc, loc, r = self.read(p, args, pc - 1, loc, m)
        return npc + 1, loc, r
