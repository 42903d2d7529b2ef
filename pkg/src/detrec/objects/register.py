"""Bounded-space detectable read/write register.

Shared state is one register ``R`` holding ``(value, writer, toggle)`` plus a
boolean array ``A[N][N][2]`` of toggle bits.  Each process owns ``RD`` (its
recovery snapshot) and ``T`` (the toggle index its next write uses).
"""

from __future__ import annotations

from detrec.nvm import ACK, BOTTOM, FAIL, CellDecl, CellId, Op
from detrec.objects.base import ObjectModel
from detrec.seqspec import RegisterSpec

R = CellId("R")

# write program counters
W_READ_R, W_CLEAR, W_READ_T, W_PERSIST_RD, W_REREAD_R, W_CP1, W_WRITE_R, W_CP2 = range(8)
W_LOOP = 8  # W_LOOP + i sets A[i][p][mtoggle]

# recovery program counters
WR_READ_RD, WR_RESP, WR_CP, WR_READ_R, WR_READ_A, WR_CP2 = range(6)
WR_LOOP = 6


class DetectableRegister(ObjectModel):
    """Detectable read/write object.

    ``literal_init=True`` keeps every ``T_p`` initially 0.  The default starts
    ``T_0`` at 1: the initial contents of ``R`` are attributed to a completed
    write by process 0 with toggle 0, so process 0's next write must use
    toggle 1.  Otherwise process 0's first write of the initial value
    reproduces the initial triple and recovery can misreport an overwritten
    write as never linearized.
    """

    kind = "reg-detect"
    known_mutations = frozenset({"reg:skip-cp1", "reg:skip-toggle-clear", "reg:skip-toggle-set"})

    def __init__(self, n, domain=(0, 1, 2), mutations=frozenset(), literal_init: bool = False):
        self.literal_init = literal_init
        super().__init__(n, domain, mutations)
        self.programs = {
            "write": (self.write, self.write_recover),
            "read": (self.read, self.read_recover),
        }

    def cell_decls(self):
        def t_init(idx):
            return 1 if (idx[0] == 0 and not self.literal_init) else 0

        return [
            CellDecl("R", (self.v_init, 0, 0), bits=lambda vb, n: vb + (n - 1).bit_length() + 1),
            CellDecl("A", 0, shape=(self.n, self.n, 2), bits=lambda vb, n: 1),
            CellDecl("RD", BOTTOM, private=True),
            CellDecl("T", t_init, private=True),
        ]

    def idle_dead_cells(self, p):
        # RD_p is read by recovery only once cp is nonzero, which a fresh
        # announcement prevents until RD_p has been rewritten
        cells = super().idle_dead_cells(p)
        if not self.has("harness:skip-announce-reset"):
            cells.append(CellId("RD", (p,)))
        return cells

    def seqspec(self):
        return RegisterSpec(self.domain)

    def step_bound(self, op_name, recovering):
        if op_name == "read":
            return 2
        return self.n + 5 if recovering else self.n + 9

    # -- Write ------------------------------------------------------------

    def write(self, p, args, pc, loc, m):
        (val,) = args
        n = self.n
        if pc == W_READ_R:
            qval, q, qtoggle = m.read(p, R)
            nxt = W_READ_T if self.has("reg:skip-toggle-clear") else W_CLEAR
            return nxt, {"qval": qval, "q": q, "qtoggle": qtoggle}, None
        if pc == W_CLEAR:
            m.write(p, CellId("A", (p, loc["q"], 1 - loc["qtoggle"])), 0)
            return W_READ_T, loc, None
        if pc == W_READ_T:
            return W_PERSIST_RD, {**loc, "mtoggle": m.read(p, CellId("T", (p,)))}, None
        if pc == W_PERSIST_RD:
            m.write(p, CellId("RD", (p,)), (loc["mtoggle"], loc["qval"], loc["q"], loc["qtoggle"]))
            return W_REREAD_R, loc, None
        if pc == W_REREAD_R:
            if m.read(p, R) != (loc["qval"], loc["q"], loc["qtoggle"]):
                return W_CP2, loc, None  # overwritten by a concurrent write
            return (W_WRITE_R if self.has("reg:skip-cp1") else W_CP1), loc, None
        if pc == W_CP1:
            m.write(p, self.cp(p), 1)
            return W_WRITE_R, loc, None
        if pc == W_WRITE_R:
            m.write(p, R, (val, p, loc["mtoggle"]))
            return W_CP2, loc, None
        if pc == W_CP2:
            m.write(p, self.cp(p), 2)
            return (W_LOOP + n if self.has("reg:skip-toggle-set") else W_LOOP), loc, None
        return self._epilogue(p, pc - W_LOOP, loc, m, W_LOOP)

    def _epilogue(self, p, i, loc, m, base):
        """Toggle-row loop, T flip and response; shared by Write and its recovery."""
        n = self.n
        mtoggle = loc["mtoggle"]
        if i < n:
            m.write(p, CellId("A", (i, p, mtoggle)), 1)
            return base + i + 1, loc, None
        if i == n:
            m.write(p, CellId("T", (p,)), 1 - mtoggle)
            return base + n + 1, loc, None
        m.write(p, self.resp(p), ACK)
        return base + n + 2, loc, ACK

    def write_recover(self, p, args, pc, loc, m):
        if pc == WR_READ_RD:
            rd = m.read(p, CellId("RD", (p,)))
            if rd is BOTTOM:
                return WR_RESP, {"rd": None}, None
            mtoggle, qval, q, qtoggle = rd
            return WR_RESP, {"mtoggle": mtoggle, "qval": qval, "q": q, "qtoggle": qtoggle}, None
        if pc == WR_RESP:
            if m.read(p, self.resp(p)) is not BOTTOM:
                return pc, loc, ACK
            return WR_CP, loc, None
        if pc == WR_CP:
            cp = m.read(p, self.cp(p))
            if cp == 0:
                return pc, loc, FAIL
            if "rd" in loc:
                # A checkpoint without a persisted snapshot; only reachable
                # when the caller skipped resetting the announcement.
                return pc, loc, FAIL
            return (WR_READ_R if cp == 1 else WR_CP2), loc, None
        if pc == WR_READ_R:
            if m.read(p, R) != (loc["qval"], loc["q"], loc["qtoggle"]):
                return WR_CP2, loc, None
            return WR_READ_A, loc, None
        if pc == WR_READ_A:
            if m.read(p, CellId("A", (p, loc["q"], 1 - loc["qtoggle"]))) == 0:
                return pc, loc, FAIL
            return WR_CP2, loc, None
        if pc == WR_CP2:
            m.write(p, self.cp(p), 2)
            return (WR_LOOP + self.n if self.has("reg:skip-toggle-set") else WR_LOOP), loc, None
        return self._epilogue(p, pc - WR_LOOP, loc, m, WR_LOOP)

    # -- Read -------------------------------------------------------------

    def read(self, p, args, pc, loc, m):
        if pc == 0:
            val, _, _ = m.read(p, R)
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


def write_op(v: int) -> Op:
    return Op("write", (v,))
