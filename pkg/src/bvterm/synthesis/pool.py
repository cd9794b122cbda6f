"""Bottom-up term enumeration with observational-equivalence pruning.

Terms are expression trees over L opcodes. Two terms that agree on every
sample point are considered equal and only the first (smallest) is kept, so
the pool holds one representative per distinct behaviour. Values live in a
``(terms, points)`` uint64 matrix; dedup goes through 64-bit row hashes.
"""
from __future__ import annotations

import numpy as np

from ..llang import ARITY, BOOLEAN_OPS, COMMUTATIVE_OPS, OPCODES, Const, Input, LInstr, LProgram, \
    Reg, apply_vector
from .._jit import JIT_ACTIVE, njit
from ..words import mask

IN, CONST = -1, -2
_OPID = {op: i for i, op in enumerate(OPCODES)}
_BOOL_IF_ARGS = frozenset({"and", "or", "xor", "min", "max"})
_CHUNK = 1 << 22  # values computed per batch


def _row_hashes_np(block: np.ndarray, salt: np.ndarray) -> np.ndarray:
    x = block ^ salt
    x = (x ^ (x >> np.uint64(31))) * np.uint64(0x7FB5D329728EA185)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x81DADEF4BC2DD44D)
    h = np.bitwise_xor.reduce(x * (np.arange(1, block.shape[1] + 1, dtype=np.uint64) * np.uint64(2) + np.uint64(1)),
                              axis=1) if block.shape[1] else np.zeros(len(block), np.uint64)
    return h ^ (h >> np.uint64(29))


@njit(fallback=_row_hashes_np)
def _row_hashes(block, salt):
    rows, cols = block.shape
    out = np.empty(rows, dtype=np.uint64)
    for r in range(rows):
        h = np.uint64(0)
        for c in range(cols):
            x = block[r, c] ^ salt[c]
            x = (x ^ (x >> np.uint64(31))) * np.uint64(0x7FB5D329728EA185)
            x = (x ^ (x >> np.uint64(27))) * np.uint64(0x81DADEF4BC2DD44D)
            h ^= x * np.uint64(2 * c + 3)
        out[r] = h ^ (h >> np.uint64(29))
    return out


@njit
def _table_insert(h, table, room):
    """Insert hashes in order into an open-addressing table; mark first-seen ones."""
    slots = np.uint64(len(table) - 1)
    keep = np.zeros(len(h), dtype=np.bool_)
    n = 0
    for i in range(len(h)):
        if n >= room:
            break
        x = h[i]
        j = np.int64((x ^ (x >> np.uint64(23))) & slots)
        while True:
            t = table[j]
            if t == 0:
                table[j] = x
                keep[i] = True
                n += 1
                break
            if t == x:
                break
            j = np.int64((np.uint64(j) + np.uint64(1)) & slots)
    return keep


class HashSet:
    """Set of nonzero 64-bit hashes; ``insert_new`` reports first occurrences.

    ``jit=True`` uses a compiled open-addressing table, otherwise a sorted
    numpy array. Both give identical answers.
    """

    def __init__(self, jit: bool = JIT_ACTIVE):
        self.jit = jit
        self.count = 0
        self._table = np.zeros(1 << 10, dtype=np.uint64)
        self._sorted = np.zeros(0, dtype=np.uint64)

    def __len__(self):
        return self.count

    def insert_new(self, h: np.ndarray, room: int) -> np.ndarray:
        h = np.where(h == 0, np.uint64(1), h).astype(np.uint64)
        if self.jit:
            need = 2 * (self.count + len(h))
            if need > len(self._table):
                old = self._table[self._table != 0]
                size = 1 << max(10, int(need).bit_length() + 1)
                self._table = np.zeros(size, dtype=np.uint64)
                _table_insert(old, self._table, len(old))
            keep = _table_insert(h, self._table, room)
        else:
            uh, first = np.unique(h, return_index=True)
            if len(self._sorted):
                pos = np.searchsorted(self._sorted, uh)
                pos[pos == len(self._sorted)] = 0
                fresh = self._sorted[pos] != uh
                first = first[fresh]
            first = np.sort(first)[:max(room, 0)]
            keep = np.zeros(len(h), dtype=bool)
            keep[first] = True
            self._sorted = np.union1d(self._sorted, h[first])
        self.count += int(keep.sum())
        return keep


class TermPool:
    """Growable pool of pairwise distinct (on ``points``) terms.

    ``grow(s)`` adds every new behaviour reachable with exactly ``s``
    operators and returns the id range that was added. Sizes must be grown
    in order; calling ``grow`` for an existing size is a no-op.
    ``ite`` conditions are restricted to 0/1-valued terms unless
    ``any_condition`` is set; ``neq(t, 0)`` recovers the rest one size later.
    """

    def __init__(self, width: int, arity: int, points: np.ndarray, constants,
                 opcodes=OPCODES, max_new_per_size: int = 400_000, max_cells: int = 20_000_000,
                 any_condition: bool = False):
        self.width = width
        self.any_condition = any_condition
        self.arity = arity
        self.m = np.uint64(mask(width))
        pts = np.asarray(points, dtype=np.uint64).reshape(-1, arity) & self.m
        self.points = pts
        self.npts = len(pts)
        self.opcodes = [op for op in opcodes if op in ARITY]
        self.max_new = min(max_new_per_size, max(2_000, max_cells // max(1, self.npts)))
        self.stale = False  # points were added after some terms were deduplicated
        self.truncated = False
        rng = np.random.default_rng(12345)
        self._salt = rng.integers(0, 2**63, size=self.npts, dtype=np.uint64)

        self._chunks: list[np.ndarray] = []
        self._vals = np.zeros((0, self.npts), dtype=np.uint64)
        self.op = np.zeros(0, dtype=np.int16)
        self.kids = np.zeros((0, 3), dtype=np.int64)
        self.size = np.zeros(0, dtype=np.int16)
        self.is_bool = np.zeros(0, dtype=bool)
        self._hashes = HashSet()
        self.size_ranges: list[tuple[int, int]] = []

        ops, kids, rows, bools = [], [], [], []
        for i in range(arity):
            ops.append(IN)
            kids.append((i, 0, 0))
            rows.append(pts[:, i])
            bools.append(False)
        for c in sorted({int(c) & mask(width) for c in constants}):
            ops.append(CONST)
            kids.append((c, 0, 0))
            rows.append(np.full(self.npts, c, dtype=np.uint64))
            bools.append(c in (0, 1))
        self.size_ranges.append((0, 0))
        block = np.array(rows, dtype=np.uint64).reshape(len(rows), self.npts)
        self._append(block, np.array(ops, dtype=np.int16), np.array(kids, dtype=np.int64).reshape(-1, 3),
                     np.array(bools, dtype=bool), 0)

    # ------------------------------------------------------------ bookkeeping

    def __len__(self):
        return len(self.op)

    @property
    def vals(self) -> np.ndarray:
        """``(len(self), npts)`` value matrix."""
        if self._chunks:
            self._vals = np.concatenate([self._vals] + self._chunks)
            self._chunks = []
        return self._vals

    @property
    def max_size(self) -> int:
        return len(self.size_ranges) - 1

    def ids_of_size(self, s: int) -> range:
        lo, hi = self.size_ranges[s]
        return range(lo, hi)

    def _append(self, block, ops, kids, bools, size):
        """Add the rows of ``block`` whose behaviour is new."""
        if not len(block):
            return
        lo = self.size_ranges[size][0]
        room = self.max_new - (len(self.op) - lo)
        h = _row_hashes(block, self._salt)
        keep = self._hashes.insert_new(h, room)
        first = np.flatnonzero(keep)
        if len(first) >= room:
            self.truncated = True
        if not len(first):
            return
        self._chunks.append(block[first])
        self.op = np.concatenate([self.op, np.broadcast_to(ops, len(block))[first]])
        self.kids = np.concatenate([self.kids, kids[first]])
        self.size = np.concatenate([self.size, np.full(len(first), size, dtype=np.int16)])
        self.is_bool = np.concatenate([self.is_bool, bools[first]])
        self.size_ranges[size] = (lo, len(self.op))

    def _full(self, s: int) -> bool:
        return len(self.op) - self.size_ranges[s][0] >= self.max_new

    def add_points(self, points: np.ndarray):
        """Evaluate every existing term on extra points.

        Terms merged under the old points stay merged, so the pool may now
        miss behaviours; ``stale`` records that.
        """
        pts = np.asarray(points, dtype=np.uint64).reshape(-1, self.arity) & self.m
        if not len(pts):
            return
        V = self.vals
        cols = np.zeros((len(self), len(pts)), dtype=np.uint64)
        for lo, hi in self.size_ranges:
            ids = np.arange(lo, hi)
            opv = self.op[ids]
            for o in np.unique(opv).tolist():
                sel = ids[opv == o]
                kid = self.kids[sel]
                if o == IN:
                    cols[sel] = pts[:, kid[:, 0]].T
                elif o == CONST:
                    cols[sel] = kid[:, 0].astype(np.uint64)[:, None]
                elif OPCODES[o] == "ite":
                    cols[sel] = np.where(cols[kid[:, 0]] != 0, cols[kid[:, 1]], cols[kid[:, 2]])
                else:
                    args = [cols[kid[:, j]] for j in range(ARITY[OPCODES[o]])]
                    cols[sel] = apply_vector(OPCODES[o], args, self.width) & self.m
        self._vals = np.concatenate([V, cols], axis=1)
        self.points = np.concatenate([self.points, pts])
        self.npts = len(self.points)
        rng = np.random.default_rng(self.npts)
        self._salt = np.concatenate([self._salt, rng.integers(0, 2**63, size=len(pts), dtype=np.uint64)])
        self._hashes = HashSet()
        self._hashes.insert_new(_row_hashes(self._vals, self._salt), len(self._vals))
        self.stale = True

    # ------------------------------------------------------------ growth

    def grow(self, s: int) -> tuple[int, int]:
        for _ in self.grow_steps(s):
            pass
        return self.size_ranges[s]

    def grow_steps(self, s: int):
        """Generator form of :meth:`grow` that yields between batches."""
        if s <= self.max_size:
            return
        if s != self.max_size + 1:
            yield from self.grow_steps(s - 1)
        self.size_ranges.append((len(self.op), len(self.op)))
        isb = self.is_bool.copy()
        isc = self.op == CONST
        V = self.vals
        for op in self.opcodes:
            if self._full(s):
                self.truncated = True
                break
            k = ARITY[op]
            if k == 1:
                self._grow_unary(op, s, V)
                yield
            elif k == 2:
                for sa in range(s):
                    sb = s - 1 - sa
                    if op in COMMUTATIVE_OPS and sa > sb:
                        continue
                    yield from self._grow_binary(op, sa, sb, isb, isc, V)
            else:
                yield from self._grow_ite(s, isb, isc, V)

    def _grow_unary(self, op, s, V):
        lo, hi = self.size_ranges[s - 1]
        ids = np.arange(lo, hi)
        ids = ids[self.op[ids] != _OPID[op]]  # no double negation
        if not len(ids):
            return
        block = apply_vector(op, [V[ids]], self.width) & self.m
        kids = np.zeros((len(ids), 3), dtype=np.int64)
        kids[:, 0] = ids
        self._append(block, np.int16(_OPID[op]), kids, np.zeros(len(ids), dtype=bool), s)

    def _grow_binary(self, op, sa, sb, isb, isc, V):
        la, ha = self.size_ranges[sa]
        lb, hb = self.size_ranges[sb]
        nb = hb - lb
        if ha == la or not nb:
            return
        same = op in COMMUTATIVE_OPS and sa == sb
        step = max(1, _CHUNK // max(1, nb * self.npts))
        B = V[lb:hb]
        for a0 in range(la, ha, step):
            if self._full(sa + sb + 1):
                return
            a1 = min(ha, a0 + step)
            ai, bi = np.meshgrid(np.arange(a0, a1), np.arange(lb, hb), indexing="ij")
            ai, bi = ai.ravel(), bi.ravel()
            sel = ~(isc[ai] & isc[bi])  # all-constant combinations fold to a leaf
            if same:
                sel &= ai <= bi
            ai, bi = ai[sel], bi[sel]
            if not len(ai):
                continue
            block = apply_vector(op, [V[ai], B[bi - lb]], self.width) & self.m
            if op in BOOLEAN_OPS:
                bools = np.ones(len(ai), dtype=bool)
            elif op in _BOOL_IF_ARGS:
                bools = isb[ai] & isb[bi]
            else:
                bools = np.zeros(len(ai), dtype=bool)
            kids = np.stack([ai, bi, np.zeros_like(ai)], axis=1)
            self._append(block, np.int16(_OPID[op]), kids, bools, sa + sb + 1)
            yield

    def _grow_ite(self, s, isb, isc, V):
        opid = np.int16(_OPID["ite"])
        for sc in range(s):
            lc, hc = self.size_ranges[sc]
            conds = np.arange(lc, hc)
            conds = conds[(isb[conds] | self.any_condition) & ~isc[conds]]
            for sa in range(s - sc):
                sb = s - 1 - sc - sa
                la, ha = self.size_ranges[sa]
                lb, hb = self.size_ranges[sb]
                if ha == la or hb == lb or not len(conds):
                    continue
                nb = hb - lb
                step = max(1, _CHUNK // max(1, nb * self.npts))
                for c in conds.tolist():
                    if self._full(s):
                        return
                    cm = V[c] != 0
                    for a0 in range(la, ha, step):
                        a1 = min(ha, a0 + step)
                        ai, bi = np.meshgrid(np.arange(a0, a1), np.arange(lb, hb), indexing="ij")
                        ai, bi = ai.ravel(), bi.ravel()
                        sel = ai != bi
                        ai, bi = ai[sel], bi[sel]
                        if not len(ai):
                            continue
                        block = np.where(cm[None, :], V[ai], V[bi])
                        kids = np.stack([np.full_like(ai, c), ai, bi], axis=1)
                        self._append(block, opid, kids, isb[ai] & isb[bi], s)
                        yield

    # ------------------------------------------------------------ extraction

    def program(self, t: int) -> LProgram:
        return self.program_multi([t])

    def program_multi(self, terms) -> LProgram:
        """One L program computing all ``terms`` (shared subterms computed once)."""
        instrs: list[LInstr] = []
        reg: dict[int, object] = {}

        def emit(t):
            if t in reg:
                return reg[t]
            op = int(self.op[t])
            if op == IN:
                r = Input(int(self.kids[t, 0]))
            elif op == CONST:
                r = Const(int(self.kids[t, 0]))
            else:
                args = tuple(emit(int(k)) for k in self.kids[t, :ARITY[OPCODES[op]]])
                instrs.append(LInstr(OPCODES[op], args))
                r = Reg(len(instrs) - 1)
            reg[t] = r
            return r

        outs = tuple(emit(int(t)) for t in terms)
        return LProgram(self.width, self.arity, tuple(instrs), outs)

    def describe(self, t: int) -> str:
        op = int(self.op[t])
        if op == IN:
            return f"in{self.kids[t, 0]}"
        if op == CONST:
            return str(self.kids[t, 0])
        kids = self.kids[t, :ARITY[OPCODES[op]]]
        return f"({OPCODES[op]} " + " ".join(self.describe(int(k)) for k in kids) + ")"

    def values_at(self, t: int, pts: np.ndarray) -> np.ndarray:
        """Evaluate term ``t`` on fresh points (not necessarily in the pool's sample)."""
        from ..llang import interpret_vec

        pts = np.asarray(pts, dtype=np.uint64).reshape(-1, self.arity) & self.m
        return interpret_vec(self.program(t), [pts[:, i] for i in range(self.arity)])[0] & self.m
