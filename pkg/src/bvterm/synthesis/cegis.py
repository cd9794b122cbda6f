"""Counterexample-guided search for the holes of one obligation.

Each searcher keeps the counterexamples learned so far as indices into a
table of concrete states, enumerates terms bottom-up over those states, and
proposes the first candidate that satisfies every recorded constraint. The
candidate is then checked with one SAT call; a model is decoded into new
constraints. ``run()`` is a generator that yields between units of work so
that a driver can interleave several searches; its return value is the
verified :class:`Candidate` or ``None`` when the size bound is exhausted.
"""
from __future__ import annotations

import inspect

import numpy as np

from ..encoder import VC, Candidate, Obligation, build_vc
from ..llang import LInstr, LProgram, Reg, default_constants
from ..satcore import check
from ..satcore import expr as bx
from ..semantics import evaluate_many
from ..words import mask
from .pool import TermPool
from .search import RankSearch, pack


class StateTable:
    """Distinct concrete states (tuples in declaration order) and their lifted words."""

    def __init__(self, signed: list[bool], widths: list[int], width: int):
        self.signed = signed
        self.widths = widths
        self.width = width
        self.index: dict[tuple, int] = {}
        self.rows: list[tuple] = []

    def add(self, row: tuple) -> int:
        row = tuple(int(v) for v in row)
        i = self.index.get(row)
        if i is None:
            i = self.index[row] = len(self.rows)
            self.rows.append(row)
        return i

    def __len__(self):
        return len(self.rows)

    def lifted(self) -> np.ndarray:
        out = np.zeros((len(self.rows), len(self.widths)), dtype=np.uint64)
        if not self.rows:
            return out
        raw = np.array(self.rows, dtype=np.uint64).reshape(len(self.rows), -1)
        fill = np.uint64(mask(self.width))
        for j, (s, w) in enumerate(zip(self.signed, self.widths)):
            col = raw[:, j]
            if s and w < self.width:
                neg = (col >> np.uint64(w - 1)) & np.uint64(1)
                col = col | (neg * (fill ^ np.uint64(mask(w))))
            out[:, j] = col
        return out


def _repeat(widths, times):
    return list(widths) * times


class PoolCache:
    """A term pool over a state table.

    New table rows are appended to the existing pool as extra points; the
    pool is rebuilt from scratch only on request (see ``stale``).
    """

    def __init__(self, table: StateTable, arity: int, constants):
        self.table = table
        self.arity = arity
        self.constants = constants
        self.pool: TermPool | None = None
        self._rows = 0

    @property
    def stale(self) -> bool:
        return self.pool is not None and self.pool.stale

    def reset(self):
        self.pool = None

    def get(self, size: int):
        """Yields while growing; afterwards ``self.pool`` covers ``size``."""
        n = len(self.table)
        if self.pool is None or (self._rows == 0 and n):
            pts = self.table.lifted()
            if not n:
                pts = np.zeros((1, self.arity), dtype=np.uint64)
            self.pool = TermPool(self.table.width, self.arity, pts, self.constants)
            self._rows = n
        elif self._rows != n:
            self.pool.add_points(self.table.lifted()[self._rows:])
            self._rows = n
        if size > self.pool.max_size:
            yield from self.pool.grow_steps(size)

    def rows(self, size: int) -> int:
        return self.pool.size_ranges[min(size, self.pool.max_size)][1]


def harvest_constants(nest, width: int) -> list[int]:
    """Canonical constants plus every literal of the program (both extensions)."""
    out = set(default_constants(width))
    roots = []
    for l in _all_loops(nest.loops):
        roots.append(l.guard)
        for rel in (l.body, *l.posts):
            roots.extend(rel.updates.values())
    for rel in (*nest.blocks, nest.tail):
        roots.extend(rel.updates.values())
    for node in bx.topo(roots):
        if node.op == "const" and node.width > 1:
            v = node.val
            out.add(v & mask(width))
            if v >> (node.width - 1):
                out.add((v | (mask(width) ^ mask(node.width))) & mask(width))
    return sorted(out)


def _all_loops(loops):
    for l in loops:
        yield l
        yield from _all_loops(l.children)


class Searcher:
    """Shared CEGIS skeleton; subclasses define pools, proposal and learning."""

    def __init__(self, ob: Obligation, constants, max_size: int = 8, max_ranks: int | None = None,
                 cancel=None, seed: int = 0):
        self.ob = ob
        self.decls = ob.decls
        self.width = ob.nest.width
        self.n = len(self.decls)
        self.constants = constants
        self.max_size = max_size
        self.max_ranks = self.n if max_ranks is None else max_ranks
        self.cancel = cancel
        self.seed = seed
        self.table = StateTable([d.signed for d in self.decls], [d.width for d in self.decls], self.width)
        self.iterations = 0
        self.size = 0
        self.history: list[Candidate] = []  # every candidate sent to the SAT check

    # -- subclass hooks
    def ranks_at(self, s: int) -> int:
        """Lexicographic components allowed at size ``s``: more terms before longer tuples."""
        return max(1, min(self.max_ranks, 1 + s // 2))

    def pools(self) -> list[PoolCache]:
        raise NotImplementedError

    def propose(self, s: int) -> Candidate | None:
        raise NotImplementedError

    def learn(self, vc: VC, env: dict, violated: list[str]) -> bool:
        raise NotImplementedError

    # -- driver
    def run(self):
        s = 0
        while s <= self.max_size:
            self.size = s
            for pc in self.pools():
                yield from pc.get(s)
            cand = self.propose(s)
            if inspect.isgenerator(cand):
                cand = yield from cand
            if cand is None:
                stale = [pc for pc in self.pools() if pc.stale]
                if stale:
                    # deduplication predates some points; retry this size on a fresh pool
                    for pc in stale:
                        pc.reset()
                    yield
                    continue
                s += 1
                yield
                continue
            self.iterations += 1
            self.history.append(cand)
            vc = build_vc(self.ob, cand)
            res = check(vc.formula, seed=self.seed, cancel=self.cancel)
            yield
            if res.unsat:
                return cand
            env, violated = self.decode(vc, res.model)
            if not self.learn(vc, env, violated):
                raise AssertionError(f"counterexample repeated for {self.ob.kind}: {violated}")
        return None

    def decode(self, vc: VC, model) -> tuple[dict, list[str]]:
        free = bx.free_vars([e for _, e in vc.parts] + [e for st in vc.states.values() for e in st])
        env = {name: model.get(name, 0) for name in free}
        vals = evaluate_many([e for _, e in vc.parts], env)
        return env, [name for (name, _), v in zip(vc.parts, vals) if v]

    def state_of(self, vc: VC, env: dict, label: str) -> tuple:
        return tuple(evaluate_many(vc.states[label], env))

    def add(self, row: tuple) -> int:
        return self.table.add(row)


def _ordered_predicates(pool: TermPool, nrows: int, ok: np.ndarray) -> np.ndarray:
    ids = np.nonzero(ok[:nrows])[0]
    # constant "true" first, then by size
    const_true = (pool.op[ids] == -2) & (pool.kids[ids, 0] != 0)
    return np.concatenate([ids[const_true], ids[~const_true]])


class RankCegis(Searcher):
    """UT and CT: a rank tuple ``R`` and, for CT, a supporting invariant ``W``."""

    w_tries = 4000
    lex_w_tries = 24

    def __init__(self, ob, constants, **kw):
        super().__init__(ob, constants, **kw)
        self.pc = PoolCache(self.table, self.n, constants)
        self.pairs: list[tuple[int, int]] = []
        self.pair_set: set = set()
        self.wpos: set[int] = set()

    def pools(self):
        return [self.pc]

    def propose(self, s):
        pool = self.pc.pool
        nrows = self.pc.rows(s)
        V = pool.vals[:nrows]
        pre = np.array([p for p, _ in self.pairs], dtype=np.int64)
        post = np.array([q for _, q in self.pairs], dtype=np.int64)
        rs = RankSearch(V, pre, post)
        full = pack(np.ones((1, len(pre)), dtype=bool))[0]
        if self.ob.kind == "UT":
            ids = rs.find(full, self.ranks_at(s))
            if ids is None:
                return None
            return Candidate({"R": pool.program_multi(ids)})
        T = V != 0
        ok = np.ones(nrows, dtype=bool)
        if self.wpos:
            ok &= T[:, sorted(self.wpos)].all(axis=1)
        if len(pre):
            ok &= (~T[:, pre] | T[:, post]).all(axis=1)
        seen = set()
        tried = 0
        for w in _ordered_predicates(pool, nrows, ok).tolist():
            req = T[w, pre]
            sig = req.tobytes()
            if sig in seen:
                continue
            seen.add(sig)
            tried += 1
            if tried % 32 == 0:
                yield
            m = self.ranks_at(s) if tried <= self.lex_w_tries else 1
            ids = rs.find(pack(req[None, :])[0], m)
            if ids is not None:
                return Candidate({"R": pool.program_multi(ids), "W": pool.program(w)})
            if tried >= self.w_tries:
                break
        return None

    def learn(self, vc, env, violated):
        new = False
        if "step" in violated:
            pair = (self.add(self.state_of(vc, env, "x")), self.add(self.state_of(vc, env, "x'")))
            if pair not in self.pair_set:
                self.pair_set.add(pair)
                self.pairs.append(pair)
                new = True
        if "base" in violated:
            i = self.add(self.state_of(vc, env, "x"))
            new |= i not in self.wpos
            self.wpos.add(i)
        return new


class NestedRankCegis(Searcher):
    """Outer-loop summary ``To`` with ranks ``R1`` (outer) and ``R2`` (inner)."""

    to_tries = 4000
    lex_tries = 24

    def __init__(self, ob, constants, **kw):
        super().__init__(ob, constants, **kw)
        n = self.n
        self.pair_table = StateTable([d.signed for d in self.decls] * 2, [d.width for d in self.decls] * 2,
                                     self.width)
        self.pc = PoolCache(self.table, n, constants)
        self.ppc = PoolCache(self.pair_table, 2 * n, constants)
        self.seed_pos: set[int] = set()
        self.inner: list[tuple] = []  # (pair xy, pair xy', y, y')
        self.outer: list[tuple] = []  # (pair xy, x, z)
        self._seen: set = set()

    def pools(self):
        return [self.pc, self.ppc]

    def propose(self, s):
        pool, ppool = self.pc.pool, self.ppc.pool
        V = pool.vals[:self.pc.rows(s)]
        P = ppool.vals[:self.ppc.rows(s)] != 0
        inner = np.array(self.inner, dtype=np.int64).reshape(-1, 4)
        outer = np.array(self.outer, dtype=np.int64).reshape(-1, 3)
        ok = np.ones(len(P), dtype=bool)
        if self.seed_pos:
            ok &= P[:, sorted(self.seed_pos)].all(axis=1)
        if len(inner):
            ok &= (~P[:, inner[:, 0]] | P[:, inner[:, 1]]).all(axis=1)
        rs2 = RankSearch(V, inner[:, 2], inner[:, 3])
        rs1 = RankSearch(V, outer[:, 1], outer[:, 2])
        seen = set()
        tried = 0
        for t in _ordered_predicates(ppool, len(P), ok).tolist():
            req2 = P[t, inner[:, 0]]
            req1 = P[t, outer[:, 0]]
            sig = req2.tobytes() + b"|" + req1.tobytes()
            if sig in seen:
                continue
            seen.add(sig)
            tried += 1
            if tried % 32 == 0:
                yield
            m = self.ranks_at(s) if tried <= self.lex_tries else 1
            r2 = rs2.find(pack(req2[None, :])[0], m)
            if r2 is None:
                continue
            r1 = rs1.find(pack(req1[None, :])[0], m)
            if r1 is not None:
                return Candidate({"To": ppool.program(t), "R1": pool.program_multi(r1),
                                  "R2": pool.program_multi(r2)})
            if tried >= self.to_tries:
                break
        return None

    def learn(self, vc, env, violated):
        st = {k: self.state_of(vc, env, k) for k in vc.states}
        before = (len(self.seed_pos), len(self._seen))
        if "seed" in violated:
            self.seed_pos.add(self.pair_table.add(st["x"] + st["y0"]))
        if "inner" in violated:
            item = (self.pair_table.add(st["x"] + st["y"]), self.pair_table.add(st["x"] + st["y'"]),
                    self.add(st["y"]), self.add(st["y'"]))
            if ("i", item) not in self._seen:
                self._seen.add(("i", item))
                self.inner.append(item)
        if "outer" in violated:
            item = (self.pair_table.add(st["x"] + st["y"]), self.add(st["x"]), self.add(st["z"]))
            if ("o", item) not in self._seen:
                self._seen.add(("o", item))
                self.outer.append(item)
        return (len(self.seed_pos), len(self._seen)) != before


def conjoin(pool: TermPool, atoms) -> LProgram:
    """One predicate: the conjunction of boolean pool terms."""
    p = pool.program_multi(atoms)
    instrs = list(p.instrs)
    acc = p.outputs[0]
    for o in p.outputs[1:]:
        instrs.append(LInstr("and", (acc, o)))
        acc = Reg(len(instrs) - 1)
    return LProgram(p.width, p.arity, tuple(instrs), (acc,))


def select_conjunction(T: np.ndarray, neg, impl_a, impl_b) -> list[int] | None:
    """Rows of ``T`` (atoms x points) whose conjunction rejects ``neg`` and is closed under
    the pairs ``impl_a[i] -> impl_b[i]``; ``None`` if no subset works.

    The largest closed subset is computed first (dropping atoms that break a
    pair, as in Houdini); if even that admits a negative, no subset can
    succeed. Otherwise atoms are picked greedily from it.
    """
    k, npts = T.shape
    live = np.ones(k, dtype=bool)
    neg = np.asarray(sorted(neg), dtype=np.int64)
    while True:
        inside = T[live].all(axis=0) if live.any() else np.ones(npts, dtype=bool)
        bad = inside[impl_a] & ~inside[impl_b]
        if not bad.any():
            break
        live &= T[:, impl_b[bad]].all(axis=1)
    if len(neg) and inside[neg].any():
        return None
    ids = np.flatnonzero(live)
    chosen: list[int] = []
    cur = np.ones(npts, dtype=bool)
    while True:
        must = [int(n) for n in neg if cur[n]]
        bad = cur[impl_a] & ~cur[impl_b]
        must.extend(int(a) for a in np.unique(impl_a[bad]))
        if not must:
            return chosen
        score = (~T[ids][:, must]).sum(axis=1)
        best = int(ids[int(np.argmax(score))])
        chosen.append(best)
        cur &= T[best]


class RecurrenceCegis(Searcher):
    """CNT and SNT: a recurrence set ``N`` containing known cycle states.

    For SNT the Skolem function ``C`` is fixed up front (the policy that
    produced the cycle), so only ``N`` is searched. When no single term of
    the current size fits, a conjunction of small boolean terms is tried.
    """

    atom_size = 2
    max_atoms = 50_000

    def __init__(self, ob, constants, positives, x0, skolem: LProgram | None = None, **kw):
        super().__init__(ob, constants, **kw)
        self.pos = {self.add(p) for p in positives}
        lifted = self.table.lifted()[sorted(self.pos)]
        fixed = [int(col[0]) for col in lifted.T if (col == col[0]).all()]
        self.constants = sorted(set(constants) | set(fixed))
        self.pc = PoolCache(self.table, self.n, self.constants)
        self.neg: set[int] = set()
        self.impl: set[tuple[int, int]] = set()
        self.x0 = x0
        self.skolem = skolem

    def pools(self):
        return [self.pc]

    def _holes(self, pool, t):
        return self._holes_prog(pool.program(t))

    def _holes_prog(self, n: LProgram):
        holes = {"N": n}
        if self.skolem is not None:
            holes["C"] = self.skolem
        return holes

    def propose(self, s):
        pool = self.pc.pool
        T = pool.vals[:self.pc.rows(s)] != 0
        ok = T[:, sorted(self.pos)].all(axis=1)
        if self.neg:
            ok &= ~T[:, sorted(self.neg)].any(axis=1)
        if self.impl:
            a = np.array([p for p, _ in self.impl])
            b = np.array([q for _, q in self.impl])
            ok &= (~T[:, a] | T[:, b]).all(axis=1)
        ids = np.nonzero(ok)[0]
        if len(ids):
            return Candidate(self._holes(pool, int(ids[0])), self.x0)
        if s == 0:
            return None
        hi = pool.size_ranges[min(s, self.atom_size, pool.max_size)][1]
        atoms = np.flatnonzero(pool.is_bool[:hi] & T[:hi][:, sorted(self.pos)].all(axis=1))[: self.max_atoms]
        a = np.array([p for p, _ in self.impl], dtype=np.int64)
        b = np.array([q for _, q in self.impl], dtype=np.int64)
        pick = select_conjunction(T[atoms], self.neg, a, b)
        if not pick:
            return None
        return Candidate(self._holes_prog(conjoin(pool, [int(atoms[i]) for i in pick])), self.x0)

    def learn(self, vc, env, violated):
        before = (len(self.neg), len(self.impl))
        if "x0" in violated:
            raise AssertionError("seed state left the recurrence set")
        if "guard" in violated:
            self.neg.add(self.add(self.state_of(vc, env, "x")))
        for part in ("closed", "open"):
            if part in violated:
                self.impl.add((self.add(self.state_of(vc, env, "x")), self.add(self.state_of(vc, env, "x'"))))
        return (len(self.neg), len(self.impl)) != before


class NestedRecurrenceCegis(Searcher):
    """Outer recurrence set ``N1`` and inner set ``N2`` for a two-level nest."""

    n1_tries = 4000

    def __init__(self, ob, constants, pos1, pos2, x0, **kw):
        super().__init__(ob, constants, **kw)
        self.pc = PoolCache(self.table, self.n, constants)
        self.pos1 = {self.add(p) for p in pos1}
        self.pos2 = {self.add(p) for p in pos2}
        self.neg1: set[int] = set()
        self.enter: set = set()  # N1(a) -> N2(b)
        self.inner: set = set()  # N2(a) -> N2(b)
        self.exit: set = set()  # N2(a) -> N1(b)
        self.x0 = x0

    def pools(self):
        return [self.pc]

    @staticmethod
    def _arr(pairs):
        a = np.array([p for p, _ in pairs], dtype=np.int64)
        b = np.array([q for _, q in pairs], dtype=np.int64)
        return a, b

    def propose(self, s):
        pool = self.pc.pool
        T = pool.vals[:self.pc.rows(s)] != 0
        ok1 = T[:, sorted(self.pos1)].all(axis=1)
        if self.neg1:
            ok1 &= ~T[:, sorted(self.neg1)].any(axis=1)
        ok2 = T[:, sorted(self.pos2)].all(axis=1) if self.pos2 else np.ones(len(T), dtype=bool)
        if self.inner:
            a, b = self._arr(self.inner)
            ok2 &= (~T[:, a] | T[:, b]).all(axis=1)
        ea, eb = self._arr(self.enter)
        xa, xb = self._arr(self.exit)
        ids2 = np.nonzero(ok2)[0]
        if not len(ids2):
            return None
        T2 = T[ids2]
        seen = set()
        for i, n1 in enumerate(np.nonzero(ok1)[0][: self.n1_tries].tolist()):
            if i % 64 == 63:
                yield
            need = eb[T[n1, ea]] if len(ea) else ea
            forbid = xa[~T[n1, xb]] if len(xa) else xa
            sig = need.tobytes() + b"|" + forbid.tobytes()
            if sig in seen:
                continue
            seen.add(sig)
            ok = np.ones(len(ids2), dtype=bool)
            if len(need):
                ok &= T2[:, need].all(axis=1)
            if len(forbid):
                ok &= ~T2[:, forbid].any(axis=1)
            hit = np.nonzero(ok)[0]
            if len(hit):
                return Candidate({"N1": pool.program(n1), "N2": pool.program(int(ids2[hit[0]]))}, self.x0)
        return None

    def learn(self, vc, env, violated):
        st = {k: self.state_of(vc, env, k) for k in vc.states}
        before = (len(self.neg1), len(self.enter), len(self.inner), len(self.exit))
        if "x0" in violated:
            raise AssertionError("seed state left the recurrence set")
        if "guard" in violated:
            self.neg1.add(self.add(st["x"]))
        if "enter" in violated:
            self.enter.add((self.add(st["x"]), self.add(st["y"])))
        if "inner" in violated:
            self.inner.add((self.add(st["u"]), self.add(st["u'"])))
        if "exit" in violated:
            self.exit.add((self.add(st["u"]), self.add(st["v"])))
        return (len(self.neg1), len(self.enter), len(self.inner), len(self.exit)) != before
