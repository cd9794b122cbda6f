"""Run the termination and non-termination searches side by side.

Each side is a generator that yields after every unit of work, so the two
can share one thread: the side that has used less time goes next.
``threads=True`` runs them concurrently instead and cancels the loser. Whatever is found is re-checked
by :func:`bvterm.checker.check_proof` before it is reported.
"""
from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..checker import check_proof
from ..encoder import Obligation, entry_for
from ..llang import Const, Input, LProgram
from ..loops import LoopNest
from ..proof import NONTERMINATING, TERMINATING, UNKNOWN, LoopProof, ProofArtifact, Trace
from ..satcore import CancelToken
from ..semantics import is_deterministic
from ..words import mask
from .cegis import (NestedRankCegis, NestedRecurrenceCegis, RankCegis, RecurrenceCegis,
                    harvest_constants)
from .lasso import Simulator, corner_values, sample_states


@dataclass
class Budget:
    timeout: float = 60.0  # seconds per side
    max_size: int = 8
    max_ranks: Optional[int] = None  # lexicographic components; default one per variable
    seed: int = 0
    threads: bool = False


@dataclass
class Verdict:
    status: str
    artifact: Optional[ProofArtifact] = None
    reason: str = ""
    stats: dict = field(default_factory=dict)


class Unsupported(Exception):
    pass


def _nested_ok(loop) -> bool:
    return len(loop.children) == 1 and loop.inner().is_simple


class TermSide:
    name = "term"

    def __init__(self, nest: LoopNest, budget: Budget, cancel: CancelToken):
        self.nest, self.budget, self.cancel = nest, budget, cancel
        self.constants = harvest_constants(nest, nest.width)
        self.iterations = 0
        self.searchers = []

    def run(self):
        nest, b = self.nest, self.budget
        loops, invariants = [], {}
        for k, loop in enumerate(nest.loops):
            entry = entry_for(nest, k, invariants)
            if loop.is_simple:
                kind = "UT" if entry.trivial else "CT"
                cls = RankCegis
            elif _nested_ok(loop):
                kind, cls = "NestedTerm", NestedRankCegis
            else:
                raise Unsupported("termination proofs cover loops nested at most two deep")
            ob = Obligation(kind, nest, loop, entry)
            s = cls(ob, self.constants, max_size=b.max_size, max_ranks=b.max_ranks,
                    cancel=self.cancel, seed=b.seed)
            self.searchers.append(s)
            cand = yield from s.run()
            self.iterations += s.iterations
            if cand is None:
                return None
            holes = dict(cand.holes)
            loops.append(LoopProof(k, kind, holes))
            if kind == "CT":
                invariants[k] = holes["W"]
        return ProofArtifact(TERMINATING, nest.width, loops)


def _policies(nest: LoopNest) -> list:
    w = nest.width
    out = [("const", 0), ("const", 1), ("const", mask(w)), ("const", 2), ("const", mask(w) >> 1)]
    out += [("var", j) for j in range(len(nest.decls))]
    return out


def _skolem(nest: LoopNest, loop, policy) -> LProgram:
    n = len(nest.decls)
    outs = []
    for _ in loop.body.inputs:
        outs.append(Const(policy[1] & mask(nest.width)) if policy[0] == "const" else Input(policy[1]))
    return LProgram(nest.width, n, (), tuple(outs))


class NontermSide:
    name = "nonterm"
    lanes = 512

    def __init__(self, nest: LoopNest, budget: Budget, cancel: CancelToken):
        self.nest, self.budget, self.cancel = nest, budget, cancel
        self.constants = harvest_constants(nest, nest.width)
        self.iterations = 0
        self.sim = Simulator(nest) if nest.loops else None
        self.head_of = {}  # cfg head node -> (top loop index, level)
        if self.sim:
            for k, loop in enumerate(nest.loops):
                self.head_of[self.sim.cfg.heads[id(loop)]] = (k, 0)
                for c in loop.children:
                    self.head_of[self.sim.cfg.heads[id(c)]] = (k, 1)
        self._det = {}

    def _deterministic(self, rel) -> bool:
        key = id(rel)
        if key not in self._det:
            self._det[key] = is_deterministic(rel, self.nest.decls)
        return self._det[key]

    def run(self):
        nest, b = self.nest, self.budget
        if not nest.loops:
            return None
        rng = np.random.default_rng(b.seed)
        policies = _policies(nest)
        has_inputs = any(n.kind == "block" and n.rel.inputs for n in self.sim.cfg.nodes)
        if not has_inputs:
            policies = policies[:1]
        tried = set()
        steps = 256
        while True:
            init = sample_states(nest.decls, rng, self.lanes)
            lane_policy = np.arange(len(init)) % len(policies)
            lassos = self.sim.find_lassos(init, policies, lane_policy, steps, limit=16)
            yield
            lassos.sort(key=self._rank_lasso)
            for l in lassos:
                key = frozenset((n, tuple(sorted(s.items()))) for n, s, _ in l.cycle)
                if key in tried:
                    continue
                tried.add(key)
                art = yield from self._from_lasso(l)
                if art is not None:
                    return art
            steps = min(steps * 2, 1 << 15)

    def _rank_lasso(self, l):
        """Short cycles first, then those whose unchanging variables sit at corner values."""
        odd = 0
        for d in self.nest.decls:
            vals = {st[d.name] for _, st, _ in l.cycle}
            if len(vals) == 1 and vals.pop() not in corner_values(d.width):
                odd += 1
        return (len(l.cycle), odd, len(l.stem))

    def _from_lasso(self, l):
        nest, b = self.nest, self.budget
        names = [d.name for d in nest.decls]
        row = lambda s: tuple(s[n] for n in names)  # noqa: E731
        visits = l.stem + l.cycle
        levels = {self.head_of[n] for n, _, _ in l.cycle}
        k = min(t for t, _ in levels)
        loop = nest.loops[k]
        entry = entry_for(nest, k, {})
        kw = dict(max_size=b.max_size, cancel=self.cancel, seed=b.seed)
        if loop.is_simple:
            det = self._deterministic(loop.body)
            kind = "CNT" if det else "SNT"
            first = len(l.stem)
            x0 = l.cycle[0][1]
            ob = Obligation(kind, nest, loop, entry)
            skolem = None if det else _skolem(nest, loop, l.policy)
            s = RecurrenceCegis(ob, self.constants, [row(st) for _, st, _ in l.cycle], dict(x0),
                                skolem=skolem, **kw)
        elif _nested_ok(loop):
            outer = self.sim.cfg.heads[id(loop)]
            inner = self.sim.cfg.heads[id(loop.inner())]
            on_cycle = [i for i, (n, _, _) in enumerate(l.cycle) if n == outer]
            if on_cycle:
                first = len(l.stem) + on_cycle[0]
                pos1 = [row(st) for n, st, _ in l.cycle if n == outer]
                pos2 = [row(st) for n, st, _ in l.cycle if n == inner]
            else:
                before = [i for i, (n, _, _) in enumerate(l.stem) if n == outer]
                if not before:
                    return None
                first = before[-1]
                pos1 = [row(l.stem[first][1])]
                pos2 = [row(st) for n, st, _ in visits[first:] if n == inner]
            x0 = visits[first][1]
            ob = Obligation("NestedNonterm", nest, loop, entry)
            s = NestedRecurrenceCegis(ob, self.constants, pos1, pos2, dict(x0), **kw)
        else:
            return None
        cand = yield from s.run()
        self.iterations += s.iterations
        if cand is None:
            return None
        trace = Trace(dict(l.init), list(l.choices[: visits[first][2]]), first)
        return ProofArtifact(NONTERMINATING, nest.width, [LoopProof(k, ob.kind, dict(cand.holes))],
                             dict(cand.x0), trace)


def _finish(nest, art, side, t0, iterations) -> Optional[Verdict]:
    art.stats = {"time": round(time.perf_counter() - t0, 3), "iterations": iterations, "side": side}
    report = check_proof(nest, art)
    if not report.valid:
        return None
    return Verdict(art.verdict, art, report.reason, dict(art.stats))


def solve_gt(nest: LoopNest, budget: Budget | None = None, mode: str = "auto") -> Verdict:
    """Decide termination of ``nest`` by running both searches until one succeeds.

    ``mode`` is ``"auto"`` (both sides), ``"terminate"`` or ``"nonterminate"``.
    """
    budget = budget or Budget()
    if mode not in ("auto", "terminate", "nonterminate"):
        raise ValueError(f"unknown mode {mode!r}")
    cancel = CancelToken()
    sides = []
    if mode in ("auto", "terminate"):
        sides.append(TermSide(nest, budget, cancel))
    if mode in ("auto", "nonterminate"):
        sides.append(NontermSide(nest, budget, cancel))
    t0 = time.perf_counter()
    if budget.threads:
        return _threaded(nest, sides, budget, cancel, t0)
    gens = {s.name: (s, s.run()) for s in sides}
    spent = {s.name: 0.0 for s in sides}
    notes = []
    while gens:
        # advance the side that has used the least time so far
        name = min(gens, key=spent.__getitem__)
        side, gen = gens[name]
        t = time.perf_counter()
        try:
            next(gen)
        except StopIteration as stop:
            del gens[name]
            art = stop.value
            if art is not None:
                v = _finish(nest, art, name, t0, side.iterations)
                if v is not None:
                    return v
                notes.append(f"{name}: candidate failed the final check")
            else:
                notes.append(f"{name}: size bound exhausted")
            continue
        except Unsupported as exc:
            del gens[name]
            notes.append(f"{name}: {exc}")
            continue
        spent[name] += time.perf_counter() - t
        if spent[name] > budget.timeout:
            del gens[name]
            gen.close()
            notes.append(f"{name}: timed out")
    return Verdict(UNKNOWN, None, "; ".join(notes),
                   {"time": round(time.perf_counter() - t0, 3)})


def _threaded(nest, sides, budget, cancel, t0) -> Verdict:
    results: queue.Queue = queue.Queue()
    stop = threading.Event()

    def work(side):
        gen = side.run()
        deadline = time.perf_counter() + budget.timeout
        try:
            while True:
                if stop.is_set():
                    gen.close()
                    results.put((side, None, "cancelled"))
                    return
                if time.perf_counter() > deadline:
                    gen.close()
                    results.put((side, None, "timed out"))
                    return
                next(gen)
        except StopIteration as s:
            results.put((side, s.value, "size bound exhausted"))
        except Unsupported as exc:
            results.put((side, None, str(exc)))
        except Exception as exc:  # solver cancelled from the other thread
            results.put((side, None, f"stopped: {exc}"))

    threads = [threading.Thread(target=work, args=(s,), daemon=True) for s in sides]
    for t in threads:
        t.start()
    notes = []
    for _ in sides:
        side, art, note = results.get()
        if art is not None:
            v = _finish(nest, art, side.name, t0, side.iterations)
            if v is not None:
                stop.set()
                cancel.cancel()
                for t in threads:
                    t.join()
                return v
            note = "candidate failed the final check"
        notes.append(f"{side.name}: {note}")
    return Verdict(UNKNOWN, None, "; ".join(notes), {"time": round(time.perf_counter() - t0, 3)})
