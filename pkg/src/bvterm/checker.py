"""Independent proof checking and the brute-force ground-truth oracle.

:func:`validate_proof` rebuilds the verification condition for every
obligation in an artifact and decides it with one SAT call.
:func:`oracle_decide` explores the explicit graph of (control node, store)
pairs at tiny widths and looks for a reachable cycle.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._jit import njit
from .encoder import Candidate, Obligation, ShapeError, build_vc, entry_for
from .loops import LoopNest, build_cfg, replay
from .proof import NONTERMINATING, TERMINATING, ArtifactError, ProofArtifact
from .satcore import check
from .satcore import expr as bx
from .semantics import evaluate_vec
from .words import mask


class ShapeMismatch(ValueError):
    """The artifact does not fit the program (wrong loops, holes, widths)."""


@dataclass
class CheckReport:
    valid: bool
    reason: str = ""


def _obligations(nest: LoopNest, art: ProofArtifact) -> list[tuple[Obligation, Candidate]]:
    if art.width != nest.width:
        raise ShapeMismatch(f"proof width {art.width} differs from program width {nest.width}")
    term = art.verdict == TERMINATING
    if term:
        got = sorted(lp.loop for lp in art.loops)
        if got != list(range(len(nest.loops))):
            raise ShapeMismatch(f"termination proof covers loops {got}, program has {len(nest.loops)}")
    elif art.verdict == NONTERMINATING:
        if len(art.loops) != 1 or not 0 <= art.loops[0].loop < len(nest.loops):
            raise ShapeMismatch("non-termination proof must name exactly one existing loop")
        if art.x0 is None:
            raise ShapeMismatch("non-termination proof lacks x0")
    else:
        raise ShapeMismatch(f"cannot check verdict {art.verdict!r}")

    out = []
    invariants: dict[int, object] = {}
    for lp in sorted(art.loops, key=lambda l: l.loop):
        loop = nest.loops[lp.loop]
        if term != (lp.kind in ("UT", "CT", "NestedTerm")):
            raise ShapeMismatch(f"obligation {lp.kind} does not match verdict {art.verdict}")
        ranks = 1
        for name in ("R", "R1"):
            if name in lp.holes:
                ranks = len(lp.holes[name].outputs)
        try:
            ob = Obligation(lp.kind, nest, loop, entry_for(nest, lp.loop, invariants), ranks=ranks)
            cand = Candidate(dict(lp.holes), art.x0)
            ob.check_shape(cand)
        except ShapeError as exc:
            raise ShapeMismatch(str(exc)) from exc
        extra = set(lp.holes) - set(ob.hole_shapes())
        if extra:
            raise ShapeMismatch(f"unexpected holes {sorted(extra)} for {lp.kind}")
        if lp.kind == "CT":
            invariants[lp.loop] = lp.holes["W"]
        out.append((ob, cand))
    if not term:
        for d in nest.decls:
            v = art.x0[d.name]
            if not isinstance(v, int) or not 0 <= v <= mask(d.width):
                raise ShapeMismatch(f"x0[{d.name}] = {v!r} does not fit {d.width} bits")
    return out


def _reaches_x0(nest: LoopNest, art: ProofArtifact) -> bool:
    k = art.loops[0].loop
    if art.trace is None:
        # without a trace, x0 must itself be a possible program start
        return k == 0 and (not nest.blocks or nest.blocks[0].is_identity)
    cfg = build_cfg(nest)
    head = cfg.heads[id(nest.loops[k])]
    t = art.trace
    for i, (node, state) in enumerate(replay(nest, t.init, t.choices, max_steps=1 << 22, cfg=cfg)):
        if i == t.visits:
            return node == head and all(state[d.name] == art.x0[d.name] for d in nest.decls)
    return False


def check_proof(nest: LoopNest, art: ProofArtifact, seed: int = 0) -> CheckReport:
    """Validate ``art``; raises :class:`ShapeMismatch` when it does not fit ``nest``."""
    obs = _obligations(nest, art)
    if art.verdict == NONTERMINATING and not _reaches_x0(nest, art):
        return CheckReport(False, "trace does not reach x0 at the loop head")
    formula = bx.disj(*(build_vc(ob, cand).formula for ob, cand in obs))
    res = check(formula, seed=seed)
    if res.unsat:
        return CheckReport(True, "proof valid")
    return CheckReport(False, "verification condition has a counterexample")


def validate_proof(nest: LoopNest, art: ProofArtifact) -> bool:
    return check_proof(nest, art).valid


# ---------------------------------------------------------------- oracle


class OracleLimit(ValueError):
    """The program is too large for explicit exploration."""


@dataclass
class OracleResult:
    verdict: str
    cycle: list = field(default_factory=list)  # (head node, store) along a reachable cycle
    max_trace: int = 0  # most loop-head visits on any run (terminating programs)


@njit
def _explore(indptr, indices, starts, is_head):
    n = len(indptr) - 1
    color = np.zeros(n, dtype=np.int8)
    longest = np.zeros(n, dtype=np.int64)
    pos = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    edge = np.empty(n, dtype=np.int64)
    best = 0
    for s in starts:
        if color[s] == 0:
            sp = 0
            stack[0] = s
            edge[0] = indptr[s]
            color[s] = 1
            pos[s] = 0
            sp = 1
            while sp > 0:
                v = stack[sp - 1]
                e = edge[sp - 1]
                if e < indptr[v + 1]:
                    edge[sp - 1] = e + 1
                    w = indices[e]
                    if color[w] == 1:
                        return True, stack[pos[w]:sp].copy(), 0
                    if color[w] == 0:
                        color[w] = 1
                        pos[w] = sp
                        stack[sp] = w
                        edge[sp] = indptr[w]
                        sp += 1
                else:
                    m = 0
                    for j in range(indptr[v], indptr[v + 1]):
                        if longest[indices[j]] > m:
                            m = longest[indices[j]]
                    longest[v] = m + is_head[v]
                    color[v] = 2
                    pos[v] = -1
                    sp -= 1
        if longest[s] > best:
            best = longest[s]
    return False, np.empty(0, dtype=np.int64), best


def oracle_decide(nest: LoopNest, width_cap: int = 4, vars_cap: int = 3,
                  max_states: int = 1 << 12, max_inputs: int = 1 << 12) -> OracleResult:
    """Exact verdict by explicit search; nondeterminism is resolved angelically."""
    decls = nest.decls
    if len(decls) > vars_cap or any(d.width > width_cap for d in decls):
        raise OracleLimit(f"oracle limited to {vars_cap} variables of at most {width_cap} bits")
    widths = [d.width for d in decls]
    nstores = 1 << sum(widths)
    if nstores > max_states:
        raise OracleLimit(f"{nstores} stores exceed the cap of {max_states}")
    cfg = build_cfg(nest)
    # store index -> variable values (mixed radix, first variable least significant)
    idx = np.arange(nstores, dtype=np.uint64)
    cols, shift = [], 0
    for w in widths:
        cols.append((idx >> np.uint64(shift)) & np.uint64(mask(w)))
        shift += w
    env = {d.name: c for d, c in zip(decls, cols)}

    def index_of(values):
        out = np.zeros(len(values[0]) if values else 1, dtype=np.int64)
        sh = 0
        for v, w in zip(values, widths):
            out |= (np.asarray(v, dtype=np.int64) & mask(w)) << sh
            sh += w
        return out

    nn = len(cfg.nodes)
    succ = [[] for _ in range(nn)]  # per cfg node: list of (target node array, target store array)
    is_head = np.zeros(nn * nstores, dtype=np.int64)
    for i, node in enumerate(cfg.nodes):
        if node.kind == "exit":
            continue
        if node.kind == "head":
            is_head[i * nstores:(i + 1) * nstores] = 1
            g = evaluate_vec([node.guard], env)[0] != 0
            tgt = np.where(g, node.body, node.next).astype(np.int64)
            succ[i].append((tgt, np.arange(nstores, dtype=np.int64)))
            continue
        names = list(node.rel.inputs)
        space = 1
        for n in names:
            space *= 1 << node.rel.inputs[n]
        if space > max_inputs:
            raise OracleLimit(f"{space} nondet valuations exceed the cap of {max_inputs}")
        exprs = node.rel.successor_exprs(decls)
        for combo in itertools.product(*(range(1 << node.rel.inputs[n]) for n in names)):
            e = dict(env)
            for n, v in zip(names, combo):
                e[n] = np.full(nstores, v, dtype=np.uint64)
            outs = [np.broadcast_to(o, nstores) for o in evaluate_vec(exprs, e)]
            succ[i].append((np.full(nstores, node.next, dtype=np.int64), index_of(outs)))

    # CSR over graph ids node * nstores + store
    src_all, dst_all = [], []
    for i in range(nn):
        for tgt_node, tgt_store in succ[i]:
            src_all.append(i * nstores + np.arange(nstores, dtype=np.int64))
            dst_all.append(tgt_node * nstores + tgt_store)
    total = nn * nstores
    if src_all:
        src = np.concatenate(src_all)
        dst = np.concatenate(dst_all)
        pairs = np.unique(np.stack([src, dst], axis=1), axis=0)
        src, dst = pairs[:, 0], pairs[:, 1]
    else:
        src = dst = np.zeros(0, dtype=np.int64)
    indptr = np.zeros(total + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    starts = cfg.entry * nstores + np.arange(nstores, dtype=np.int64)
    cyclic, cyc, longest = _explore(indptr, dst.astype(np.int64), starts, is_head)

    def decode(gid):
        node, store = divmod(int(gid), nstores)
        return node, {d.name: int(c[store]) for d, c in zip(decls, cols)}

    if cyclic:
        cycle = [decode(g) for g in cyc if is_head[g]]
        return OracleResult(NONTERMINATING, cycle, 0)
    return OracleResult(TERMINATING, [], int(longest))
