"""Verification conditions with candidate programs plugged into the holes.

Every ``encode_*`` function returns the *negation* of an obligation body as a
quantifier-free bit-vector formula: unsatisfiable means the candidate is a
proof. :func:`build_vc` returns the same formula split into named violation
parts, plus the symbolic states that a model should be evaluated on, which
is what the synthesiser needs to turn a model into a counterexample.

Hole conventions (``n`` state variables, words of width ``W``):

``R``, ``R1``, ``R2``
    function of arity ``n``; ``m`` outputs give a lexicographic rank tuple
``W``, ``N``, ``N1``, ``N2``
    predicate of arity ``n`` (nonzero output means true)
``To``
    predicate of arity ``2n`` over (outer head state, inner state)
``C``
    function of arity ``n`` with one output per nondet input of the body
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from . import llang
from .llang import LProgram
from .loops import LoopNest, LoopSpec
from .satcore import expr as bx
from .satcore.expr import BvExpr
from .semantics import IDENTITY, TransitionRelation, VarDecl

KINDS = ("UT", "CT", "CNT", "SNT", "NestedTerm", "NestedNonterm")
TERM_KINDS = ("UT", "CT", "NestedTerm")


class ShapeError(ValueError):
    """A candidate does not fit the obligation's holes."""


@dataclass(frozen=True)
class Candidate:
    holes: Mapping[str, LProgram] = field(default_factory=dict)
    x0: Optional[Mapping[str, int]] = None

    def __getitem__(self, name):
        return self.holes[name]


@dataclass(frozen=True)
class Entry:
    """Over-approximation of the states in which a top-level loop is entered.

    States reachable by running ``prefix`` from an arbitrary store, where for
    loops after the first that store is an exit state of the previous loop:
    ``not guard and (invariant or previous entry)``. ``invariant`` is the
    previous loop's supporting invariant, or ``None`` when it has none.
    """

    prefix: TransitionRelation = IDENTITY
    prev: Optional["Entry"] = None
    prev_guard: Optional[BvExpr] = None
    prev_invariant: Optional[LProgram] = None

    @property
    def trivial(self) -> bool:
        return self.prev is None and self.prefix.is_identity


TRIVIAL_ENTRY = Entry()


@dataclass(frozen=True)
class Obligation:
    kind: str
    nest: LoopNest
    loop: LoopSpec
    entry: Entry = TRIVIAL_ENTRY
    ranks: int = 1  # lexicographic components (term kinds)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown obligation kind {self.kind!r}")
        if self.kind in ("NestedTerm", "NestedNonterm"):
            if len(self.loop.children) != 1 or not self.loop.inner().is_simple:
                raise ShapeError("nested obligations need exactly one simple inner loop")
        elif not self.loop.is_simple:
            raise ShapeError(f"{self.kind} applies to loops without nested loops")

    @property
    def decls(self):
        return self.nest.decls

    def hole_shapes(self) -> dict[str, tuple[int, int, str]]:
        """name -> (arity, outputs, "function" | "predicate")."""
        n = len(self.decls)
        k = self.kind
        if k == "UT":
            return {"R": (n, self.ranks, "function")}
        if k == "CT":
            return {"R": (n, self.ranks, "function"), "W": (n, 1, "predicate")}
        if k == "CNT":
            return {"N": (n, 1, "predicate")}
        if k == "SNT":
            return {"N": (n, 1, "predicate"), "C": (n, len(self.loop.body.inputs), "function")}
        if k == "NestedTerm":
            return {"To": (2 * n, 1, "predicate"), "R1": (n, self.ranks, "function"),
                    "R2": (n, self.ranks, "function")}
        return {"N1": (n, 1, "predicate"), "N2": (n, 1, "predicate")}

    def check_shape(self, cand: Candidate):
        width = self.nest.width
        for name, (arity, outs, kind) in self.hole_shapes().items():
            if name not in cand.holes:
                raise ShapeError(f"hole {name} is not filled")
            p = cand.holes[name]
            err = llang.validate(p)
            if err:
                raise ShapeError(f"hole {name}: {err}")
            if p.width != width or p.arity != arity:
                raise ShapeError(f"hole {name}: expected width {width} arity {arity}, "
                                 f"got width {p.width} arity {p.arity}")
            if kind == "predicate" and len(p.outputs) != 1:
                raise ShapeError(f"hole {name}: a predicate has exactly one output")
            if kind == "function" and name != "C" and not p.outputs:
                raise ShapeError(f"hole {name}: needs at least one rank component")
            if name == "C" and len(p.outputs) != outs:
                raise ShapeError(f"hole C: expected {outs} outputs, got {len(p.outputs)}")
        if self.kind in ("CNT", "SNT", "NestedNonterm"):
            if cand.x0 is None:
                raise ShapeError("non-termination candidate lacks x0")
            missing = [d.name for d in self.decls if d.name not in cand.x0]
            if missing:
                raise ShapeError(f"x0 lacks variables {missing}")


@dataclass
class VC:
    """Negated obligation as a disjunction of named violation parts."""

    parts: list  # (name, BvExpr)
    states: dict  # label -> list of state expressions (decl order)

    @property
    def formula(self) -> BvExpr:
        return bx.disj(*(e for _, e in self.parts))


# ---------------------------------------------------------------- building blocks


def state(decls: Sequence[VarDecl], suffix: str = "") -> dict[str, BvExpr]:
    return {d.name: bx.var(d.name + suffix, d.width) for d in decls}


def _as_list(decls, st: Mapping[str, BvExpr]) -> list[BvExpr]:
    return [st[d.name] for d in decls]


def lift(decls: Sequence[VarDecl], st: Mapping[str, BvExpr], width: int) -> list[BvExpr]:
    """State expressions widened to ``width`` according to each variable's signedness."""
    return [bx.resize(st[d.name], width, d.signed) for d in decls]


def successor(rel: TransitionRelation, decls, st: Mapping[str, BvExpr],
              inputs: Mapping[str, BvExpr] | None = None) -> dict[str, BvExpr]:
    outs = rel.successor_exprs(decls, st, inputs)
    return {d.name: e for d, e in zip(decls, outs)}


def guard_at(g: BvExpr, st: Mapping[str, BvExpr]) -> BvExpr:
    return bx.substitute(g, dict(st))


def predicate(p: LProgram, decls, *states) -> BvExpr:
    args = [a for st in states for a in lift(decls, st, p.width)]
    return bx.truthy(llang.symbolize(p, args)[0])


def ranks(p: LProgram, decls, st) -> list[BvExpr]:
    return llang.symbolize(p, lift(decls, st, p.width))


def lex_decrease(z: Sequence[BvExpr], z2: Sequence[BvExpr]) -> BvExpr:
    """Unsigned lexicographic decrease with the decreasing component bounded below by 0."""
    terms = []
    prefix_equal = bx.TRUE
    for a, b in zip(z, z2):
        terms.append(bx.conj(prefix_equal, bx.ult(b, a), bx.ult(bx.const(0, a.width), a)))
        prefix_equal = bx.conj(prefix_equal, bx.eq(a, b))
    return bx.disj(*terms)


def const_state(decls, values: Mapping[str, int]) -> dict[str, BvExpr]:
    return {d.name: bx.const(int(values[d.name]), d.width) for d in decls}


def entry_formula(entry: Entry, decls, x: Mapping[str, BvExpr], depth: int = 0) -> BvExpr:
    """``I(x)`` with existentially quantified prefix stores left free (named ``v@k``)."""
    if entry.trivial:
        return bx.TRUE
    if entry.prefix.is_identity:
        m = dict(x)
        link = bx.TRUE
    else:
        m = state(decls, f"@{depth}")
        post = successor(entry.prefix, decls, m)
        link = bx.conj(*(bx.eq(x[d.name], post[d.name]) for d in decls))
    if entry.prev is None:
        return link
    exit_ok = bx.neg(guard_at(entry.prev_guard, m))
    if entry.prev_invariant is None:
        # without an invariant any store may be left at the previous loop's exit
        return bx.conj(link, exit_ok)
    before = bx.disj(predicate(entry.prev_invariant, decls, m),
                     entry_formula(entry.prev, decls, m, depth + 1))
    return bx.conj(link, exit_ok, before)


def entry_for(nest: LoopNest, k: int, invariants: Mapping[int, Optional[LProgram]] | None = None) -> Entry:
    """Entry of top-level loop ``k``; ``invariants[j]`` is loop ``j``'s supporting invariant."""
    invariants = invariants or {}
    e = Entry(nest.blocks[0] if nest.blocks else IDENTITY)
    for j in range(1, k + 1):
        e = Entry(nest.blocks[j], e, nest.loops[j - 1].guard, invariants.get(j - 1))
    return e


def _substituted_successor(rel, decls, x, cprog: LProgram | None):
    """``T(x, C(x))``: the successor with nondet inputs supplied by ``cprog``."""
    if not rel.inputs:
        return successor(rel, decls, x)
    outs = llang.symbolize(cprog, lift(decls, x, cprog.width))
    inputs = {}
    for (name, w), o in zip(rel.inputs.items(), outs):
        inputs[name] = bx.resize(o, w, False)
    return successor(rel, decls, x, inputs)


# ---------------------------------------------------------------- VC construction


def build_vc(ob: Obligation, cand: Candidate) -> VC:
    ob.check_shape(cand)
    decls = ob.decls
    loop = ob.loop
    x = state(decls)
    h = cand.holes
    k = ob.kind

    if k in ("UT", "CT"):
        g = guard_at(loop.guard, x)
        xp = successor(loop.body, decls, x)
        dec = lex_decrease(ranks(h["R"], decls, x), ranks(h["R"], decls, xp))
        states = {"x": _as_list(decls, x), "x'": _as_list(decls, xp)}
        if k == "UT":
            return VC([("step", bx.conj(g, bx.neg(dec)))], states)
        w_x = predicate(h["W"], decls, x)
        w_xp = predicate(h["W"], decls, xp)
        base = bx.conj(entry_formula(ob.entry, decls, x), g, bx.neg(w_x))
        step = bx.conj(g, w_x, bx.neg(bx.conj(w_xp, dec)))
        return VC([("base", base), ("step", step)], states)

    if k in ("CNT", "SNT"):
        n_x0 = predicate(h["N"], decls, const_state(decls, cand.x0))
        n_x = predicate(h["N"], decls, x)
        g = guard_at(loop.guard, x)
        if k == "CNT":
            xp = successor(loop.body, decls, x)
            kind = "closed"
        else:
            xp = _substituted_successor(loop.body, decls, x, h["C"])
            kind = "open"
        parts = [("x0", bx.neg(n_x0)), ("guard", bx.conj(n_x, bx.neg(g))),
                 (kind, bx.conj(n_x, bx.neg(predicate(h["N"], decls, xp))))]
        return VC(parts, {"x": _as_list(decls, x), "x'": _as_list(decls, xp)})

    inner = loop.inner()
    g1 = guard_at(loop.guard, x)
    if k == "NestedTerm":
        y = state(decls, "@y")
        y0 = successor(loop.body, decls, x)
        yp = successor(inner.body, decls, y)
        z = successor(loop.post(), decls, y)
        to = h["To"]
        g2 = guard_at(inner.guard, y)
        to_xy = predicate(to, decls, x, y)
        seed = bx.conj(g1, bx.neg(predicate(to, decls, x, y0)))
        dec2 = lex_decrease(ranks(h["R2"], decls, y), ranks(h["R2"], decls, yp))
        inner_ok = bx.conj(dec2, predicate(to, decls, x, yp))
        inner_part = bx.conj(g1, to_xy, g2, bx.neg(inner_ok))
        dec1 = lex_decrease(ranks(h["R1"], decls, x), ranks(h["R1"], decls, z))
        outer_part = bx.conj(g1, to_xy, bx.neg(g2), bx.neg(dec1))
        states = {"x": _as_list(decls, x), "y0": _as_list(decls, y0), "y": _as_list(decls, y),
                  "y'": _as_list(decls, yp), "z": _as_list(decls, z)}
        return VC([("seed", seed), ("inner", inner_part), ("outer", outer_part)], states)

    # NestedNonterm
    n1, n2 = h["N1"], h["N2"]
    y = successor(loop.body, decls, x)
    u = state(decls, "@u")
    up = successor(inner.body, decls, u)
    v = successor(loop.post(), decls, u)
    g2 = guard_at(inner.guard, u)
    parts = [
        ("x0", bx.neg(predicate(n1, decls, const_state(decls, cand.x0)))),
        ("guard", bx.conj(predicate(n1, decls, x), bx.neg(g1))),
        ("enter", bx.conj(predicate(n1, decls, x), bx.neg(predicate(n2, decls, y)))),
        ("inner", bx.conj(g2, predicate(n2, decls, u), bx.neg(predicate(n2, decls, up)))),
        ("exit", bx.conj(bx.neg(g2), predicate(n2, decls, u), bx.neg(predicate(n1, decls, v)))),
    ]
    states = {"x": _as_list(decls, x), "y": _as_list(decls, y), "u": _as_list(decls, u),
              "u'": _as_list(decls, up), "v": _as_list(decls, v)}
    return VC(parts, states)


# ---------------------------------------------------------------- public encoders


def _loop_nest(loop: LoopSpec, decls) -> LoopNest:
    return LoopNest(tuple(decls), (loop,), (IDENTITY,))


def _rank_count(cand, name="R"):
    return len(cand.holes[name].outputs) if name in cand.holes else 1


def encode_ut(loop: LoopSpec, cand: Candidate, decls: Sequence[VarDecl]) -> BvExpr:
    ob = Obligation("UT", _loop_nest(loop, decls), loop, ranks=_rank_count(cand))
    return build_vc(ob, cand).formula


def encode_ct(loop: LoopSpec, entry: Entry, cand: Candidate, decls: Sequence[VarDecl]) -> BvExpr:
    ob = Obligation("CT", _loop_nest(loop, decls), loop, entry, ranks=_rank_count(cand))
    return build_vc(ob, cand).formula


def encode_cnt(loop: LoopSpec, cand: Candidate, decls: Sequence[VarDecl]) -> BvExpr:
    return build_vc(Obligation("CNT", _loop_nest(loop, decls), loop), cand).formula


def encode_snt(loop: LoopSpec, cand: Candidate, decls: Sequence[VarDecl]) -> BvExpr:
    return build_vc(Obligation("SNT", _loop_nest(loop, decls), loop), cand).formula


def encode_nested_term(nest: LoopNest, cand: Candidate, k: int = 0) -> BvExpr:
    """Nested termination VC for top-level loop ``k``; a loop without children reduces to UT on ``R1``."""
    if nest.loops[k].is_simple:
        return encode_ut(nest.loops[k], Candidate({"R": cand["R1"]}), nest.decls)
    ob = Obligation("NestedTerm", nest, nest.loops[k], ranks=_rank_count(cand, "R1"))
    return build_vc(ob, cand).formula


def encode_nested_nonterm(nest: LoopNest, cand: Candidate, k: int = 0) -> BvExpr:
    return build_vc(Obligation("NestedNonterm", nest, nest.loops[k]), cand).formula


def build_gt(term: Obligation, term_cand: Candidate, nonterm: Obligation,
             nonterm_cand: Candidate) -> tuple[BvExpr, BvExpr]:
    """Both sides' negated conditions; exactly one side can become unsatisfiable."""
    if term.kind not in TERM_KINDS or nonterm.kind in TERM_KINDS:
        raise ValueError("build_gt expects a termination and a non-termination obligation")
    return build_vc(term, term_cand).formula, build_vc(nonterm, nonterm_cand).formula
