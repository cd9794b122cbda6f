"""Type elaboration and loop-nest extraction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..loops import LoopNest, LoopSpec
from ..satcore import expr as bx
from ..satcore.expr import BvExpr
from ..semantics import TransitionRelation, VarDecl
from .parser import Assign, Binary, If, Name, Nondet, Num, ParseError, SourceProgram, Unary, \
    UnsupportedConstruct, While


class TypeError_(ParseError):
    """Ill-typed expression, e.g. a mixed-signedness comparison."""


@dataclass(frozen=True)
class Typed:
    expr: Optional[BvExpr]  # None for a not-yet-sized literal
    signed: Optional[bool]  # None: adapts to the other operand (literals, booleans)
    literal: int = 0

    @property
    def width(self):
        return self.expr.width if self.expr is not None else None


def _bool(e: BvExpr) -> Typed:
    return Typed(e, None)


def _size(t: Typed, width: int, signed: bool | None) -> BvExpr:
    if t.expr is None:
        return bx.const(t.literal, width)
    sign = t.signed if t.signed is not None else False
    return bx.resize(t.expr, width, sign)


def _unify(a: Typed, b: Typed, where: str, compare=False):
    if a.signed is not None and b.signed is not None and a.signed != b.signed and compare:
        raise TypeError_(f"mixed-signedness comparison in {where}")
    widths = [t.width for t in (a, b) if t.width is not None]
    width = max(widths) if widths else None
    signs = [t.signed for t in (a, b) if t.signed is not None]
    signed = all(signs) if signs else None
    if width is None:
        return None, None, signed
    return _size(a, width, signed), _size(b, width, signed), signed


_ARITH = {"+": "add", "-": "sub", "*": "mul", "&": "and", "|": "or", "^": "xor"}
_CMP_U = {"<": ("ult", False), "<=": ("ule", False), ">": ("ult", True), ">=": ("ule", True)}
_CMP_S = {"<": ("slt", False), "<=": ("sle", False), ">": ("slt", True), ">=": ("sle", True)}


def _tdiv(x, y):
    q = abs(x) // abs(y)
    return q if (x < 0) == (y < 0) else -q


def _fold_literal(op, a, b):
    if op in ("/", "%") and b == 0:
        # same convention as the word operators: all-ones quotient, dividend remainder
        return -1 if op == "/" else a
    import operator
    table = {"+": operator.add, "-": operator.sub, "*": operator.mul, "&": operator.and_,
             "|": operator.or_, "^": operator.xor, "<<": operator.lshift, ">>": operator.rshift,
             "/": _tdiv, "%": lambda x, y: x - y * _tdiv(x, y),
             "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
             "==": operator.eq, "!=": operator.ne,
             "&&": lambda x, y: bool(x) and bool(y), "||": lambda x, y: bool(x) or bool(y)}
    return int(table[op](a, b))


class Elaborator:
    def __init__(self, decls):
        self.decls = {d.name: d for d in decls}
        self.counter = 0

    def fresh_input(self, width: int) -> str:
        name = f"nd?{self.counter}"
        self.counter += 1
        return name

    def expr(self, e, env) -> Typed:
        if isinstance(e, Num):
            return Typed(None, None, e.value)
        if isinstance(e, Name):
            d = self.decls[e.id]
            return Typed(env[e.id], d.signed)
        if isinstance(e, Unary):
            a = self.expr(e.arg, env)
            if a.expr is None:
                v = {"-": -a.literal, "~": ~a.literal, "!": int(not a.literal)}[e.op]
                return Typed(None, None, v)
            if e.op == "-":
                return Typed(bx.unop("neg", a.expr), a.signed)
            if e.op == "~":
                return Typed(bx.unop("not", a.expr), a.signed)
            return _bool(bx.neg(bx.truthy(a.expr)))
        a = self.expr(e.left, env)
        b = self.expr(e.right, env)
        op = e.op
        if a.expr is None and b.expr is None:
            return Typed(None, None, _fold_literal(op, a.literal, b.literal))
        if op in ("&&", "||"):
            x, y = ((bx.TRUE if t.literal else bx.FALSE) if t.expr is None else bx.truthy(t.expr)
                    for t in (a, b))
            return _bool(bx.binop("and" if op == "&&" else "or", x, y))
        if op in ("<<", ">>"):
            if a.expr is None:
                a = Typed(bx.const(a.literal, b.width), b.signed)
            amount = _size(b, a.width, b.signed)
            if op == "<<":
                return Typed(bx.binop("shl", a.expr, amount), a.signed)
            return Typed(bx.binop("ashr" if a.signed else "lshr", a.expr, amount), a.signed)
        compare = op in ("<", "<=", ">", ">=", "==", "!=")
        x, y, signed = _unify(a, b, f"'{op}'", compare=compare)
        if op in _ARITH:
            return Typed(bx.binop(_ARITH[op], x, y), signed)
        if op == "/":
            return Typed(bx.binop("sdiv" if signed else "udiv", x, y), signed)
        if op == "%":
            return Typed(bx.binop("srem" if signed else "urem", x, y), signed)
        if op == "==":
            return _bool(bx.eq(x, y))
        if op == "!=":
            return _bool(bx.ne(x, y))
        name, swap = (_CMP_S if signed else _CMP_U)[op]
        return _bool(bx.binop(name, *((y, x) if swap else (x, y))))

    def cond(self, e, env) -> BvExpr:
        t = self.expr(e, env)
        if t.expr is None:
            return bx.TRUE if t.literal else bx.FALSE
        return bx.truthy(t.expr)

    def straight(self, stmts, env, inputs):
        """Symbolically execute loop-free statements; returns the updated env."""
        for s in stmts:
            if isinstance(s, Assign):
                d = self.decls[s.target]
                t = self.expr(s.value, env)
                env = {**env, s.target: _size(t, d.width, t.signed)}
            elif isinstance(s, Nondet):
                d = self.decls[s.target]
                name = self.fresh_input(d.width)
                inputs[name] = d.width
                env = {**env, s.target: bx.var(name, d.width)}
            elif isinstance(s, If):
                if _has_loop(s.then) or _has_loop(s.orelse):
                    raise UnsupportedConstruct("loop inside a conditional branch")
                c = self.cond(s.cond, env)
                t_env = self.straight(s.then, env, inputs)
                e_env = self.straight(s.orelse, env, inputs)
                env = {n: bx.ite(c, t_env[n], e_env[n]) for n in env}
            else:
                raise AssertionError("loop reached straight-line compilation")
        return env

    def relation(self, stmts) -> TransitionRelation:
        base = {n: bx.var(n, d.width) for n, d in self.decls.items()}
        inputs: dict[str, int] = {}
        env = self.straight(stmts, base, inputs)
        ups = {n: e for n, e in env.items() if e is not base[n]}
        return TransitionRelation(ups, inputs)

    def segments(self, stmts):
        """Split a statement list into ``[rel, loop, rel, loop, ..., rel]``."""
        out, run = [], []
        for s in stmts:
            if isinstance(s, While):
                out.append(self.relation(run))
                out.append(self.loop(s))
                run = []
            else:
                run.append(s)
        out.append(self.relation(run))
        return out

    def loop(self, w: While) -> LoopSpec:
        base = {n: bx.var(n, d.width) for n, d in self.decls.items()}
        guard = self.cond(w.cond, base)
        segs = self.segments(w.body)
        return LoopSpec(guard, segs[0], tuple(segs[1::2]), tuple(segs[2::2]))


def _has_loop(stmts) -> bool:
    for s in stmts:
        if isinstance(s, While):
            return True
        if isinstance(s, If) and (_has_loop(s.then) or _has_loop(s.orelse)):
            return True
    return False


def extract_loop_nest(p: SourceProgram, width: int | None = None) -> LoopNest:
    """Elaborate ``p`` into its loop nest; ``width`` overrides every declared width."""
    decls = tuple(VarDecl(d.name, width or d.width, d.signed) for d in p.decls)
    el = Elaborator(decls)
    segs = el.segments(p.body)
    return LoopNest(decls, tuple(segs[1::2]), tuple(segs[0:-1:2]), segs[-1])
