"""Hash-consed quantifier-free bit-vector expressions.

Nodes are interned, so structurally equal expressions are the same object and
a formula is a DAG with maximal sharing. Constructors fold constants and a
handful of algebraic identities; nothing else is rewritten.
"""
from __future__ import annotations

import itertools
import weakref
from typing import Iterable, Mapping

from ..words import BINARY_OPS, CAST_OPS, COMMUTATIVE, COMPARE_OPS, MAX_WIDTH, UNARY_OPS, mask, scalar_op


class BvExpr:
    __slots__ = ("op", "args", "width", "val", "uid", "__weakref__")

    op: str
    args: tuple
    width: int
    val: object  # constant value, or variable name

    def __repr__(self):
        return to_text(self)

    # operator sugar, mostly for tests
    def __add__(self, o):
        return binop("add", self, _lift(o, self.width))

    def __sub__(self, o):
        return binop("sub", self, _lift(o, self.width))

    def __mul__(self, o):
        return binop("mul", self, _lift(o, self.width))

    def __and__(self, o):
        return binop("and", self, _lift(o, self.width))

    def __or__(self, o):
        return binop("or", self, _lift(o, self.width))

    def __xor__(self, o):
        return binop("xor", self, _lift(o, self.width))

    def __neg__(self):
        return unop("neg", self)

    def __invert__(self):
        return unop("not", self)

    @property
    def is_const(self) -> bool:
        return self.op == "const"


_table: "weakref.WeakValueDictionary[tuple, BvExpr]" = weakref.WeakValueDictionary()
_uids = itertools.count()  # creation order; unlike id() it does not depend on the allocator


def _intern(op: str, args: tuple, width: int, val=None) -> BvExpr:
    key = (op, tuple(id(a) for a in args), width, val)
    node = _table.get(key)
    if node is not None and node.args == args:
        return node
    node = object.__new__(BvExpr)
    node.op, node.args, node.width, node.val = op, args, width, val
    node.uid = next(_uids)
    _table[key] = node
    return node


def _lift(o, width):
    return o if isinstance(o, BvExpr) else const(o, width)


def _pair(a, b):
    if not isinstance(a, BvExpr):
        a = const(a, b.width)
    return a, _lift(b, a.width)


def const(value: int, width: int) -> BvExpr:
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"bad width {width}")
    return _intern("const", (), width, value & mask(width))


def var(name: str, width: int) -> BvExpr:
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"bad width {width}")
    return _intern("var", (), width, name)


TRUE = const(1, 1)
FALSE = const(0, 1)


def _fold(op, args, w_in, w_out):
    if all(a.is_const for a in args):
        return const(scalar_op(op, tuple(a.val for a in args), w_in, w_out), w_out)
    return None


def binop(op: str, a: BvExpr, b: BvExpr) -> BvExpr:
    if op not in BINARY_OPS and op not in COMPARE_OPS:
        raise ValueError(f"not a binary operator: {op}")
    if a.width != b.width:
        raise ValueError(f"width mismatch in {op}: {a.width} vs {b.width}")
    w = a.width
    w_out = 1 if op in COMPARE_OPS else w
    folded = _fold(op, (a, b), w, w_out)
    if folded is not None:
        return folded
    if op in COMMUTATIVE and a.is_const:
        a, b = b, a
    if b.is_const:
        c = b.val
        if c == 0 and op in ("add", "sub", "or", "xor", "shl", "lshr", "ashr"):
            return a
        if c == 0 and op in ("mul", "and"):
            return b
        if c == mask(w) and op == "and":
            return a
        if c == mask(w) and op == "or":
            return b
        if c == 1 and op == "mul":
            return a
    if a is b:
        if op in ("and", "or"):
            return a
        if op in ("xor", "sub"):
            return const(0, w)
        if op in ("eq", "ule", "sle"):
            return TRUE
        if op in ("ne", "ult", "slt"):
            return FALSE
    if op in COMMUTATIVE and a.uid > b.uid and not b.is_const:
        a, b = b, a
    return _intern(op, (a, b), w_out)


def unop(op: str, a: BvExpr) -> BvExpr:
    if op not in UNARY_OPS:
        raise ValueError(f"not a unary operator: {op}")
    folded = _fold(op, (a,), a.width, a.width)
    if folded is not None:
        return folded
    if a.op == op:
        return a.args[0]
    return _intern(op, (a,), a.width)


def ite(c: BvExpr, t: BvExpr, e: BvExpr) -> BvExpr:
    if c.width != 1:
        raise ValueError("ite condition must be 1-bit")
    if t.width != e.width:
        raise ValueError(f"ite branch widths differ: {t.width} vs {e.width}")
    if c.is_const:
        return t if c.val else e
    if t is e:
        return t
    if t.width == 1 and t.is_const and e.is_const:
        return c if t.val else unop("not", c)
    return _intern("ite", (c, t, e), t.width)


def cast(op: str, a: BvExpr, width: int) -> BvExpr:
    """Resize ``a``: ``zext``/``sext`` widen, ``trunc`` narrows; same width is a no-op."""
    if op not in CAST_OPS:
        raise ValueError(op)
    if width == a.width:
        return a
    if op == "trunc" and width > a.width or op != "trunc" and width < a.width:
        raise ValueError(f"cannot {op} width {a.width} to {width}")
    folded = _fold(op, (a,), a.width, width)
    if folded is not None:
        return folded
    return _intern(op, (a,), width)


def resize(a: BvExpr, width: int, signed: bool) -> BvExpr:
    if width < a.width:
        return cast("trunc", a, width)
    return cast("sext" if signed else "zext", a, width)


# boolean helpers over 1-bit expressions


def conj(*xs: BvExpr) -> BvExpr:
    out = TRUE
    for x in xs:
        out = binop("and", out, x)
    return out


def disj(*xs: BvExpr) -> BvExpr:
    out = FALSE
    for x in xs:
        out = binop("or", out, x)
    return out


def neg(x: BvExpr) -> BvExpr:
    return unop("not", x)


def implies(a: BvExpr, b: BvExpr) -> BvExpr:
    return binop("or", unop("not", a), b)


def eq(a, b):
    return binop("eq", *_pair(a, b))


def ne(a, b):
    return binop("ne", *_pair(a, b))


def ult(a, b):
    return binop("ult", *_pair(a, b))


def ule(a, b):
    return binop("ule", *_pair(a, b))


def slt(a, b):
    return binop("slt", *_pair(a, b))


def sle(a, b):
    return binop("sle", *_pair(a, b))


def truthy(x: BvExpr) -> BvExpr:
    """Nonzero test; 1-bit expressions are returned unchanged."""
    return x if x.width == 1 else binop("ne", x, const(0, x.width))


def rebuild(node: BvExpr, args: tuple) -> BvExpr:
    op = node.op
    if op in ("const", "var"):
        return node
    if op in UNARY_OPS:
        return unop(op, args[0])
    if op == "ite":
        return ite(*args)
    if op in CAST_OPS:
        return cast(op, args[0], node.width)
    return binop(op, args[0], args[1])


def topo(roots: Iterable[BvExpr]) -> list[BvExpr]:
    """All nodes reachable from ``roots``, children before parents."""
    order, seen = [], set()
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for a in node.args:
                if id(a) not in seen:
                    stack.append((a, False))
    return order


def substitute(exprs, mapping: Mapping[str, BvExpr]):
    """Replace variables by name. Accepts one expression or a sequence."""
    single = isinstance(exprs, BvExpr)
    roots = [exprs] if single else list(exprs)
    memo: dict[int, BvExpr] = {}
    for node in topo(roots):
        if node.op == "var":
            rep = mapping.get(node.val, node)
            if rep.width != node.width:
                raise ValueError(f"substituting {node.val}: width {rep.width} != {node.width}")
            memo[id(node)] = rep
        elif node.op == "const":
            memo[id(node)] = node
        else:
            memo[id(node)] = rebuild(node, tuple(memo[id(a)] for a in node.args))
    out = [memo[id(r)] for r in roots]
    return out[0] if single else out


def free_vars(exprs) -> dict[str, int]:
    roots = [exprs] if isinstance(exprs, BvExpr) else list(exprs)
    return {n.val: n.width for n in topo(roots) if n.op == "var"}


def to_text(e: BvExpr) -> str:
    if e.op == "const":
        return f"{e.val}:{e.width}"
    if e.op == "var":
        return str(e.val)
    if e.op in CAST_OPS:
        return f"({e.op}{e.width} {to_text(e.args[0])})"
    return "(" + " ".join([e.op] + [to_text(a) for a in e.args]) + ")"
