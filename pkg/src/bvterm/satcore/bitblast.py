"""Tseitin bit-blasting of :mod:`expr` DAGs into CNF.

Bits are DIMACS literals, least significant first. Literal ``1`` is the
constant true (pinned by a unit clause), so ``-1`` is false; gate
constructors fold constants and reuse structurally identical gates.
"""
from __future__ import annotations

from typing import Iterable, Mapping

from .expr import BvExpr, topo
from .solver import Cnf, SatResult

T, F = 1, -1


class Blaster:
    def __init__(self):
        self.nvars = 1
        self.clauses: list[list[int]] = [[T]]
        self.var_bits: dict[str, list[int]] = {}
        self._gates: dict[tuple, int] = {}
        self._bits: dict[int, list[int]] = {}
        self._keep: list[BvExpr] = []  # pins blasted nodes so their ids stay valid

    def fresh(self) -> int:
        self.nvars += 1
        return self.nvars

    # ------------------------------------------------------------ gates

    def AND(self, a: int, b: int) -> int:
        if a == F or b == F or a == -b:
            return F
        if a == T:
            return b
        if b == T or a == b:
            return a
        if a > b:
            a, b = b, a
        key = ("and", a, b)
        g = self._gates.get(key)
        if g is None:
            g = self.fresh()
            self.clauses += [[-g, a], [-g, b], [g, -a, -b]]
            self._gates[key] = g
        return g

    def OR(self, a: int, b: int) -> int:
        return -self.AND(-a, -b)

    def XOR(self, a: int, b: int) -> int:
        if a == F:
            return b
        if b == F:
            return a
        if a == T:
            return -b
        if b == T:
            return -a
        if a == b:
            return F
        if a == -b:
            return T
        sign = 1
        if a < 0:
            a, sign = -a, -sign
        if b < 0:
            b, sign = -b, -sign
        if a > b:
            a, b = b, a
        key = ("xor", a, b)
        g = self._gates.get(key)
        if g is None:
            g = self.fresh()
            self.clauses += [[-g, a, b], [-g, -a, -b], [g, -a, b], [g, a, -b]]
            self._gates[key] = g
        return sign * g

    def MUX(self, c: int, t: int, e: int) -> int:
        if c == T:
            return t
        if c == F:
            return e
        if t == e:
            return t
        if t == T and e == F:
            return c
        if t == F and e == T:
            return -c
        if t == T:
            return self.OR(c, e)
        if t == F:
            return self.AND(-c, e)
        if e == T:
            return self.OR(-c, t)
        if e == F:
            return self.AND(c, t)
        if c < 0:
            c, t, e = -c, e, t
        key = ("mux", c, t, e)
        g = self._gates.get(key)
        if g is None:
            g = self.fresh()
            self.clauses += [[-c, -t, g], [-c, t, -g], [c, -e, g], [c, e, -g],
                             [-t, -e, g], [t, e, -g]]
            self._gates[key] = g
        return g

    def AND_all(self, xs: Iterable[int]) -> int:
        out = T
        for x in xs:
            out = self.AND(out, x)
        return out

    def OR_all(self, xs: Iterable[int]) -> int:
        return -self.AND_all(-x for x in xs)

    # ------------------------------------------------------------ words

    def add(self, a, b, cin=F):
        out = []
        for x, y in zip(a, b):
            s = self.XOR(x, y)
            out.append(self.XOR(s, cin))
            cin = self.OR(self.AND(x, y), self.AND(cin, s))
        return out, cin

    def neg(self, a):
        return self.add([-x for x in a], [F] * len(a), T)[0]

    def sub(self, a, b):
        return self.add(a, [-x for x in b], T)[0]

    def ult(self, a, b):
        # a - b borrows exactly when a < b
        _, carry = self.add(a, [-x for x in b], T)
        return -carry

    def eq(self, a, b):
        return self.AND_all(-self.XOR(x, y) for x, y in zip(a, b))

    def mux(self, c, t, e):
        return [self.MUX(c, x, y) for x, y in zip(t, e)]

    def mul(self, a, b):
        w = len(a)
        acc = [F] * w
        for i in range(w):
            if b[i] == F:
                continue
            partial = [F] * i + [self.AND(b[i], a[j]) for j in range(w - i)]
            acc = self.add(acc, partial)[0]
        return acc

    def udivrem(self, a, b):
        w = len(a)
        rem = [F] * (w + 1)
        bx = list(b) + [F]
        q = [F] * w
        for i in range(w - 1, -1, -1):
            rem = [a[i]] + rem[:w]
            ge = -self.ult(rem, bx)
            diff = self.sub(rem, bx)
            rem = self.mux(ge, diff, rem)
            q[i] = ge
        return q, rem[:w]

    def _magnitude(self, a):
        s = a[-1]
        return self.mux(s, self.neg(a), a), s

    def sdiv(self, a, b):
        ma, sa = self._magnitude(a)
        mb, sb = self._magnitude(b)
        q, _ = self.udivrem(ma, mb)
        return self.mux(self.XOR(sa, sb), self.neg(q), q)

    def srem(self, a, b):
        ma, sa = self._magnitude(a)
        mb, _ = self._magnitude(b)
        _, r = self.udivrem(ma, mb)
        return self.mux(sa, self.neg(r), r)

    def shift(self, op, a, b):
        w = len(a)
        fill = a[-1] if op == "ashr" else F
        cur = list(a)
        k = 0
        while (1 << k) < w:
            s = 1 << k
            if op == "shl":
                moved = [F] * s + cur[: w - s]
            else:
                moved = cur[s:] + [fill] * s
            cur = self.mux(b[k], moved, cur)
            k += 1
        # amounts >= w saturate
        limit = [T if (w - 1) >> i & 1 else F for i in range(len(b))] if w - 1 < (1 << len(b)) else None
        if limit is None:
            return cur
        over = self.ult(limit, b)
        return self.mux(over, [fill] * w, cur)

    # ------------------------------------------------------------ expressions

    def blast(self, e: BvExpr) -> list[int]:
        bits = self._bits.get(id(e))
        if bits is not None:
            return bits
        for node in topo([e]):
            if id(node) not in self._bits:
                self._bits[id(node)] = self._blast_node(node)
                self._keep.append(node)
        return self._bits[id(e)]

    def _blast_node(self, n: BvExpr) -> list[int]:
        op, w = n.op, n.width
        if op == "const":
            return [T if n.val >> i & 1 else F for i in range(w)]
        if op == "var":
            bits = self.var_bits.get(n.val)
            if bits is None:
                bits = [self.fresh() for _ in range(w)]
                self.var_bits[n.val] = bits
            return bits
        args = [self._bits[id(a)] for a in n.args]
        if op == "add":
            return self.add(args[0], args[1])[0]
        if op == "sub":
            return self.sub(args[0], args[1])
        if op == "mul":
            return self.mul(args[0], args[1])
        if op == "neg":
            return self.neg(args[0])
        if op == "not":
            return [-x for x in args[0]]
        if op in ("and", "or", "xor"):
            gate = {"and": self.AND, "or": self.OR, "xor": self.XOR}[op]
            return [gate(x, y) for x, y in zip(args[0], args[1])]
        if op == "udiv":
            return self.udivrem(args[0], args[1])[0]
        if op == "urem":
            return self.udivrem(args[0], args[1])[1]
        if op == "sdiv":
            return self.sdiv(args[0], args[1])
        if op == "srem":
            return self.srem(args[0], args[1])
        if op in ("shl", "lshr", "ashr"):
            return self.shift(op, args[0], args[1])
        if op == "ult":
            return [self.ult(args[0], args[1])]
        if op == "ule":
            return [-self.ult(args[1], args[0])]
        if op in ("slt", "sle"):
            a = args[0][:-1] + [-args[0][-1]]
            b = args[1][:-1] + [-args[1][-1]]
            return [self.ult(a, b)] if op == "slt" else [-self.ult(b, a)]
        if op == "eq":
            return [self.eq(args[0], args[1])]
        if op == "ne":
            return [-self.eq(args[0], args[1])]
        if op == "ite":
            return self.mux(args[0][0], args[1], args[2])
        if op == "zext":
            return args[0] + [F] * (w - len(args[0]))
        if op == "sext":
            return args[0] + [args[0][-1]] * (w - len(args[0]))
        if op == "trunc":
            return args[0][:w]
        raise ValueError(f"cannot bit-blast {op!r}")

    def assert_true(self, e: BvExpr):
        if e.width != 1:
            raise ValueError("constraints must be 1-bit")
        self.clauses.append([self.blast(e)[0]])

    def cnf(self) -> Cnf:
        return Cnf(self.nvars, self.clauses)

    def decode(self, result: SatResult) -> dict[str, int]:
        """Word values of every named variable under a satisfying assignment."""
        out = {}
        for name, bits in self.var_bits.items():
            out[name] = sum(result.value(b) << i for i, b in enumerate(bits))
        return out


def bitblast(e: BvExpr) -> tuple[Cnf, Mapping[str, list[int]]]:
    """Equisatisfiable CNF for the 1-bit constraint ``e`` and the variable bit map."""
    b = Blaster()
    b.assert_true(e)
    return b.cnf(), b.var_bits
