"""The straight-line proof language.

An :class:`LProgram` is a list of instructions over fixed-width words. Each
operand is a constant, an input, or the result of an earlier instruction.
Comparisons and ``implies`` produce 0/1 words, which is how boolean results
are widened; ``ite`` treats any nonzero condition as true.

Textual form, one instruction per line::

    r0 = sub in0, 1
    r1 = and r0, in0
    out r1
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .satcore import expr as bx
from .satcore.expr import BvExpr
from .words import Word, mask, scalar_op, vector_op

ARITY = {
    "add": 2, "sub": 2, "mul": 2, "div": 2, "mod": 2, "min": 2, "max": 2,
    "and": 2, "or": 2, "xor": 2, "lshr": 2, "ashr": 2, "shl": 2,
    "le": 2, "lt": 2, "sle": 2, "slt": 2, "eq": 2, "neq": 2, "implies": 2,
    "neg": 1, "not": 1, "ite": 3,
}
OPCODES = tuple(ARITY)
BOOLEAN_OPS = frozenset({"le", "lt", "sle", "slt", "eq", "neq", "implies"})
COMMUTATIVE_OPS = frozenset({"add", "mul", "min", "max", "and", "or", "xor", "eq", "neq"})

# opcodes that map 1:1 onto a word operator
_DIRECT = {
    "add": "add", "sub": "sub", "mul": "mul", "div": "sdiv", "mod": "srem",
    "and": "and", "or": "or", "xor": "xor", "lshr": "lshr", "ashr": "ashr", "shl": "shl",
    "le": "ule", "lt": "ult", "sle": "sle", "slt": "slt", "eq": "eq", "neq": "ne",
    "neg": "neg", "not": "not",
}


class Operand(NamedTuple):
    kind: str  # "const", "in" or "reg"
    value: int

    def __str__(self):
        if self.kind == "const":
            return str(self.value)
        return f"{'in' if self.kind == 'in' else 'r'}{self.value}"

    @classmethod
    def parse(cls, text: str) -> "Operand":
        text = text.strip()
        if text.startswith("in"):
            return cls("in", int(text[2:]))
        if text.startswith("r"):
            return cls("reg", int(text[1:]))
        return cls("const", int(text, 0))


def Const(v):
    return Operand("const", v)


def Input(i):
    return Operand("in", i)


def Reg(j):
    return Operand("reg", j)


class LInstr(NamedTuple):
    opcode: str
    operands: tuple


class LProgramError(ValueError):
    pass


@dataclass(frozen=True)
class LProgram:
    width: int
    arity: int
    instrs: tuple = ()
    outputs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "instrs", tuple(LInstr(op, tuple(a)) for op, a in self.instrs))
        object.__setattr__(self, "outputs", tuple(Operand(*o) for o in self.outputs))

    def __len__(self):
        return len(self.instrs)

    def __str__(self):
        return to_text(self)

    def is_predicate(self) -> bool:
        """True iff every output is 0/1-valued by construction."""
        flags = _boolean_flags(self)
        return all(_operand_is_bool(o, flags) for o in self.outputs)


def _operand_is_bool(o: Operand, flags) -> bool:
    if o.kind == "const":
        return o.value in (0, 1)
    if o.kind == "reg":
        return flags[o.value]
    return False


def _boolean_flags(p: LProgram) -> list[bool]:
    flags = []
    for op, args in p.instrs:
        if op in BOOLEAN_OPS:
            flags.append(True)
        elif op in ("and", "or", "xor", "min", "max"):
            flags.append(all(_operand_is_bool(a, flags) for a in args))
        elif op == "ite":
            flags.append(all(_operand_is_bool(a, flags) for a in args[1:]))
        else:
            flags.append(False)
    return flags


# ---------------------------------------------------------------- construction helpers


def identity(width: int, arity: int, index: int = 0) -> LProgram:
    return LProgram(width, arity, (), (Input(index),))


def constant(width: int, arity: int, value: int) -> LProgram:
    return LProgram(width, arity, (), (Const(value & mask(width)),))


# ---------------------------------------------------------------- validation


def validate(p: LProgram) -> str | None:
    """``None`` when well formed, else the first violation found."""
    if not 1 <= p.width <= 64:
        return f"bad width {p.width}"
    if p.arity < 0:
        return "negative arity"
    if not p.outputs:
        return "no outputs"
    for pos, (op, args) in enumerate(p.instrs):
        if op not in ARITY:
            return f"unknown opcode {op!r} at r{pos}"
        if len(args) != ARITY[op]:
            return f"arity mismatch for {op} at r{pos}: {len(args)} operands"
        for a in args:
            err = _check_operand(p, a, pos)
            if err:
                return f"{err} at r{pos}"
    for o in p.outputs:
        err = _check_operand(p, o, len(p.instrs))
        if err:
            return f"{err} in outputs"
    return None


def _check_operand(p, a, pos):
    if a.kind == "const":
        if not 0 <= a.value <= mask(p.width):
            return f"constant {a.value} does not fit {p.width} bits"
    elif a.kind == "in":
        if not 0 <= a.value < p.arity:
            return f"input in{a.value} out of range"
    elif a.kind == "reg":
        if a.value >= pos:
            return "forward reference"
        if a.value < 0:
            return "negative register"
    else:
        return f"bad operand kind {a.kind!r}"
    return None


def check_valid(p: LProgram) -> LProgram:
    err = validate(p)
    if err:
        raise LProgramError(err)
    return p


# ---------------------------------------------------------------- semantics


def apply_scalar(op: str, args: Sequence[int], w: int) -> int:
    if op in _DIRECT:
        return scalar_op(_DIRECT[op], tuple(args), w, w if op not in BOOLEAN_OPS else 1)
    a = args
    if op == "min":
        return min(a[0], a[1])
    if op == "max":
        return max(a[0], a[1])
    if op == "implies":
        return int(a[0] == 0 or a[1] != 0)
    if op == "ite":
        return a[1] if a[0] else a[2]
    raise LProgramError(f"unknown opcode {op!r}")


def apply_vector(op: str, args: Sequence[np.ndarray], w: int) -> np.ndarray:
    if op in _DIRECT:
        return vector_op(_DIRECT[op], tuple(args), w, w if op not in BOOLEAN_OPS else 1)
    a = args
    if op == "min":
        return np.minimum(a[0], a[1])
    if op == "max":
        return np.maximum(a[0], a[1])
    if op == "implies":
        return ((a[0] == 0) | (a[1] != 0)).astype(np.uint64)
    if op == "ite":
        return np.where(a[0] != 0, a[1], a[2])
    raise LProgramError(f"unknown opcode {op!r}")


def interpret(p: LProgram, args: Sequence) -> list[int]:
    """Run ``p`` on concrete inputs (ints or :class:`Word`); returns output words as ints."""
    if len(args) != p.arity:
        raise LProgramError(f"expected {p.arity} arguments, got {len(args)}")
    m = mask(p.width)
    ins = [(int(a.bits) if isinstance(a, Word) else int(a)) & m for a in args]
    regs: list[int] = []

    def val(o):
        if o.kind == "const":
            return o.value
        if o.kind == "in":
            return ins[o.value]
        return regs[o.value]

    for op, operands in p.instrs:
        regs.append(apply_scalar(op, [val(o) for o in operands], p.width))
    return [val(o) for o in p.outputs]


def interpret_vec(p: LProgram, args: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Vectorised :func:`interpret` over equal-length ``uint64`` arrays."""
    n = len(args[0]) if args else 1
    regs: list[np.ndarray] = []

    def val(o):
        if o.kind == "const":
            return np.full(n, o.value, dtype=np.uint64)
        if o.kind == "in":
            return args[o.value]
        return regs[o.value]

    for op, operands in p.instrs:
        regs.append(apply_vector(op, [val(o) for o in operands], p.width))
    return [val(o) for o in p.outputs]


def symbolize(p: LProgram, args: Sequence[BvExpr]) -> list[BvExpr]:
    """Expressions for ``p``'s outputs over symbolic inputs of width ``p.width``."""
    if len(args) != p.arity:
        raise LProgramError(f"expected {p.arity} arguments, got {len(args)}")
    w = p.width
    regs: list[BvExpr] = []

    def val(o):
        if o.kind == "const":
            return bx.const(o.value, w)
        if o.kind == "in":
            if args[o.value].width != w:
                raise LProgramError(f"input in{o.value} has width {args[o.value].width}, expected {w}")
            return args[o.value]
        return regs[o.value]

    def as_word(b):
        return bx.cast("zext", b, w)

    for op, operands in p.instrs:
        a = [val(o) for o in operands]
        if op in BOOLEAN_OPS:
            if op == "implies":
                r = bx.implies(bx.truthy(a[0]), bx.truthy(a[1])) if w > 1 else bx.implies(a[0], a[1])
            else:
                r = bx.binop(_DIRECT[op], a[0], a[1])
            regs.append(as_word(r))
        elif op in ("neg", "not"):
            regs.append(bx.unop(op, a[0]))
        elif op == "min":
            regs.append(bx.ite(bx.ult(a[0], a[1]), a[0], a[1]))
        elif op == "max":
            regs.append(bx.ite(bx.ult(a[0], a[1]), a[1], a[0]))
        elif op == "ite":
            regs.append(bx.ite(bx.truthy(a[0]), a[1], a[2]))
        else:
            regs.append(bx.binop(_DIRECT[op], a[0], a[1]))
    return [val(o) for o in p.outputs]


# ---------------------------------------------------------------- text / json


def to_text(p: LProgram) -> str:
    lines = []
    for i, (op, args) in enumerate(p.instrs):
        lines.append(f"r{i} = {op} " + ", ".join(str(a) for a in args))
    lines.append("out " + ", ".join(str(o) for o in p.outputs))
    return "\n".join(lines)


def from_text(text: str, width: int, arity: int) -> LProgram:
    instrs, outputs = [], []
    for raw in text.strip().splitlines():
        line = raw.split("#")[0].strip()
        if not line:
            continue
        if line.startswith("out"):
            outputs = [Operand.parse(t) for t in line[3:].split(",")]
            continue
        lhs, rhs = line.split("=", 1)
        op, _, rest = rhs.strip().partition(" ")
        if lhs.strip() != f"r{len(instrs)}":
            raise LProgramError(f"expected r{len(instrs)} on the left of {raw!r}")
        instrs.append(LInstr(op, tuple(Operand.parse(t) for t in rest.split(","))))
    return check_valid(LProgram(width, arity, tuple(instrs), tuple(outputs)))


def to_json(p: LProgram) -> dict:
    return {
        "width": p.width,
        "arity": p.arity,
        "instrs": [[op] + [str(a) for a in args] for op, args in p.instrs],
        "outputs": [str(o) for o in p.outputs],
    }


def from_json(d: dict) -> LProgram:
    instrs = tuple(LInstr(i[0], tuple(Operand.parse(a) for a in i[1:])) for i in d["instrs"])
    outputs = tuple(Operand.parse(o) for o in d["outputs"])
    return check_valid(LProgram(int(d["width"]), int(d["arity"]), instrs, outputs))


# ---------------------------------------------------------------- enumeration


def default_constants(width: int) -> list[int]:
    m = mask(width)
    raw = [0, 1, 2, width - 1, (1 << (width - 1)) - 1, 1 << (width - 1), m]
    return sorted({c & m for c in raw})


def _operand_key(o: Operand):
    return ({"in": 0, "const": 1, "reg": 2}[o.kind], o.value)


def _canonical_order(instrs, outputs) -> tuple | None:
    """Post-order serialisation from the outputs, or None if some instruction is dead."""
    order: list[int] = []
    seen = set()

    def visit(j):
        if j in seen:
            return
        seen.add(j)
        for a in instrs[j][1]:
            if a.kind == "reg":
                visit(a.value)
        order.append(j)

    for o in outputs:
        if o.kind == "reg":
            visit(o.value)
    if len(order) != len(instrs):
        return None
    return tuple(order)


def _syntactic(width, arity, k, shape, constants) -> Iterator[LProgram]:
    basics = [Input(i) for i in range(arity)] + [Const(c) for c in constants]
    for n in range(k + 1):
        if n == 0:
            for o in basics:
                p = LProgram(width, arity, (), (o,))
                if shape == "function" or p.is_predicate():
                    yield p
            continue
        yield from _programs_of_length(width, arity, n, shape, basics)


def _programs_of_length(width, arity, n, shape, basics):
    def rec(prefix):
        pos = len(prefix)
        if pos == n:
            out = (Reg(n - 1),)
            if _canonical_order(prefix, out) != tuple(range(n)):
                return
            p = LProgram(width, arity, tuple(prefix), out)
            if shape == "predicate" and not p.is_predicate():
                return
            yield p
            return
        ops = basics + [Reg(j) for j in range(pos)]
        seen_instrs = set(prefix)
        for op in OPCODES:
            for args in itertools.product(ops, repeat=ARITY[op]):
                if all(a.kind == "const" for a in args):
                    continue  # foldable
                if op in COMMUTATIVE_OPS and _operand_key(args[0]) > _operand_key(args[1]):
                    continue
                ins = LInstr(op, args)
                if ins in seen_instrs:
                    continue
                yield from rec(prefix + [ins])

    yield from rec([])


def enumerate_programs(width: int, arity: int, k: int, shape: str = "function",
                       dedup: str = "syntactic", points: np.ndarray | None = None,
                       constants: Sequence[int] | None = None) -> Iterator[LProgram]:
    """Stream canonical programs with at most ``k`` instructions, smallest first.

    ``dedup="syntactic"`` yields every canonical program once: commutative
    operands ordered, no dead or repeated instructions, no all-constant
    instructions, and instructions in post-order from the output.
    ``dedup="semantic"`` yields one representative per distinct function
    observed on ``points`` (default: the whole input space when it has at
    most 2**16 elements), built bottom-up over expression size.
    """
    if shape not in ("function", "predicate"):
        raise ValueError(f"unknown shape {shape!r}")
    consts = list(constants) if constants is not None else default_constants(width)
    if dedup == "syntactic":
        yield from _syntactic(width, arity, k, shape, consts)
        return
    from .synthesis.pool import TermPool

    if points is None:
        if width * arity > 16:
            raise ValueError("input space too large; pass explicit points")
        grid = np.array(list(itertools.product(range(1 << width), repeat=arity)), dtype=np.uint64)
        points = grid.reshape(-1, arity) if arity else np.zeros((1, 0), dtype=np.uint64)
    pool = TermPool(width, arity, points, consts, any_condition=True)
    for size in range(k + 1):
        lo, hi = pool.grow(size)
        for t in range(lo, hi):
            if shape == "predicate" and not pool.is_bool[t]:
                continue
            yield pool.program(t)

