"""Two's-complement word arithmetic, scalar (Python int) and vectorised (numpy).

Every value is an unsigned bit pattern ``0 <= v < 2**width``. Signed views are
derived on demand. Corner cases follow the usual fixed-width SMT theory:

* unsigned ``x / 0`` is all-ones and ``x % 0`` is ``x``;
* signed division truncates toward zero and is defined through the unsigned
  one on magnitudes (so signed ``x / 0`` is all-ones for ``x >= 0`` and ``1``
  for ``x < 0``);
* shifts by ``>= width`` give 0, or the sign fill for arithmetic right shift.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_WIDTH = 64

BINARY_OPS = (
    "add", "sub", "mul", "udiv", "urem", "sdiv", "srem",
    "and", "or", "xor", "shl", "lshr", "ashr",
)
UNARY_OPS = ("neg", "not")
COMPARE_OPS = ("ult", "ule", "slt", "sle", "eq", "ne")
CAST_OPS = ("zext", "sext", "trunc")
COMMUTATIVE = frozenset({"add", "mul", "and", "or", "xor", "eq", "ne"})


def mask(width: int) -> int:
    return (1 << width) - 1


def to_signed(v: int, width: int) -> int:
    return v - (1 << width) if v >> (width - 1) & 1 else v


def from_int(v: int, width: int) -> int:
    """Truncate an arbitrary Python int to a ``width``-bit pattern."""
    return v & mask(width)


@dataclass(frozen=True)
class Word:
    width: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.width <= MAX_WIDTH:
            raise ValueError(f"width {self.width} outside 1..{MAX_WIDTH}")
        if not 0 <= self.bits <= mask(self.width):
            raise ValueError(f"bit pattern {self.bits} does not fit {self.width} bits")

    @classmethod
    def of(cls, value: int, width: int) -> "Word":
        return cls(width, from_int(value, width))

    @property
    def signed(self) -> int:
        return to_signed(self.bits, self.width)

    def __int__(self):
        return self.bits


# ---------------------------------------------------------------- scalar ops


def _udiv(a, b, w):
    return mask(w) if b == 0 else a // b


def _urem(a, b, w):
    return a if b == 0 else a % b


def _sdiv(a, b, w):
    m = mask(w)
    na, nb = a >> (w - 1) & 1, b >> (w - 1) & 1
    ma = (-a) & m if na else a
    mb = (-b) & m if nb else b
    q = _udiv(ma, mb, w)
    return (-q) & m if na != nb else q


def _srem(a, b, w):
    m = mask(w)
    na, nb = a >> (w - 1) & 1, b >> (w - 1) & 1
    ma = (-a) & m if na else a
    mb = (-b) & m if nb else b
    r = _urem(ma, mb, w)
    return (-r) & m if na else r


def _ashr(a, b, w):
    if a >> (w - 1) & 1:
        if b >= w:
            return mask(w)
        return (a >> b) | (mask(w) & ~(mask(w) >> b))
    return 0 if b >= w else a >> b


_SCALAR = {
    "add": lambda a, b, w: (a + b) & mask(w),
    "sub": lambda a, b, w: (a - b) & mask(w),
    "mul": lambda a, b, w: (a * b) & mask(w),
    "udiv": _udiv,
    "urem": _urem,
    "sdiv": _sdiv,
    "srem": _srem,
    "and": lambda a, b, w: a & b,
    "or": lambda a, b, w: a | b,
    "xor": lambda a, b, w: a ^ b,
    "shl": lambda a, b, w: 0 if b >= w else (a << b) & mask(w),
    "lshr": lambda a, b, w: 0 if b >= w else a >> b,
    "ashr": _ashr,
    "ult": lambda a, b, w: int(a < b),
    "ule": lambda a, b, w: int(a <= b),
    "slt": lambda a, b, w: int(to_signed(a, w) < to_signed(b, w)),
    "sle": lambda a, b, w: int(to_signed(a, w) <= to_signed(b, w)),
    "eq": lambda a, b, w: int(a == b),
    "ne": lambda a, b, w: int(a != b),
}


def scalar_op(op: str, args: tuple, w_in: int, w_out: int) -> int:
    """Apply ``op`` to bit patterns of width ``w_in``; result has ``w_out`` bits."""
    if op in _SCALAR:
        return _SCALAR[op](args[0], args[1], w_in)
    if op == "neg":
        return (-args[0]) & mask(w_in)
    if op == "not":
        return ~args[0] & mask(w_in)
    if op == "ite":
        return args[1] if args[0] else args[2]
    if op == "zext":
        return args[0]
    if op == "sext":
        return from_int(to_signed(args[0], w_in), w_out)
    if op == "trunc":
        return args[0] & mask(w_out)
    raise ValueError(f"unknown operator {op!r}")


# ---------------------------------------------------------------- vector ops

U64 = np.uint64


def vmask(width: int):
    return U64(mask(width))


def _vneg(a, w):
    return (~a + U64(1)) & vmask(w)


def _vudiv(a, b, w):
    zero = b == 0
    q = a // np.where(zero, U64(1), b)
    return np.where(zero, vmask(w), q)


def _vurem(a, b, w):
    zero = b == 0
    r = a % np.where(zero, U64(1), b)
    return np.where(zero, a, r)


def _vsign(a, w):
    return (a >> U64(w - 1)) & U64(1)


def _vsdiv(a, b, w):
    na, nb = _vsign(a, w), _vsign(b, w)
    ma = np.where(na == 1, _vneg(a, w), a)
    mb = np.where(nb == 1, _vneg(b, w), b)
    q = _vudiv(ma, mb, w)
    return np.where(na != nb, _vneg(q, w), q)


def _vsrem(a, b, w):
    na, nb = _vsign(a, w), _vsign(b, w)
    ma = np.where(na == 1, _vneg(a, w), a)
    mb = np.where(nb == 1, _vneg(b, w), b)
    r = _vurem(ma, mb, w)
    return np.where(na == 1, _vneg(r, w), r)


def _vshift_amount(b, w):
    return np.minimum(b, U64(w - 1)), b >= U64(w)


def _vshl(a, b, w):
    s, big = _vshift_amount(b, w)
    return np.where(big, U64(0), (a << s) & vmask(w))


def _vlshr(a, b, w):
    s, big = _vshift_amount(b, w)
    return np.where(big, U64(0), a >> s)


def _vashr(a, b, w):
    s, _ = _vshift_amount(b, w)
    m = vmask(w)
    fill = m & ~(m >> s)
    return np.where(_vsign(a, w) == 1, (a >> s) | fill, a >> s)


def _vsigned_key(a, w):
    # flipping the sign bit maps signed order onto unsigned order
    return a ^ (U64(1) << U64(w - 1))


_VECTOR = {
    "add": lambda a, b, w: (a + b) & vmask(w),
    "sub": lambda a, b, w: (a - b) & vmask(w),
    "mul": lambda a, b, w: (a * b) & vmask(w),
    "udiv": _vudiv,
    "urem": _vurem,
    "sdiv": _vsdiv,
    "srem": _vsrem,
    "and": lambda a, b, w: a & b,
    "or": lambda a, b, w: a | b,
    "xor": lambda a, b, w: a ^ b,
    "shl": _vshl,
    "lshr": _vlshr,
    "ashr": _vashr,
    "ult": lambda a, b, w: (a < b).astype(U64),
    "ule": lambda a, b, w: (a <= b).astype(U64),
    "slt": lambda a, b, w: (_vsigned_key(a, w) < _vsigned_key(b, w)).astype(U64),
    "sle": lambda a, b, w: (_vsigned_key(a, w) <= _vsigned_key(b, w)).astype(U64),
    "eq": lambda a, b, w: (a == b).astype(U64),
    "ne": lambda a, b, w: (a != b).astype(U64),
}


def vector_op(op: str, args: tuple, w_in: int, w_out: int):
    """Vectorised twin of :func:`scalar_op` over ``uint64`` arrays."""
    with np.errstate(over="ignore"):
        if op in _VECTOR:
            return _VECTOR[op](args[0], args[1], w_in)
        if op == "neg":
            return _vneg(args[0], w_in)
        if op == "not":
            return ~args[0] & vmask(w_in)
        if op == "ite":
            return np.where(args[0] != 0, args[1], args[2])
        if op == "zext":
            return args[0]
        if op == "sext":
            a = args[0]
            hi = vmask(w_out) & ~vmask(w_in)
            return np.where(_vsign(a, w_in) == 1, a | hi, a)
        if op == "trunc":
            return args[0] & vmask(w_out)
    raise ValueError(f"unknown operator {op!r}")
