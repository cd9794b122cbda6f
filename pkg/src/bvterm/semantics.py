"""Concrete two's-complement semantics: evaluation, stepping, determinism."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .satcore import expr as bx
from .satcore.expr import BvExpr
from .words import Word, mask, scalar_op, vector_op

State = dict  # variable name -> unsigned bit pattern


class EvalError(Exception):
    """Unbound symbol or width inconsistency while evaluating."""


@dataclass(frozen=True)
class VarDecl:
    name: str
    width: int
    signed: bool = False


@dataclass(frozen=True)
class TransitionRelation:
    """Parallel assignment ``x' = f(x, inputs)``; unlisted variables keep their value."""

    updates: Mapping[str, BvExpr] = field(default_factory=dict)
    inputs: Mapping[str, int] = field(default_factory=dict)

    def successor_exprs(self, decls: Sequence[VarDecl], state: Mapping[str, BvExpr] | None = None,
                        inputs: Mapping[str, BvExpr] | None = None) -> list[BvExpr]:
        """Next-state expressions, one per declaration, over ``state``/``inputs`` symbols."""
        out = [self.updates.get(d.name, bx.var(d.name, d.width)) for d in decls]
        mapping = {}
        if state:
            mapping.update(state)
        if inputs:
            mapping.update(inputs)
        return bx.substitute(out, mapping) if mapping else out

    def then(self, other: "TransitionRelation", decls: Sequence[VarDecl]) -> "TransitionRelation":
        """Sequential composition ``self ; other``."""
        clash = set(self.inputs) & set(other.inputs)
        if clash:
            raise ValueError(f"input symbols shared between composed relations: {sorted(clash)}")
        mid = {d.name: self.updates.get(d.name, bx.var(d.name, d.width)) for d in decls}
        ups = dict(self.updates)
        for name, e in other.updates.items():
            ups[name] = bx.substitute(e, mid)
        inputs = {**self.inputs, **other.inputs}
        return TransitionRelation(_drop_identity(ups, decls), inputs)

    @property
    def is_identity(self) -> bool:
        return not self.updates


def _drop_identity(ups, decls):
    out = {}
    for d in decls:
        e = ups.get(d.name)
        if e is not None and not (e.op == "var" and e.val == d.name):
            out[d.name] = e
    return out


IDENTITY = TransitionRelation()

# ---------------------------------------------------------------- evaluation


def evaluate(e: BvExpr, env: Mapping[str, int]) -> int:
    """Value of ``e`` as an unsigned bit pattern; ``env`` maps symbol names to patterns."""
    return evaluate_many([e], env)[0]


def evaluate_many(roots: Sequence[BvExpr], env: Mapping[str, int]) -> list[int]:
    vals: dict[int, int] = {}
    for node in bx.topo(roots):
        if node.op == "const":
            v = node.val
        elif node.op == "var":
            try:
                v = env[node.val]
            except KeyError:
                raise EvalError(f"unbound symbol {node.val!r}") from None
            if not 0 <= v <= mask(node.width):
                raise EvalError(f"value {v} of {node.val!r} does not fit {node.width} bits")
        else:
            args = tuple(vals[id(a)] for a in node.args)
            v = scalar_op(node.op, args, node.args[0].width if node.op != "ite" else node.width,
                          node.width)
        vals[id(node)] = v
    return [vals[id(r)] for r in roots]


def eval(e: BvExpr, s: Mapping[str, int], inputs: Mapping[str, int] | None = None) -> Word:  # noqa: A001
    env = dict(s)
    if inputs:
        env.update(inputs)
    return Word(e.width, evaluate(e, env))


def evaluate_vec(roots: Sequence[BvExpr], env: Mapping[str, np.ndarray]) -> list[np.ndarray]:
    """Vectorised evaluation; ``env`` maps symbols to equal-length ``uint64`` arrays."""
    n = len(next(iter(env.values()))) if env else 1
    vals: dict[int, np.ndarray] = {}
    for node in bx.topo(roots):
        if node.op == "const":
            v = np.full(n, node.val, dtype=np.uint64)
        elif node.op == "var":
            try:
                v = env[node.val]
            except KeyError:
                raise EvalError(f"unbound symbol {node.val!r}") from None
        else:
            args = tuple(vals[id(a)] for a in node.args)
            w_in = node.args[0].width if node.op != "ite" else node.width
            v = vector_op(node.op, args, w_in, node.width)
        vals[id(node)] = v
    return [vals[id(r)] for r in roots]


# ---------------------------------------------------------------- stepping


def input_valuations(inputs: Mapping[str, int]) -> Iterable[dict[str, int]]:
    names = list(inputs)
    for combo in itertools.product(*(range(1 << inputs[n]) for n in names)):
        yield dict(zip(names, combo))


def step(t: TransitionRelation, s: Mapping[str, int], decls: Sequence[VarDecl] | None = None) -> list[State]:
    """All successors of ``s``; nondet inputs are enumerated over their full width."""
    names = [d.name for d in decls] if decls else list(s)
    exprs = [t.updates.get(n) for n in names]
    roots = [e for e in exprs if e is not None]
    out, seen = [], set()
    for inp in input_valuations(t.inputs):
        env = {**s, **inp}
        vals = iter(evaluate_many(roots, env)) if roots else iter(())
        nxt = {n: (next(vals) if e is not None else s[n]) for n, e in zip(names, exprs)}
        key = tuple(nxt[n] for n in names)
        if key not in seen:
            seen.add(key)
            out.append(nxt)
    return out


def apply(t: TransitionRelation, s: Mapping[str, int], inputs: Mapping[str, int] | None = None) -> State:
    """The successor of ``s`` for one fixed choice of the nondet inputs (missing ones are 0)."""
    env = dict(s)
    for name in t.inputs:
        env[name] = (inputs or {}).get(name, 0)
    names = list(t.updates)
    vals = evaluate_many([t.updates[n] for n in names], env)
    nxt = dict(s)
    nxt.update(zip(names, vals))
    return nxt


def is_deterministic(t: TransitionRelation, decls: Sequence[VarDecl]) -> bool:
    """True iff every nondet valuation yields the same successor (one validity check)."""
    if not t.inputs:
        return True
    from .satcore import check

    alt = {n: bx.var(f"{n}#alt", w) for n, w in t.inputs.items()}
    a = t.successor_exprs(decls)
    b = t.successor_exprs(decls, inputs=alt)
    differs = bx.disj(*(bx.ne(x, y) for x, y in zip(a, b)))
    return check(differs).unsat
