"""Random single-loop programs in the mini-C grammar, for differential testing."""
from __future__ import annotations

import random

_ARITH = ["+", "-", "*", "&", "|", "^", "/", "%", "<<", ">>"]
_CMP = ["<", "<=", ">", ">=", "==", "!="]


def _atom(rng: random.Random, names: list[str], width: int) -> str:
    if rng.random() < 0.65:
        return rng.choice(names)
    return str(rng.randrange(0, 1 << width))


def _expr(rng, names, width, depth=0) -> str:
    if depth >= 1 or rng.random() < 0.35:
        return _atom(rng, names, width)
    r = rng.random()
    if r < 0.1:
        return f"-{rng.choice(names)}"
    if r < 0.15:
        return f"~{rng.choice(names)}"
    op = rng.choice(_ARITH)
    return f"({_expr(rng, names, width, depth + 1)} {op} {_atom(rng, names, width)})"


def _cond(rng, names, width) -> str:
    c = f"{rng.choice(names)} {rng.choice(_CMP)} {_atom(rng, names, width)}"
    r = rng.random()
    if r < 0.15:
        c2 = f"{rng.choice(names)} {rng.choice(_CMP)} {_atom(rng, names, width)}"
        return f"{c} {rng.choice(['&&', '||'])} {c2}"
    return c


def _stmt(rng, names, width, allow_if=True) -> str:
    r = rng.random()
    target = rng.choice(names)
    if r < 0.12:
        return f"{target} = nondet();"
    if allow_if and r < 0.3:
        then = _stmt(rng, names, width, False)
        if rng.random() < 0.5:
            return f"if ({_cond(rng, names, width)}) {{ {then} }}"
        other = _stmt(rng, names, width, False)
        return f"if ({_cond(rng, names, width)}) {{ {then} }} else {{ {other} }}"
    return f"{target} = {_expr(rng, names, width)};"


def random_loop(seed: int, width: int = 3, max_vars: int = 2, max_stmts: int = 3,
                prefix_prob: float = 0.25) -> str:
    """Source of one loop over 1..``max_vars`` variables with up to ``max_stmts`` body statements."""
    rng = random.Random(seed)
    names = ["x", "y"][: rng.randint(1, max_vars)]
    signed = rng.random() < 0.4
    decls = [f"{'i' if signed else 'u'}{width} {n};" for n in names]
    lines = list(decls)
    if rng.random() < prefix_prob:
        lines.append(f"{rng.choice(names)} = {_atom(rng, names, width)};")
    body = [_stmt(rng, names, width) for _ in range(rng.randint(1, max_stmts))]
    lines.append(f"while ({_cond(rng, names, width)}) {{")
    lines.extend("  " + s for s in body)
    lines.append("}")
    return "\n".join(lines) + "\n"
