"""End-to-end acceptance checks. Each prints one ``criterion N: PASS|FAIL`` line.

Run alone with ``python3 -m pytest tests/test_acceptance.py -v -s``.
"""
import itertools
import random
import time

import pytest

from bvterm.checker import oracle_decide, validate_proof
from bvterm.frontend import load
from bvterm.llang import (ARITY, LInstr, LProgram, Operand, enumerate_programs, from_text,
                          interpret, symbolize, validate)
from bvterm.proof import NONTERMINATING, TERMINATING, UNKNOWN, LoopProof, ProofArtifact
from bvterm.randprog import random_loop
from bvterm.satcore import check
from bvterm.satcore import expr as bx
from bvterm.semantics import evaluate, step
from bvterm.synthesis import Budget, solve_gt
from bvterm.words import BINARY_OPS, COMPARE_OPS

from conftest import FIXTURES, fixture_nest

pytestmark = pytest.mark.slow

# every artifact emitted during this module, re-validated by criterion 4
EMITTED = []


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def prove(nest, timeout):
    t0 = time.perf_counter()
    v = solve_gt(nest, Budget(timeout=timeout))
    dt = time.perf_counter() - t0
    if v.artifact is not None:
        EMITTED.append((nest, v.artifact))
    return v, dt


# ---------------------------------------------------------------- 1

CRIT1 = [("fig2a.c", TERMINATING), ("fig2b.c", TERMINATING), ("fig2c.c", TERMINATING),
         ("fig2g.c", TERMINATING), ("fig2h.c", TERMINATING), ("fig2i.c", TERMINATING),
         ("fig2d_w4.c", NONTERMINATING)]


def test_criterion_1_verdicts(capsys):
    rows, ok = [], True
    for name, expected in CRIT1:
        nest = fixture_nest(name)
        v, dt = prove(nest, 120)
        good = v.status == expected and dt <= 120
        if name == "fig2i.c" and good:
            good = len(v.artifact.loops[0].holes["R"].outputs) == 2
        ok &= good
        rows.append(f"{name[:-2]}@{nest.width}={v.status[0]}:{dt:.1f}s")
    report(capsys, 1, ok, " ".join(rows))
    assert ok


# ---------------------------------------------------------------- 2

def _witness(nest, kind, **holes):
    n = len(nest.decls)
    progs = {k: from_text(t, nest.width, n) for k, t in holes.items()}
    return ProofArtifact(TERMINATING, nest.width, [LoopProof(0, kind, progs)])


def _stated_witnesses():
    a = validate_proof(fixture_nest("fig2a.c"), _witness(fixture_nest("fig2a.c"), "UT", R="out in0"))
    h = validate_proof(fixture_nest("fig2h.c"),
                       _witness(fixture_nest("fig2h.c"), "CT", R="out in0", W="r0 = eq in1, 1\nout r0"))
    i = validate_proof(fixture_nest("fig2i.c"),
                       _witness(fixture_nest("fig2i.c"), "CT", R="r0 = lt in0, in1\nout r0, in2", W="out 1"))
    return a, h, i


def test_criterion_2_witnesses_a_and_h():
    a, h, _ = _stated_witnesses()
    assert a and h


@pytest.mark.xfail(strict=True, reason="(x<y, z) with W=true is not a valid rank at width 8: "
                   "(1,2,1) steps to (0,1,255) when nondet() returns 0")
def test_criterion_2_witnesses(capsys):
    a, h, i = _stated_witnesses()
    report(capsys, 2, a and h and i, f"(a) {'accepted' if a else 'rejected'}, "
           f"(h) {'accepted' if h else 'rejected'}, (i) {'accepted' if i else 'rejected'}")
    assert a and h and i


# ---------------------------------------------------------------- 3

def test_criterion_3_oracle_differential(capsys):
    seeds = range(10_000, 10_200)
    decided = agree = unknown = 0
    wrong = []
    for seed in seeds:
        nest = load(random_loop(seed, width=3, max_vars=2, max_stmts=3))
        v, _ = prove(nest, 60)
        truth = oracle_decide(nest).verdict
        if v.status == UNKNOWN:
            unknown += 1
            continue
        decided += 1
        if v.status == truth:
            agree += 1
        else:
            wrong.append(seed)
    rate = unknown / len(seeds)
    ok = not wrong and rate <= 0.05
    report(capsys, 3, ok, f"{len(seeds)} loops, {agree}/{decided} decided agree, unknown {rate:.1%}"
           + (f", disagree at seeds {wrong}" if wrong else ""))
    assert ok


# ---------------------------------------------------------------- 4

def mutate(art, rng):
    """Copy of ``art`` with one instruction changed: a different opcode of equal arity, or one operand."""
    sites = [(i, name, j) for i, lp in enumerate(art.loops) for name, p in lp.holes.items()
             for j in range(len(p.instrs))]
    while True:
        i, name, j = rng.choice(sites)
        p = art.loops[i].holes[name]
        op, args = p.instrs[j]
        if rng.random() < 0.4:
            ops = [o for o, a in ARITY.items() if a == len(args) and o != op]
            ins = LInstr(rng.choice(ops), args)
        else:
            choices = [Operand("const", rng.randrange(1 << p.width)), Operand("in", rng.randrange(p.arity))]
            if j:
                choices.append(Operand("reg", rng.randrange(j)))
            new = list(args)
            new[rng.randrange(len(args))] = rng.choice(choices)
            ins = LInstr(op, tuple(new))
        q = LProgram(p.width, p.arity, p.instrs[:j] + (ins,) + p.instrs[j + 1:], p.outputs)
        if q.instrs == p.instrs or validate(q) is not None:
            continue
        loops = [LoopProof(lp.loop, lp.kind, dict(lp.holes)) for lp in art.loops]
        loops[i].holes[name] = q
        return ProofArtifact(art.verdict, art.width, loops, art.x0, art.trace), name, p, q


WORD_HOLES = {"R", "R1", "R2", "C"}  # the rest are read as predicates: nonzero first output


def equivalent(hole, p, q):
    """``p`` and ``q`` mean the same in ``hole`` on every input, decided by one SAT query."""
    xs = [bx.var(f"in{k}", p.width) for k in range(p.arity)]
    a, b = symbolize(p, xs), symbolize(q, xs)
    if hole not in WORD_HOLES:
        a, b = [bx.truthy(a[0])], [bx.truthy(b[0])]
    return check(bx.disj(*[bx.ne(u, v) for u, v in zip(a, b)])).unsat


def brute_valid(nest, art):
    """Exhaustive re-check of a single-loop UT/CNT/SNT artifact; ``None`` when out of reach."""
    (lp,) = art.loops
    if len(nest.loops) != 1 or lp.kind not in ("UT", "CNT", "SNT") or nest.width > 4 \
            or any(d.width != art.width for d in nest.decls):
        return None
    loop, names = nest.loops[0], [d.name for d in nest.decls]
    states = [dict(zip(names, v)) for v in itertools.product(range(1 << nest.width), repeat=len(names))]
    row = lambda s: [s[n] for n in names]  # noqa: E731
    if lp.kind == "UT":
        R = lp.holes["R"]
        for s in filter(lambda s: evaluate(loop.guard, s), states):
            z = interpret(R, row(s))
            for t in step(loop.body, s, nest.decls):
                z2 = interpret(R, row(t))
                k = next((i for i, (a, b) in enumerate(zip(z, z2)) if a != b), None)
                if k is None or not 0 < z[k] > z2[k]:
                    return False
        return True
    N = lp.holes["N"]
    inside = [s for s in states if interpret(N, row(s))[0]]
    if dict(art.x0) not in inside or not all(evaluate(loop.guard, s) for s in inside):
        return False
    keep = all if lp.kind == "CNT" else any
    return all(keep(interpret(N, row(t))[0] for t in step(loop.body, s, nest.decls)) for s in inside)


def test_brute_valid_agrees_on_known_artifacts():
    nest = fixture_nest("selfloop.c")
    good = ProofArtifact(NONTERMINATING, 4, [LoopProof(0, "CNT", {"N": from_text("r0 = neq in0, 0\nout r0", 4, 1)})],
                         {"x": 1})
    assert brute_valid(nest, good)
    good.loops[0].holes["N"] = from_text("out 1", 4, 1)
    assert brute_valid(nest, good) is False
    nest = fixture_nest("fig2a.c", width=4)
    assert brute_valid(nest, _witness(nest, "UT", R="out in0"))
    assert brute_valid(nest, _witness(nest, "UT", R="r0 = neg in0\nout r0")) is False


def test_criterion_4_validity_gate(capsys):
    pool = list(EMITTED)
    for f in sorted(FIXTURES.glob("*.c")):
        if f.name != "fig2d.c":  # the width-8 variant is covered by bench
            pool.append((load(f), prove(load(f), 60)[0].artifact))
    pool = [(n, a) for n, a in pool if a is not None]
    valid = sum(validate_proof(n, a) for n, a in pool)
    mutable = [(n, a) for n, a in pool
               if any(len(p.instrs) for lp in a.loops for p in lp.holes.values())]
    rng = random.Random(0)
    rejected = tried = skipped = 0
    survivors = []
    while tried < 100:
        nest, art = rng.choice(mutable)
        mutant, hole, before, after = mutate(art, rng)
        if equivalent(hole, before, after):
            skipped += 1  # an equivalent mutant is the same proof
            continue
        tried += 1
        if validate_proof(nest, mutant):
            survivors.append(brute_valid(nest, mutant))
        else:
            rejected += 1
    ok = valid == len(pool) and rejected >= 95 and False not in survivors
    report(capsys, 4, ok, f"{valid}/{len(pool)} emitted artifacts valid, {rejected}/100 mutants rejected "
           f"({skipped} equivalent mutants skipped; {survivors.count(True)}/{len(survivors)} "
           f"survivors confirmed valid by exhaustive search)")
    assert ok


# ---------------------------------------------------------------- 5

def _blast_cases(op, w):
    """Every operand pair of ``op`` at width ``w`` in one formula; returns mismatches and count."""
    parts, cases = [], []
    out_w = 1 if op in COMPARE_OPS else w
    for k, (a, b) in enumerate(itertools.product(range(1 << w), repeat=2)):
        x, y = bx.var(f"a{k}", w), bx.var(f"b{k}", w)
        r = bx.var(f"r{k}", out_w)
        parts += [bx.eq(x, bx.const(a, w)), bx.eq(y, bx.const(b, w)), bx.eq(r, bx.binop(op, x, y))]
        cases.append((k, a, b, out_w))
    res = check(bx.conj(*parts))
    bad = 0
    for k, a, b, out_w in cases:
        want = evaluate(bx.binop(op, bx.const(a, w), bx.const(b, w)), {})
        bad += res.model[f"r{k}"] != want
    return bad, len(cases)


def _blast_unary(op, w):
    parts = []
    for a in range(1 << w):
        x, r = bx.var(f"a{a}", w), bx.var(f"r{a}", w)
        parts += [bx.eq(x, bx.const(a, w)), bx.eq(r, bx.unop(op, x))]
    res = check(bx.conj(*parts))
    bad = sum(res.model[f"r{a}"] != evaluate(bx.unop(op, bx.const(a, w)), {}) for a in range(1 << w))
    return bad, 1 << w


def _blast_nested(inner, outer, w=2):
    """``outer(inner(a, b), c)`` and ``outer(c, inner(a, b))`` over every (a, b, c)."""
    parts, cases = [], []
    out_w = 1 if outer in COMPARE_OPS else w
    for k, (a, b, c) in enumerate(itertools.product(range(1 << w), repeat=3)):
        x, y, z = (bx.var(f"{n}{k}", w) for n in "abc")
        parts += [bx.eq(x, bx.const(a, w)), bx.eq(y, bx.const(b, w)), bx.eq(z, bx.const(c, w))]
        t = bx.binop(inner, x, y)
        for side, e in (("l", bx.binop(outer, t, z)), ("r", bx.binop(outer, z, t))):
            parts.append(bx.eq(bx.var(f"r{side}{k}", out_w), e))
            cases.append((f"r{side}{k}", e, {f"a{k}": a, f"b{k}": b, f"c{k}": c}))
    res = check(bx.conj(*parts))
    return sum(res.model[name] != evaluate(e, env) for name, e, env in cases), len(cases)


def test_criterion_5_semantics_conformance(capsys):
    mismatches = cases = 0
    for inner in BINARY_OPS:
        for outer in BINARY_OPS + COMPARE_OPS:
            b, c = _blast_nested(inner, outer)
            mismatches, cases = mismatches + b, cases + c
    for w in (1, 2, 3):
        for op in sorted(set(BINARY_OPS) | set(COMPARE_OPS)):
            b, c = _blast_cases(op, w)
            mismatches, cases = mismatches + b, cases + c
        for op in ("neg", "not"):
            b, c = _blast_unary(op, w)
            mismatches, cases = mismatches + b, cases + c
    identity_bad = 0
    for w in range(1, 9):
        x = bx.var("x", w)
        for v in range(1 << w):
            env = {"x": v}
            identity_bad += evaluate(bx.unop("neg", x), env) != evaluate(bx.unop("not", x) + 1, env)
        # and as one SAT query over all x
        identity_bad += check(bx.ne(bx.unop("neg", x), bx.unop("not", x) + 1)).sat
    ok = mismatches == 0 and identity_bad == 0
    report(capsys, 5, ok, f"{cases} eval/bit-blast cases, {mismatches} mismatches; "
           f"-x == ~x+1 failures at widths 1..8: {identity_bad}")
    assert ok


# ---------------------------------------------------------------- 6

def test_criterion_6_unary_functions(capsys):
    found = {}
    for p in enumerate_programs(2, 1, 7, dedup="semantic", constants=[0, 1, 2, 3]):
        found.setdefault(tuple(interpret(p, [x])[0] for x in range(4)), p)
    longest = max(len(p) for p in found.values())
    ok = len(found) == 256 and longest <= 7
    report(capsys, 6, ok, f"{len(found)}/256 width-2 unary functions, longest shortest program {longest}")
    assert ok


# ---------------------------------------------------------------- 7

def test_criterion_7_nested(capsys):
    fig3 = fixture_nest("fig3.c", width=4)
    v3, dt = prove(fig3, 180)
    nn = fixture_nest("nest_nonterm.c", width=3)
    vn, _ = prove(nn, 60)
    ok = (v3.status == TERMINATING and dt <= 180 and v3.artifact.loops[0].kind == "NestedTerm"
          and vn.status == NONTERMINATING and vn.artifact.loops[0].kind == "NestedNonterm")
    report(capsys, 7, ok, f"fig3@4 {v3.status} via {v3.artifact and v3.artifact.loops[0].kind} "
           f"in {dt:.1f}s; nest_nonterm@3 {vn.status}")
    assert ok
