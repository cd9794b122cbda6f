"""Bit-blasting and the CDCL engine, checked against exhaustive evaluation and pysat."""
import itertools
import sys
import textwrap

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvterm.satcore import CancelToken, Cnf, SolverLimit, bitblast, check, solve
from bvterm.satcore import expr as bx
from bvterm.satcore.solver import parse_solver_output, solve_external
from bvterm.semantics import evaluate
from bvterm.words import BINARY_OPS, COMPARE_OPS, scalar_op

WIDTHS = [1, 2, 3]


def _batched(op, w_in, w_out, arity):
    """One formula holding a fresh copy of ``op`` for every operand tuple; returns (formula, cases)."""
    parts, cases = [], []
    domain = [range(2)] + [range(1 << w_in)] * 2 if op == "ite" else [range(1 << w_in)] * arity
    for k, vals in enumerate(itertools.product(*domain)):
        args = []
        for i, v in enumerate(vals):
            width = 1 if op == "ite" and i == 0 else w_in
            a = bx.var(f"a{k}_{i}", width)
            parts.append(bx.eq(a, bx.const(v, width)))
            args.append(a)
        if op == "ite":
            node = bx.ite(*args)
        elif op in ("zext", "sext", "trunc"):
            node = bx.cast(op, args[0], w_out)
        elif arity == 1:
            node = bx.unop(op, args[0])
        else:
            node = bx.binop(op, *args)
        r = bx.var(f"r{k}", w_out)
        parts.append(bx.eq(r, node))
        cases.append((f"r{k}", vals))
    return bx.conj(*parts), cases


def _run(op, w_in, w_out, arity):
    formula, cases = _batched(op, w_in, w_out, arity)
    res = check(formula)
    assert res.sat
    for name, vals in cases:
        assert res.model[name] == scalar_op(op, vals, w_in, w_out), (op, w_in, vals)
    return len(cases)


@pytest.mark.parametrize("w", WIDTHS)
@pytest.mark.parametrize("op", sorted(set(BINARY_OPS) | set(COMPARE_OPS)))
def test_blast_binary_exhaustive(op, w):
    _run(op, w, 1 if op in COMPARE_OPS else w, 2)


@pytest.mark.parametrize("w", WIDTHS)
@pytest.mark.parametrize("op", ["neg", "not", "ite"])
def test_blast_unary_and_ite_exhaustive(op, w):
    _run(op, w, w, 1 if op != "ite" else 3)


@pytest.mark.parametrize("op", ["zext", "sext", "trunc"])
def test_blast_casts_exhaustive(op):
    for w_in, w_out in itertools.product([1, 2, 3, 4], repeat=2):
        if (op == "trunc") == (w_out < w_in) and w_out != w_in:
            _run(op, w_in, w_out, 1)


# ---------------------------------------------------------------- examples

def test_wraparound_model():
    x = bx.var("x", 2)
    res = check(bx.eq(x + 1, bx.const(0, 2)))
    assert res.sat and res.model["x"] == 3


def test_successor_not_always_larger():
    x = bx.var("x", 2)
    inc = bx.ult(x, x + 1)
    sat = check(bx.conj(bx.ult(bx.const(0, 2), x), inc))
    assert sat.sat and sat.model["x"] in (1, 2)
    cex = check(bx.neg(inc))
    assert cex.sat and cex.model["x"] == 3


def test_false_is_unsat():
    assert check(bx.FALSE).unsat
    assert check(bx.conj(bx.var("p", 1), bx.neg(bx.var("p", 1)))).unsat


def test_clause_examples():
    res = solve(Cnf(2, [[1, 2], [-1]]))
    assert res.sat and res.value(2) == 1 and res.value(1) == 0
    assert solve(Cnf(1, [[1], [-1]])).unsat


def test_powers_of_two_width3():
    x = bx.var("x", 3)
    c = lambda v: bx.const(v, 3)  # noqa: E731
    e = bx.conj(bx.eq(x & (x - 1), c(0)), *(bx.ne(x, c(v)) for v in (0, 1, 2, 4)))
    assert check(e).unsat
    # the same formula with 4 allowed has exactly that model
    e4 = bx.conj(bx.eq(x & (x - 1), c(0)), *(bx.ne(x, c(v)) for v in (0, 1, 2)))
    assert check(e4).model["x"] == 4
    # independent count of powers of two
    assert [v for v in range(8) if v and not v & (v - 1)] == [1, 2, 4]


def test_empty_clause_and_empty_formula():
    assert solve(Cnf(0, [])).sat
    assert solve(Cnf(1, [[]])).unsat


def test_determinism_same_seed():
    x, y = bx.var("x", 6), bx.var("y", 6)
    e = bx.conj(bx.eq(bx.binop("mul", x, y), bx.const(36, 6)), bx.ult(bx.const(1, 6), x))
    a = [check(e, seed=7).model.values for _ in range(3)]
    assert a[0] == a[1] == a[2]


def pigeonhole(holes):
    """holes+1 pigeons into ``holes`` holes: unsatisfiable and exponential for resolution."""
    var = lambda p, h: p * holes + h + 1  # noqa: E731
    clauses = [[var(p, h) for h in range(holes)] for p in range(holes + 1)]
    for h in range(holes):
        for p, q in itertools.combinations(range(holes + 1), 2):
            clauses.append([-var(p, h), -var(q, h)])
    return Cnf((holes + 1) * holes, clauses)


def test_cancel_token_stops_search():
    tok = CancelToken()
    tok.cancel()
    with pytest.raises(SolverLimit):
        solve(pigeonhole(9), cancel=tok)


def test_conflict_limit():
    with pytest.raises(SolverLimit):
        solve(pigeonhole(9), max_conflicts=5)


def test_small_pigeonhole_unsat():
    assert solve(pigeonhole(4)).unsat


# ---------------------------------------------------------------- DIMACS and external engines

def test_dimacs_round_trip():
    cnf, _ = bitblast(bx.eq(bx.var("x", 3) + 3, bx.const(1, 3)))
    again = Cnf.from_dimacs(cnf.to_dimacs())
    assert again.nvars == cnf.nvars
    assert [list(c) for c in again.clauses] == [list(c) for c in cnf.clauses]


def test_dimacs_parse_comments():
    cnf = Cnf.from_dimacs("c hello\np cnf 3 2\n1 -3 0\n2 3\n-1 0\n")
    assert cnf.nvars == 3
    assert [list(c) for c in cnf.clauses] == [[1, -3], [2, 3, -1]]


def test_parse_solver_output():
    sat = parse_solver_output("c x\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 3)
    assert sat.sat and [sat.value(i) for i in (1, 2, 3)] == [1, 0, 1]
    assert parse_solver_output("s UNSATISFIABLE\n", 3).unsat
    with pytest.raises(SolverLimit):
        parse_solver_output("garbage\n", 3)


try:
    from pysat import solvers as pysat_solvers
except ImportError:  # optional test dependency
    pysat_solvers = None
needs_pysat = pytest.mark.skipif(pysat_solvers is None, reason="pysat not installed")


def _pysat(cnf):
    if pysat_solvers is None:
        return None
    with pysat_solvers.Minisat22(bootstrap_with=[list(map(int, c)) for c in cnf.clauses]) as s:
        return s.solve()


@pytest.fixture
def pysat_command(tmp_path):
    script = tmp_path / "extsat.py"
    script.write_text(textwrap.dedent("""
        import sys
        from pysat.formula import CNF
        from pysat.solvers import Minisat22
        f = CNF(from_file=sys.argv[1])
        with Minisat22(bootstrap_with=f.clauses) as s:
            if s.solve():
                print("s SATISFIABLE")
                print("v " + " ".join(map(str, s.get_model())) + " 0")
            else:
                print("s UNSATISFIABLE")
    """))
    return f"{sys.executable} {script}"


@needs_pysat
def test_external_engine(pysat_command, monkeypatch):
    x = bx.var("x", 4)
    e = bx.eq(bx.binop("mul", x, x), bx.const(9, 4))
    cnf, vmap = bitblast(e)
    res = solve_external(cnf, pysat_command)
    assert res.sat
    val = sum(res.value(l) << i for i, l in enumerate(vmap["x"]))
    assert (val * val) % 16 == 9
    monkeypatch.setenv("BVT_EXTERNAL_SAT", pysat_command)
    assert check(bx.conj(e, bx.eq(x, bx.const(2, 4)))).unsat
    assert (check(e).model["x"] ** 2) % 16 == 9


# ---------------------------------------------------------------- random DAG soundness

BIN = sorted(set(BINARY_OPS) | set(COMPARE_OPS))


@st.composite
def dags(draw, w=3, names=("x", "y")):
    pool = [bx.var(n, w) for n in names]
    for _ in range(draw(st.integers(1, 6))):
        kind = draw(st.sampled_from(["bin", "un", "ite", "const"]))
        if kind == "const":
            pool.append(bx.const(draw(st.integers(0, (1 << w) - 1)), w))
            continue
        wide = [e for e in pool if e.width == w]
        a, b = draw(st.sampled_from(wide)), draw(st.sampled_from(wide))
        if kind == "bin":
            op = draw(st.sampled_from(BIN))
            node = bx.binop(op, a, b)
            pool.append(node if node.width == w else bx.ite(node, a, b))
        elif kind == "un":
            pool.append(bx.unop(draw(st.sampled_from(["neg", "not"])), a))
        else:
            c = bx.ult(draw(st.sampled_from(wide)), b)
            pool.append(bx.ite(c, a, b))
    top = pool[-1]
    rel = draw(st.sampled_from(["eq", "ult", "slt", "ne"]))
    return w, bx.binop(rel, top, bx.const(draw(st.integers(0, (1 << w) - 1)), w))


@settings(max_examples=150, deadline=None)
@given(dags())
def test_random_dag_soundness(we):
    _, e = we
    sols = [(a, b) for a in range(8) for b in range(8) if evaluate(e, {"x": a, "y": b})]
    res = check(e)
    assert res.sat == bool(sols)
    if res.sat:
        assert evaluate(e, {"x": res.model["x"], "y": res.model["y"]}) == 1
    if not e.is_const and pysat_solvers is not None:
        assert _pysat(bitblast(e)[0]) == res.sat


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 2).flatmap(lambda w: dags(w=w)))
def test_random_dag_soundness_narrow(we):
    w, e = we
    n = 1 << w
    sols = [(a, b) for a in range(n) for b in range(n) if evaluate(e, {"x": a, "y": b})]
    assert check(e).sat == bool(sols)
