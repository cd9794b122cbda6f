import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bvterm.checker import check_proof, oracle_decide
from bvterm.encoder import Obligation
from bvterm.frontend import load
from bvterm.llang import interpret, to_text
from bvterm.loops import replay
from bvterm.proof import NONTERMINATING, TERMINATING, UNKNOWN
from bvterm.synthesis.cegis import RankCegis, harvest_constants, select_conjunction
from bvterm.synthesis.driver import Budget, solve_gt
from bvterm.synthesis.lasso import Simulator, corner_values, sample_states

from conftest import fixture_nest
from reference import op


def drive(searcher):
    gen = searcher.run()
    try:
        while True:
            next(gen)
    except StopIteration as stop:
        return stop.value


def rank_search(nest, **kw):
    s = RankCegis(Obligation("UT", nest, nest.loops[0]), harvest_constants(nest, nest.width), **kw)
    return s, drive(s)


# ---------------------------------------------------------------- CEGIS on ranks

def test_first_candidate_is_identity_and_it_works_for_fig2a():
    s, cand = rank_search(fixture_nest("fig2a.c"))
    assert to_text(s.history[0].holes["R"]) == "out in0"
    assert cand is s.history[0]
    assert s.iterations == 1


def test_rejected_identity_is_followed_by_a_new_candidate():
    # x++ under x > 0 grows x, so R = x fails and the search must move on
    s, cand = rank_search(fixture_nest("fig2c.c", width=4))
    assert to_text(s.history[0].holes["R"]) == "out in0"
    assert len(s.history) >= 2
    texts = [to_text(c.holes["R"]) for c in s.history]
    assert len(set(texts)) == len(texts)
    assert cand is s.history[-1]


def _fig2b_step(x, w):
    # x = -x / 2 over signed w-bit words, truncating division
    neg = op("neg", [x], w)
    return op("div", [neg, 2], w)


@pytest.mark.parametrize("w", [3, 4, 5])
def test_fig2b_rank_decreases_on_every_state(w):
    s, cand = rank_search(fixture_nest("fig2b.c", width=w))
    assert cand is not None
    R = cand.holes["R"]
    for x in range(1, 1 << w):
        x2 = _fig2b_step(x, w)
        assert interpret(R, [x2])[0] < interpret(R, [x])[0], (x, x2)


def test_fig2i_needs_two_components_at_width_4():
    nest = fixture_nest("fig2i.c", width=4)
    s, cand = rank_search(nest, max_ranks=1, max_size=4)
    assert cand is None
    s, cand = rank_search(nest, max_ranks=2)
    assert cand is not None
    assert len(cand.holes["R"].outputs) == 2


def test_size_bound_exhausted_returns_none():
    s, cand = rank_search(fixture_nest("selfloop.c"), max_size=2)
    assert cand is None
    assert all(len(c.holes["R"]) <= 2 for c in s.history)


def test_harvest_constants_collects_program_literals():
    nest = load("u8 x; while (x > 37) { x = x - 5; }")
    cs = harvest_constants(nest, 8)
    assert {37, 5, 0, 1} <= set(cs)
    assert all(0 <= c < 256 for c in cs)


# ---------------------------------------------------------------- conjunction selection

def _closed_and_clean(T, chosen, neg, a, b):
    inside = T[chosen].all(axis=0) if chosen else np.ones(T.shape[1], dtype=bool)
    if inside[list(neg)].any():
        return False
    return not (inside[a] & ~inside[b]).any()


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 5), st.integers(2, 7), st.data())
def test_select_conjunction_matches_brute_force(k, npts, data):
    T = np.array(data.draw(st.lists(st.lists(st.booleans(), min_size=npts, max_size=npts),
                                    min_size=k, max_size=k)), dtype=bool)
    neg = data.draw(st.sets(st.integers(0, npts - 1), max_size=3))
    pairs = data.draw(st.lists(st.tuples(st.integers(0, npts - 1), st.integers(0, npts - 1)), max_size=4))
    a = np.array([p[0] for p in pairs], dtype=np.int64)
    b = np.array([p[1] for p in pairs], dtype=np.int64)
    got = select_conjunction(T, neg, a, b)
    exists = any(_closed_and_clean(T, list(c), neg, a, b)
                 for r in range(k + 1) for c in itertools.combinations(range(k), r))
    if got is None:
        assert not exists
    else:
        assert _closed_and_clean(T, got, neg, a, b)


def test_select_conjunction_empty_when_nothing_to_exclude():
    T = np.array([[True, False], [False, True]])
    assert select_conjunction(T, set(), np.zeros(0, np.int64), np.zeros(0, np.int64)) == []


# ---------------------------------------------------------------- lasso search

def test_selfloop_lassos_are_one_step_cycles():
    nest = fixture_nest("selfloop.c")
    sim = Simulator(nest)
    init = np.arange(16, dtype=np.uint64).reshape(16, 1)
    lassos = sim.find_lassos(init, [("const", 0)], np.zeros(16, np.int64), 64, limit=32)
    assert sorted(l.init["x"] for l in lassos) == list(range(1, 16))
    for l in lassos:
        assert len(l.cycle) == 1 and l.cycle[0][1] == l.init


def test_lasso_replays_into_its_own_cycle():
    nest = load("u4 x; u4 y; while (x != 3) { y = nondet(); x = x + y; }")
    sim = Simulator(nest)
    rng = np.random.default_rng(1)
    init = sample_states(nest.decls, rng, 64)
    policies = [("const", 0), ("const", 5), ("var", 1)]
    lassos = sim.find_lassos(init, policies, np.arange(64) % 3, 200, limit=20)
    assert lassos
    for l in lassos:
        visits = list(itertools.islice(replay(nest, l.init, l.choices), len(l.stem) + len(l.cycle) + 1))
        states = [s for _, s in visits]
        assert states[: len(l.stem) + len(l.cycle)] == [s for _, s, _ in l.stem + l.cycle]
        assert states[-1] == l.cycle[0][1]
        assert all(s["x"] != 3 for s in states)


def test_terminating_loop_has_no_lassos():
    nest = fixture_nest("fig2a.c", width=4)
    sim = Simulator(nest)
    init = np.arange(16, dtype=np.uint64).reshape(16, 1)
    assert sim.find_lassos(init, [("const", 0)], np.zeros(16, np.int64), 200) == []


def test_sample_states_mixes_corners_and_respects_width():
    nest = load("u3 a; i8 b; while (a > 0) { a = a - 1; }")
    rows = sample_states(nest.decls, np.random.default_rng(0), 400)
    assert rows.shape == (400, 2)
    assert rows[:, 0].max() < 8 and rows[:, 1].max() < 256
    assert np.isin(rows[:, 1], corner_values(8)).mean() > 0.4


# ---------------------------------------------------------------- driver

@pytest.mark.parametrize("name,width,expected", [
    ("fig2a.c", None, TERMINATING),
    ("fig2d_w4.c", None, NONTERMINATING),
    ("fig2g.c", None, TERMINATING),
    ("selfloop.c", None, NONTERMINATING),
    ("nest_nonterm.c", None, NONTERMINATING),
])
def test_solve_gt_examples(name, width, expected):
    nest = fixture_nest(name, width)
    v = solve_gt(nest, Budget(timeout=60))
    assert v.status == expected
    assert check_proof(nest, v.artifact).valid
    assert v.stats["side"] == ("term" if expected == TERMINATING else "nonterm")


@pytest.mark.parametrize("name", ["fig2a.c", "fig2d_w4.c", "open_recurrence.c"])
def test_threaded_mode_agrees(name):
    nest = fixture_nest(name)
    a = solve_gt(nest, Budget(timeout=60))
    b = solve_gt(nest, Budget(timeout=60, threads=True))
    assert a.status == b.status != UNKNOWN
    assert check_proof(nest, b.artifact).valid


def test_one_sided_modes():
    nest = fixture_nest("fig2a.c", width=4)
    assert solve_gt(nest, Budget(timeout=30), mode="terminate").status == TERMINATING
    v = solve_gt(nest, Budget(timeout=2, max_size=2), mode="nonterminate")
    assert v.status == UNKNOWN and v.artifact is None
    with pytest.raises(ValueError):
        solve_gt(nest, mode="sideways")


def test_unknown_when_size_bound_is_too_small():
    nest = fixture_nest("fig2i.c", width=4)
    v = solve_gt(nest, Budget(timeout=30, max_size=0), mode="terminate")
    assert v.status == UNKNOWN
    assert "exhausted" in v.reason


def test_deep_nesting_is_unsupported_for_termination():
    src = """u3 i; u3 j; u3 k;
    while (i < 3) { j = 0; while (j < 3) { k = 0; while (k < 3) { k++; } j++; } i++; }"""
    nest = load(src)
    v = solve_gt(nest, Budget(timeout=20), mode="terminate")
    assert v.status == UNKNOWN
    assert "nested" in v.reason


def test_same_seed_same_proof():
    nest = fixture_nest("fig2b.c", width=5)
    a = solve_gt(nest, Budget(timeout=30, seed=3))
    b = solve_gt(nest, Budget(timeout=30, seed=3))
    assert [to_text(p) for p in a.artifact.holes().values()] == \
        [to_text(p) for p in b.artifact.holes().values()]


@pytest.mark.parametrize("seed", range(0, 60, 3))
def test_verdicts_agree_with_the_oracle_on_random_loops(seed):
    from bvterm.randprog import random_loop
    nest = load(random_loop(seed, width=3))
    v = solve_gt(nest, Budget(timeout=20))
    truth = oracle_decide(nest)
    if v.status != UNKNOWN:
        assert v.status == truth.verdict, random_loop(seed, width=3)


def test_proofs_do_not_depend_on_hash_seed_or_allocation():
    import os
    import subprocess
    import sys
    script = ("import json, sys\n"
              "from bvterm.frontend import load\n"
              "from bvterm.randprog import random_loop\n"
              "from bvterm.synthesis import Budget, solve_gt\n"
              "for s in range(40):\n"
              "    v = solve_gt(load(random_loop(s, width=3)), Budget(timeout=20))\n"
              "    d = json.loads(v.artifact.dumps()) if v.artifact else {}\n"
              "    d.pop('stats', None)\n"
              "    print(json.dumps(d, sort_keys=True))\n")
    outs = [subprocess.run([sys.executable, "-c", script], capture_output=True, text=True, check=True,
                           env=dict(os.environ, PYTHONHASHSEED=str(h))).stdout for h in (1, 2)]
    assert outs[0] == outs[1]
