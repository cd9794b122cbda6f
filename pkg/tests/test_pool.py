"""Term pool, hash set and the compiled search kernels (with their numpy twins)."""
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from bvterm.llang import interpret, validate
from bvterm.synthesis.pool import HashSet, TermPool, _row_hashes, _table_insert
from bvterm.synthesis.search import (RankSearch, cover_mask, first_cover, full_mask, pack,
                                     progress_rows)


def grid(width, arity):
    return np.array(list(itertools.product(range(1 << width), repeat=arity)),
                    dtype=np.uint64).reshape(-1, arity)


@pytest.fixture(scope="module")
def pool3():
    p = TermPool(3, 2, grid(3, 2)[::3], [0, 1, 2, 7])
    p.grow(2)
    return p


def test_pool_rows_are_distinct(pool3):
    V = pool3.vals
    assert len({row.tobytes() for row in V}) == len(V)


def test_pool_programs_reproduce_rows(pool3):
    for t in range(0, len(pool3), 7):
        p = pool3.program(t)
        assert validate(p) is None
        assert len(p) <= pool3.size[t]
        got = [interpret(p, list(map(int, pt)))[0] for pt in pool3.points]
        assert got == pool3.vals[t].tolist()


def test_sizes_are_contiguous(pool3):
    for s in range(pool3.max_size + 1):
        r = pool3.ids_of_size(s)
        assert all(pool3.size[t] == s for t in r)


def test_values_at_fresh_points(pool3):
    fresh = grid(3, 2)
    for t in range(0, len(pool3), 31):
        want = [interpret(pool3.program(t), list(map(int, pt)))[0] for pt in fresh]
        assert pool3.values_at(t, fresh).tolist() == want


def test_add_points_extends_columns():
    pts = grid(3, 1)
    pool = TermPool(3, 1, pts[:2], [0, 1])
    pool.grow(2)
    n = len(pool)
    pool.add_points(pts[2:])
    assert pool.stale and len(pool) == n and pool.vals.shape == (n, 8)
    for t in range(n):
        assert pool.vals[t].tolist() == [interpret(pool.program(t), [v])[0] for v in range(8)]
    # growth continues to dedup against the widened sample
    pool.grow(3)
    V = pool.vals[n:]
    assert len({row.tobytes() for row in V}) == len(V)


def test_size_cap_truncates():
    pool = TermPool(4, 2, grid(4, 2), [0, 1], max_new_per_size=50)
    pool.grow(2)
    assert pool.truncated
    lo, hi = pool.size_ranges[2]
    assert hi - lo <= 50


def test_any_condition_reaches_more():
    pts = grid(2, 1)
    strict = TermPool(2, 1, pts, [0, 3])
    loose = TermPool(2, 1, pts, [0, 3], any_condition=True)
    strict.grow(1)
    loose.grow(1)
    row = np.array([0, 3, 3, 3], dtype=np.uint64)  # ite(in0, 3, 0)
    assert (loose.vals == row).all(axis=1).any()
    assert not (strict.vals == row).all(axis=1).any()


# ---------------------------------------------------------------- hashing

def test_row_hash_twins_agree():
    rng = np.random.default_rng(0)
    block = rng.integers(0, 2**63, size=(257, 13), dtype=np.uint64)
    salt = rng.integers(0, 2**63, size=13, dtype=np.uint64)
    a = _row_hashes(block, salt)
    b = _row_hashes.numpy_func(block, salt)
    assert np.array_equal(a, b)
    assert len(set(a.tolist())) == 257


def test_row_hash_empty_columns():
    block = np.zeros((4, 0), dtype=np.uint64)
    assert np.array_equal(_row_hashes(block, np.zeros(0, np.uint64)),
                          _row_hashes.numpy_func(block, np.zeros(0, np.uint64)))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(0, 40), max_size=60), min_size=1, max_size=5),
       st.integers(1, 80))
def test_hashset_modes_agree(batches, room):
    a, b = HashSet(jit=True), HashSet(jit=False)
    seen = set()
    for batch in batches:
        h = np.array(batch, dtype=np.uint64)
        ka, kb = a.insert_new(h, room), b.insert_new(h, room)
        assert np.array_equal(ka, kb)
        # first occurrences of unseen values, capped at ``room``
        want, taken = [], 0
        for v in batch:
            v = v or 1
            new = v not in seen and taken < room
            want.append(new)
            if new:
                seen.add(v)
                taken += 1
        assert ka.tolist() == want
    assert len(a) == len(b) == len(seen)


def test_table_insert_direct():
    table = np.zeros(16, dtype=np.uint64)
    keep = _table_insert(np.array([5, 9, 5, 21], dtype=np.uint64), table, 10)
    assert keep.tolist() == [True, True, False, True]


# ---------------------------------------------------------------- bitset kernels

bitmats = hnp.arrays(np.bool_, st.tuples(st.integers(1, 40), st.integers(1, 150)))


@settings(max_examples=80, deadline=None)
@given(bitmats, st.data())
def test_cover_kernels_agree(bits, data):
    rows, k = bits.shape
    req_bits = data.draw(hnp.arrays(np.bool_, k))
    B, req = pack(bits), pack(req_bits[None, :])[0]
    want = [bool(np.all(bits[r] | ~req_bits)) for r in range(rows)]
    assert cover_mask(B, req).tolist() == want
    assert cover_mask.numpy_func(B, req).tolist() == want
    start = data.draw(st.integers(0, rows))
    first = next((r for r in range(start, rows) if want[r]), -1)
    assert first_cover(B, req, start) == first_cover.numpy_func(B, req, start) == first


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 30), st.integers(1, 140), st.data())
def test_progress_kernels_agree(rows, k, data):
    weak = data.draw(hnp.arrays(np.bool_, (rows, k)))
    strict = weak & data.draw(hnp.arrays(np.bool_, (rows, k)))
    req = data.draw(hnp.arrays(np.bool_, k))
    W, S, R = pack(weak), pack(strict), pack(req[None, :])[0]
    ids, ties = progress_rows(W, S, R)
    ids2, ties2 = progress_rows.numpy_func(W, S, R)
    assert ids.tolist() == ids2.tolist() and ties.tolist() == ties2.tolist()
    want = [r for r in range(rows) if np.all(weak[r] | ~req) and np.any(strict[r] & req)]
    assert ids.tolist() == want
    assert ties.tolist() == [int(np.sum(req & ~strict[r])) for r in want]


def test_pack_layout():
    bits = np.zeros((1, 70), dtype=bool)
    bits[0, [0, 65]] = True
    w = pack(bits)
    assert w.shape == (1, 2) and w[0, 0] == 1 and w[0, 1] == 2
    assert full_mask(70).tolist() == [2**64 - 1, 2**6 - 1]


# ---------------------------------------------------------------- rank search

def _decreases(vals, rank, pre, post):
    """Lexicographic unsigned decrease of ``rank`` on every (pre, post) column pair."""
    for a, b in zip(pre, post):
        for t in rank:
            if vals[t, a] > vals[t, b]:
                break
            if vals[t, a] < vals[t, b]:
                return False
        else:
            return False
    return True


def test_rank_search_scalar_and_lex():
    vals = np.array([[5, 4, 3, 3],    # decreases on pair 0 only, ties pair 1
                     [0, 0, 9, 2],    # ties pair 0, decreases pair 1
                     [1, 2, 1, 2]],   # increases on both
                    dtype=np.uint64)
    pre, post = np.array([0, 2]), np.array([1, 3])
    rs = RankSearch(vals, pre, post)
    req = full_mask(2)
    found = rs.find(req, max_m=1)
    assert found is None
    found = rs.find(req, max_m=2)
    assert found is not None and len(found) == 2
    assert _decreases(vals, found, pre, post)
    assert rs.find(np.zeros_like(req), max_m=1) == (0,)


@settings(max_examples=60, deadline=None)
@given(hnp.arrays(np.uint64, st.tuples(st.integers(1, 12), st.integers(2, 20)),
                  elements=st.integers(0, 7)), st.integers(1, 3))
def test_rank_search_results_are_sound(vals, m):
    cols = vals.shape[1]
    pre, post = np.arange(0, cols - 1), np.arange(1, cols)
    res = RankSearch(vals, pre, post).find(full_mask(len(pre)), max_m=m)
    if res is not None:
        assert len(res) <= m and _decreases(vals, res, pre, post)
    elif m == 1:
        assert not any(_decreases(vals, (t,), pre, post) for t in range(len(vals)))
