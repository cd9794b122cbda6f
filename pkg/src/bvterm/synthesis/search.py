"""Constraint search over a term pool's value matrix.

Per-row facts about the recorded counterexamples ("does term t decrease on
pair p") are packed into uint64 bitsets, so "find a term that decreases on
every required pair" becomes a subset test done by a compiled kernel.
"""
from __future__ import annotations

import numpy as np

from .._jit import njit


def pack(bits: np.ndarray) -> np.ndarray:
    """Pack a ``(rows, k)`` bool matrix into ``(rows, ceil(k/64))`` uint64 words."""
    bits = np.asarray(bits, dtype=bool)
    rows, k = bits.shape
    nw = max(1, (k + 63) // 64)
    padded = np.zeros((rows, nw * 64), dtype=bool)
    padded[:, :k] = bits
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64).reshape(rows, nw)


def full_mask(k: int) -> np.ndarray:
    return pack(np.ones((1, k), dtype=bool))[0]


def _covers_np(bits, req):
    return ((bits & req[None, :]) == req[None, :]).all(axis=1)


def _first_cover_np(bits, req, start):
    hit = np.flatnonzero(_covers_np(bits[start:], req))
    return int(hit[0]) + start if len(hit) else -1


@njit(fallback=_first_cover_np)
def first_cover(bits, req, start):
    """First row ``r >= start`` with ``bits[r] & req == req``, else -1."""
    rows, nw = bits.shape
    for r in range(start, rows):
        ok = True
        for w in range(nw):
            if bits[r, w] & req[w] != req[w]:
                ok = False
                break
        if ok:
            return r
    return -1


@njit(fallback=_covers_np)
def cover_mask(bits, req):
    rows, nw = bits.shape
    out = np.zeros(rows, dtype=np.bool_)
    for r in range(rows):
        ok = True
        for w in range(nw):
            if bits[r, w] & req[w] != req[w]:
                ok = False
                break
        out[r] = ok
    return out


@njit
def _popcount64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


def _progress_rows_np(weak, strict, req):
    ok = _covers_np(weak, req)
    d = strict & req[None, :]
    dec = np.bitwise_count(d).sum(axis=1)
    tie = np.bitwise_count(req[None, :] & ~d).sum(axis=1)
    ids = np.flatnonzero(ok & (dec > 0))
    return ids.astype(np.int64), tie[ids].astype(np.int64)


@njit(fallback=_progress_rows_np)
def progress_rows(weak, strict, req):
    """Rows that never increase on ``req`` and strictly decrease somewhere in it.

    Returns row ids and, for each, how many required pairs stay tied.
    """
    rows, nw = weak.shape
    ids = np.empty(rows, dtype=np.int64)
    ties = np.empty(rows, dtype=np.int64)
    n = 0
    for r in range(rows):
        ok = True
        dec = 0
        tie = 0
        for w in range(nw):
            if weak[r, w] & req[w] != req[w]:
                ok = False
                break
            d = strict[r, w] & req[w]
            dec += _popcount64(d)
            tie += _popcount64(req[w] & ~d)
        if ok and dec > 0:
            ids[n] = r
            ties[n] = tie
            n += 1
    return ids[:n], ties[:n]


def _is_empty(req) -> bool:
    return not np.any(req)


class RankSearch:
    """Find a (lexicographic) ranking tuple among pool terms for a set of pairs."""

    def __init__(self, values: np.ndarray, pre: np.ndarray, post: np.ndarray, row_limit: int | None = None):
        v = values if row_limit is None else values[:row_limit]
        a = v[:, pre]
        b = v[:, post]
        self.strict = pack(a > b)
        self.weak = pack(a >= b)
        self.k = len(pre)

    def find(self, req: np.ndarray, max_m: int, tries: int = 64):
        if _is_empty(req):
            return (0,)
        r = first_cover(self.strict, req, 0)
        if r >= 0:
            return (int(r),)
        for m in range(2, max_m + 1):
            res = self._lex(req, m, tries)
            if res is not None:
                return res
        return None

    def _lex(self, req, m, tries):
        if m == 1:
            r = first_cover(self.strict, req, 0)
            return (int(r),) if r >= 0 else None
        ids, ties = progress_rows(self.weak, self.strict, req)
        if not len(ids):
            return None
        order = np.argsort(ties, kind="stable")[:tries]
        for i in order.tolist():
            r = int(ids[i])
            rest = req & ~self.strict[r]
            if _is_empty(rest):
                return (r,)
            tail = self._lex(rest, m - 1, max(4, tries // 4))
            if tail is not None:
                return (r,) + tail
        return None
