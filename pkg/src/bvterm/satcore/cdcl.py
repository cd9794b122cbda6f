"""Conflict-driven clause learning over flat numpy arrays.

Literals are ``2*v + s`` with ``s = 1`` for negation. Each clause keeps its
two watched literals in positions 0 and 1; the watch lists are singly linked
chains threaded through ``wnext`` (watcher id ``2*c + k`` watches position
``k`` of clause ``c``). The search kernel is re-entrant: all solver state
lives in the arrays, so Python can regain control at restart boundaries to
grow the clause store or honour a cancellation request.
"""
from __future__ import annotations

import numpy as np

from .._jit import njit

SAT, UNSAT, PAUSED, GROW = 1, 0, 2, 3

# slots of the integer state vector
NCL, NLITS, TRAIL, QHEAD, LEVEL, LUBY, CONFLICTS, SINCE_RESTART, SEED = range(9)


@njit
def _litval(val, lit):
    v = val[lit >> 1]
    if v < 0:
        return -1
    return v ^ (lit & 1)


@njit
def _enqueue(val, level, reason, trail, st, lit, why):
    v = lit >> 1
    val[v] = 1 - (lit & 1)
    level[v] = st[LEVEL]
    reason[v] = why
    trail[st[TRAIL]] = lit
    st[TRAIL] += 1


@njit
def _watch(whead, wnext, lits, cstart, c):
    for k in range(2):
        w = 2 * c + k
        lit = lits[cstart[c] + k]
        wnext[w] = whead[lit]
        whead[lit] = w


@njit
def init_watches(lits, cstart, clen, ncl, whead, wnext):
    for c in range(ncl):
        if clen[c] >= 2:
            _watch(whead, wnext, lits, cstart, c)


@njit
def _propagate(lits, cstart, clen, whead, wnext, val, level, reason, trail, st):
    while st[QHEAD] < st[TRAIL]:
        p = trail[st[QHEAD]]
        st[QHEAD] += 1
        f = p ^ 1
        prev = -1
        w = whead[f]
        while w != -1:
            nxt = wnext[w]
            c = w >> 1
            k = w & 1
            base = cstart[c]
            other = lits[base + 1 - k]
            if _litval(val, other) == 1:
                prev = w
                w = nxt
                continue
            moved = False
            for i in range(base + 2, base + clen[c]):
                lit = lits[i]
                if _litval(val, lit) != 0:
                    lits[i] = f
                    lits[base + k] = lit
                    if prev == -1:
                        whead[f] = nxt
                    else:
                        wnext[prev] = nxt
                    wnext[w] = whead[lit]
                    whead[lit] = w
                    moved = True
                    break
            if moved:
                w = nxt
                continue
            if _litval(val, other) == 0:
                return c
            _enqueue(val, level, reason, trail, st, other, c)
            prev = w
            w = nxt
    return -1


@njit
def _backtrack(val, reason, trail, trail_lim, phase, st, target):
    if st[LEVEL] <= target:
        return
    stop = trail_lim[target]
    for i in range(st[TRAIL] - 1, stop - 1, -1):
        v = trail[i] >> 1
        phase[v] = val[v]
        val[v] = -1
        reason[v] = -1
    st[TRAIL] = stop
    st[QHEAD] = stop
    st[LEVEL] = target


@njit
def _bump(act, v, inc):
    act[v] += inc[0]
    if act[v] > 1e100:
        for i in range(act.shape[0]):
            act[i] *= 1e-100
        inc[0] *= 1e-100


@njit
def _redundant(lits, cstart, clen, reason, level, seen, v):
    r = reason[v]
    if r < 0:
        return False
    for i in range(cstart[r], cstart[r] + clen[r]):
        u = lits[i] >> 1
        if u != v and seen[u] == 0 and level[u] > 0:
            return False
    return True


@njit
def _analyze(confl, lits, cstart, clen, val, level, reason, trail, st, act, inc, seen, out):
    """First-UIP learning; returns (clause length, backjump level)."""
    n = 1
    path = 0
    p = -1
    idx = st[TRAIL] - 1
    cur = st[LEVEL]
    while True:
        for i in range(cstart[confl], cstart[confl] + clen[confl]):
            q = lits[i]
            v = q >> 1
            if p != -1 and v == (p >> 1):
                continue
            if seen[v] == 0 and level[v] > 0:
                seen[v] = 1
                _bump(act, v, inc)
                if level[v] >= cur:
                    path += 1
                else:
                    out[n] = q
                    n += 1
        while seen[trail[idx] >> 1] == 0:
            idx -= 1
        p = trail[idx]
        idx -= 1
        confl = reason[p >> 1]
        seen[p >> 1] = 0
        path -= 1
        if path == 0:
            break
    out[0] = p ^ 1
    # local minimisation: drop literals implied by the rest of the clause
    for i in range(1, n):
        if _redundant(lits, cstart, clen, reason, level, seen, out[i] >> 1):
            out[i] = -1 - out[i]
    m = 1
    for i in range(1, n):
        q = out[i]
        if q < 0:
            seen[(-1 - q) >> 1] = 0
        else:
            seen[q >> 1] = 0
            out[m] = q
            m += 1
    bt = 0
    if m > 1:
        best = 1
        for i in range(2, m):
            if level[out[i] >> 1] > level[out[best] >> 1]:
                best = i
        tmp = out[1]
        out[1] = out[best]
        out[best] = tmp
        bt = level[out[1] >> 1]
    return m, bt


@njit
def _luby(i):
    # i-th element (0-based) of the Luby sequence 1 1 2 1 1 2 4 ...
    size = 1
    seq = 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i = i % size
    return 1 << seq


@njit
def _pick(val, act):
    best = -1
    best_act = -1.0
    for v in range(val.shape[0]):
        if val[v] < 0 and act[v] > best_act:
            best = v
            best_act = act[v]
    return best


@njit
def search(lits, cstart, clen, whead, wnext, val, level, reason, trail, trail_lim,
           st, act, inc, phase, seen, learnt, budget):
    """Run CDCL until SAT, UNSAT, ``budget`` conflicts (at a restart), or a full clause store."""
    nv = val.shape[0]
    start_conflicts = st[CONFLICTS]
    while True:
        if st[NCL] + 1 > clen.shape[0] or st[NLITS] + nv + 1 > lits.shape[0]:
            return GROW
        confl = _propagate(lits, cstart, clen, whead, wnext, val, level, reason, trail, st)
        if confl >= 0:
            st[CONFLICTS] += 1
            st[SINCE_RESTART] += 1
            if st[LEVEL] == 0:
                return UNSAT
            m, bt = _analyze(confl, lits, cstart, clen, val, level, reason, trail, st,
                             act, inc, seen, learnt)
            _backtrack(val, reason, trail, trail_lim, phase, st, bt)
            if m == 1:
                _enqueue(val, level, reason, trail, st, learnt[0], -1)
            else:
                c = st[NCL]
                cstart[c] = st[NLITS]
                clen[c] = m
                for i in range(m):
                    lits[st[NLITS] + i] = learnt[i]
                st[NLITS] += m
                st[NCL] += 1
                _watch(whead, wnext, lits, cstart, c)
                _enqueue(val, level, reason, trail, st, learnt[0], c)
            inc[0] /= 0.95
            continue
        if st[SINCE_RESTART] >= 64 * _luby(st[LUBY]):
            st[SINCE_RESTART] = 0
            st[LUBY] += 1
            _backtrack(val, reason, trail, trail_lim, phase, st, 0)
            if st[CONFLICTS] - start_conflicts >= budget:
                return PAUSED
            continue
        v = _pick(val, act)
        if v < 0:
            return SAT
        trail_lim[st[LEVEL]] = st[TRAIL]
        st[LEVEL] += 1
        _enqueue(val, level, reason, trail, st, 2 * v + 1 - int(phase[v]), -1)
