"""Propositional front end: CNF container, internal CDCL driver, external escape hatch."""
from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import cdcl


class SolverLimit(Exception):
    """The conflict budget ran out or the solve was cancelled."""


@dataclass
class Cnf:
    nvars: int = 0
    clauses: list = field(default_factory=list)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.nvars} {len(self.clauses)}"]
        lines += [" ".join(map(str, c)) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dimacs(cls, text: str) -> "Cnf":
        nvars, clauses, cur = 0, [], []
        for line in text.splitlines():
            line = line.strip()
            if not line or line[0] in "c%":
                continue
            if line.startswith("p"):
                nvars = int(line.split()[2])
                continue
            for tok in line.split():
                lit = int(tok)
                if lit == 0:
                    clauses.append(cur)
                    cur = []
                else:
                    cur.append(lit)
        if cur:
            clauses.append(cur)
        return cls(nvars, clauses)


@dataclass
class SatResult:
    sat: bool
    assignment: Optional[np.ndarray] = None  # index v -> 0/1 for DIMACS variable v; index 0 unused

    @property
    def unsat(self) -> bool:
        return not self.sat

    def value(self, lit: int) -> int:
        b = int(self.assignment[abs(lit)])
        return b if lit > 0 else 1 - b


class CancelToken:
    """Cooperative cancellation, checked between restart batches."""

    def __init__(self):
        self._event = threading.Event()

    def cancel(self):
        self._event.set()

    @property
    def cancelled(self) -> bool:
        return self._event.is_set()


DEFAULT_MAX_CONFLICTS = 2_000_000


def solve(cnf: Cnf, seed: int = 0, max_conflicts: int = DEFAULT_MAX_CONFLICTS,
          cancel: CancelToken | None = None, external: str | None = None) -> SatResult:
    """Decide ``cnf``. Deterministic for a fixed ``seed``.

    ``external`` (or the ``BVT_EXTERNAL_SAT`` environment variable) names a
    command that accepts a DIMACS file path and prints a competition-style
    verdict; the internal engine is used otherwise.
    """
    external = external or os.environ.get("BVT_EXTERNAL_SAT") or None
    if external:
        return solve_external(cnf, external)
    return _solve_internal(cnf, seed, max_conflicts, cancel)


def _solve_internal(cnf, seed, max_conflicts, cancel):
    nv = cnf.nvars
    val = np.full(max(nv, 1), -1, dtype=np.int8)
    level = np.zeros(max(nv, 1), dtype=np.int32)
    reason = np.full(max(nv, 1), -1, dtype=np.int32)
    trail = np.zeros(max(nv, 1), dtype=np.int32)
    trail_lim = np.zeros(max(nv, 1) + 1, dtype=np.int32)
    st = np.zeros(9, dtype=np.int64)
    st[cdcl.SEED] = seed

    units, long_clauses = [], []
    for clause in cnf.clauses:
        lits = sorted(set(clause))
        if not lits:
            return SatResult(False)
        if any(-l in lits for l in lits if l > 0):
            continue
        if len(lits) == 1:
            units.append(lits[0])
        else:
            long_clauses.append(lits)

    for u in units:
        v = abs(u) - 1
        want = 1 if u > 0 else 0
        if val[v] >= 0:
            if val[v] != want:
                return SatResult(False)
            continue
        val[v] = want
        trail[st[cdcl.TRAIL]] = 2 * v + (u < 0)
        st[cdcl.TRAIL] += 1

    ncl = len(long_clauses)
    flat = np.fromiter((2 * (abs(l) - 1) + (l < 0) for c in long_clauses for l in c),
                       dtype=np.int32)
    lens = np.fromiter((len(c) for c in long_clauses), dtype=np.int32, count=ncl)
    cap_cl = max(2 * ncl + 64, 1024)
    cap_lits = max(2 * len(flat) + 64 * (nv + 1), 8192)
    lits = np.zeros(cap_lits, dtype=np.int32)
    lits[: len(flat)] = flat
    cstart = np.zeros(cap_cl, dtype=np.int32)
    clen = np.zeros(cap_cl, dtype=np.int32)
    if ncl:
        cstart[1:ncl] = np.cumsum(lens)[:-1]
        clen[:ncl] = lens
    st[cdcl.NCL] = ncl
    st[cdcl.NLITS] = len(flat)
    whead = np.full(2 * max(nv, 1), -1, dtype=np.int32)
    wnext = np.full(2 * cap_cl, -1, dtype=np.int32)
    cdcl.init_watches(lits, cstart, clen, ncl, whead, wnext)

    rng = np.random.default_rng(seed)
    act = rng.random(max(nv, 1)) * 1e-6 if seed else np.zeros(max(nv, 1))
    inc = np.ones(1)
    phase = np.zeros(max(nv, 1), dtype=np.int8)
    seen = np.zeros(max(nv, 1), dtype=np.int8)
    learnt = np.zeros(max(nv, 1) + 1, dtype=np.int32)

    if nv == 0:
        return SatResult(True, np.zeros(1, dtype=np.int8))
    while True:
        code = cdcl.search(lits, cstart, clen, whead, wnext, val, level, reason, trail,
                           trail_lim, st, act, inc, phase, seen, learnt, 2000)
        if code == cdcl.SAT:
            model = np.zeros(nv + 1, dtype=np.int8)
            model[1:] = np.maximum(val, 0)
            return SatResult(True, model)
        if code == cdcl.UNSAT:
            return SatResult(False)
        if code == cdcl.GROW:
            cap_cl = clen.shape[0] * 2
            cstart = _grow(cstart, cap_cl, 0)
            clen = _grow(clen, cap_cl, 0)
            wnext = _grow(wnext, 2 * cap_cl, -1)
            lits = _grow(lits, max(lits.shape[0] * 2, st[cdcl.NLITS] + 4 * (nv + 1)), 0)
        if st[cdcl.CONFLICTS] > max_conflicts:
            raise SolverLimit(f"conflict limit {max_conflicts} exceeded")
        if cancel is not None and cancel.cancelled:
            raise SolverLimit("cancelled")


def _grow(arr, size, fill):
    out = np.full(size, fill, dtype=arr.dtype)
    out[: arr.shape[0]] = arr
    return out


def solve_external(cnf: Cnf, command: str) -> SatResult:
    """Run an external DIMACS solver and parse ``s``/``v`` lines (or bare SAT/UNSAT)."""
    with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as fh:
        fh.write(cnf.to_dimacs())
        path = fh.name
    try:
        proc = subprocess.run(shlex.split(command) + [path], capture_output=True, text=True)
    finally:
        os.unlink(path)
    return parse_solver_output(proc.stdout, cnf.nvars)


def parse_solver_output(text: str, nvars: int) -> SatResult:
    status = None
    model = np.zeros(nvars + 1, dtype=np.int8)
    for line in text.splitlines():
        tokens = line.split()
        if not tokens:
            continue
        head = tokens[0]
        if head == "s":
            tokens = tokens[1:]
            head = tokens[0] if tokens else ""
        if head in ("UNSATISFIABLE", "UNSAT"):
            status = False
        elif head in ("SATISFIABLE", "SAT"):
            status = True
        elif head == "v" or (status and head.lstrip("-").isdigit()):
            for tok in tokens[1:] if head == "v" else tokens:
                lit = int(tok)
                if lit > 0 and lit <= nvars:
                    model[lit] = 1
    if status is None:
        raise SolverLimit("external solver gave no verdict")
    return SatResult(status, model if status else None)
