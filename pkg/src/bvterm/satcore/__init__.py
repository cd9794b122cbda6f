"""Bit-vector formulas, bit-blasting, and propositional solving."""
from __future__ import annotations

from dataclasses import dataclass, field

from .bitblast import Blaster, bitblast
from .expr import BvExpr
from .solver import CancelToken, Cnf, SatResult, SolverLimit, solve


@dataclass
class Model:
    """Decoded satisfying assignment: variable name -> unsigned word value."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.values.get(name, 0)

    def get(self, name, default=0):
        return self.values.get(name, default)


@dataclass
class CheckResult:
    sat: bool
    model: Model | None = None

    @property
    def unsat(self) -> bool:
        return not self.sat


def check(e: BvExpr, seed: int = 0, cancel: CancelToken | None = None,
          max_conflicts: int | None = None) -> CheckResult:
    """One SAT call on the 1-bit constraint ``e``; unconstrained variables decode to 0."""
    if e.is_const:
        return CheckResult(bool(e.val), Model({}) if e.val else None)
    b = Blaster()
    b.assert_true(e)
    kw = {} if max_conflicts is None else {"max_conflicts": max_conflicts}
    res = solve(b.cnf(), seed=seed, cancel=cancel, **kw)
    if res.unsat:
        return CheckResult(False)
    return CheckResult(True, Model(b.decode(res)))


__all__ = [
    "BvExpr", "Blaster", "CancelToken", "CheckResult", "Cnf", "Model", "SatResult",
    "SolverLimit", "bitblast", "check", "solve",
]
