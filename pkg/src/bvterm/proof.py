"""Proof artifacts and their JSON form.

A termination proof holds one obligation per top-level loop. A
non-termination proof holds a single obligation for the loop that runs
forever, its seed state ``x0`` at that loop's head, and a trace (initial
store, nondet values, head visits) showing that ``x0`` is reachable.

JSON layout::

    {"verdict": "Terminating", "width": 8,
     "holes": {"R": {"arity": 1, "instrs": [], "outputs": ["in0"]}},
     "kinds": {"0": "UT"}, "x0": {...}, "trace": {...}, "stats": {...}}

Hole names carry an ``Lk.`` prefix when the program has several loops.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from . import llang
from .llang import LProgram

TERMINATING = "Terminating"
NONTERMINATING = "NonTerminating"
UNKNOWN = "Unknown"


class ArtifactError(ValueError):
    """Malformed artifact (distinct from a well-formed but invalid proof)."""


@dataclass
class LoopProof:
    loop: int
    kind: str
    holes: dict  # name -> LProgram


@dataclass
class Trace:
    """Concrete run from program start reaching ``x0`` at the proved loop's head."""

    init: dict
    choices: list
    visits: int  # index of the head visit (counted over all loop heads) where x0 is seen


@dataclass
class ProofArtifact:
    verdict: str
    width: int
    loops: list  # LoopProof
    x0: Optional[dict] = None
    trace: Optional[Trace] = None
    stats: dict = field(default_factory=dict)

    def holes(self, multi: bool | None = None) -> dict[str, LProgram]:
        multi = len(self.loops) > 1 if multi is None else multi
        out = {}
        for lp in self.loops:
            for name, p in lp.holes.items():
                out[f"L{lp.loop}.{name}" if multi else name] = p
        return out

    def to_text(self) -> str:
        lines = [f"verdict: {self.verdict}", f"width: {self.width}"]
        for lp in self.loops:
            lines.append(f"loop {lp.loop} ({lp.kind}):")
            for name, p in lp.holes.items():
                body = llang.to_text(p).replace("\n", "\n    ")
                lines.append(f"  {name}:\n    {body}")
        if self.x0 is not None:
            lines.append("x0: " + ", ".join(f"{k}={v}" for k, v in self.x0.items()))
        if self.trace is not None and (self.trace.choices or self.trace.visits):
            lines.append(f"reached after {self.trace.visits} loop-head visits "
                         f"from {self.trace.init} with inputs {self.trace.choices}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        multi = len(self.loops) > 1
        holes = {}
        for name, p in self.holes(multi).items():
            d = llang.to_json(p)
            holes[name] = {"arity": d["arity"], "instrs": d["instrs"], "outputs": d["outputs"]}
        out = {
            "verdict": self.verdict,
            "width": self.width,
            "holes": holes,
            "kinds": {str(lp.loop): lp.kind for lp in self.loops},
        }
        if self.x0 is not None:
            out["x0"] = dict(self.x0)
        if self.trace is not None:
            out["trace"] = {"init": dict(self.trace.init), "choices": list(self.trace.choices),
                            "visits": self.trace.visits}
        out["stats"] = dict(self.stats)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=False)

    @classmethod
    def from_json(cls, d: dict) -> "ProofArtifact":
        try:
            verdict = d["verdict"]
            width = int(d["width"])
            kinds = {int(k): v for k, v in d["kinds"].items()}
            multi = len(kinds) > 1
            loops = {k: LoopProof(k, kind, {}) for k, kind in sorted(kinds.items())}
            for name, h in d["holes"].items():
                if multi:
                    prefix, _, short = name.partition(".")
                    k = int(prefix[1:])
                else:
                    k, short = next(iter(loops)), name
                p = llang.from_json({"width": width, "arity": h["arity"], "instrs": h["instrs"],
                                     "outputs": h["outputs"]})
                loops[k].holes[short] = p
            trace = None
            if "trace" in d and d["trace"] is not None:
                t = d["trace"]
                trace = Trace(dict(t["init"]), list(t["choices"]), int(t["visits"]))
            x0 = dict(d["x0"]) if d.get("x0") is not None else None
            return cls(verdict, width, list(loops.values()), x0, trace, dict(d.get("stats", {})))
        except (KeyError, TypeError, ValueError, StopIteration) as exc:
            raise ArtifactError(f"malformed proof file: {exc}") from exc

    @classmethod
    def loads(cls, text: str) -> "ProofArtifact":
        try:
            return cls.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ArtifactError(f"malformed proof file: {exc}") from exc
