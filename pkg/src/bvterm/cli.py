"""``bvt``: prove, check, run the oracle, or tabulate a directory of programs.

Exit codes: 0 Terminating, 1 NonTerminating, 2 Unknown, 3 input error.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from pathlib import Path

from .checker import OracleLimit, ShapeMismatch, check_proof, oracle_decide
from .frontend import ParseError, load
from .proof import NONTERMINATING, TERMINATING, ArtifactError, ProofArtifact
from .synthesis import Budget, solve_gt

EXIT = {TERMINATING: 0, NONTERMINATING: 1}
UNKNOWN_EXIT = 2
INPUT_ERROR = 3


class InputError(Exception):
    pass


def _load(path: str, width: int | None):
    try:
        return load(Path(path), width)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except ParseError as exc:
        raise InputError(f"{path}:{exc}") from exc


def _budget(args) -> Budget:
    return Budget(timeout=args.timeout, max_size=args.max_size, seed=args.seed, threads=args.threads)


def _prove(args) -> int:
    if args.external_sat:
        os.environ["BVT_EXTERNAL_SAT"] = args.external_sat
    nest = _load(args.file, args.width)
    if args.mode == "oracle":
        return _oracle(args, nest)
    t0 = time.perf_counter()
    v = solve_gt(nest, _budget(args), mode=args.mode)
    wall = time.perf_counter() - t0
    confirmed = v.artifact is not None and check_proof(nest, v.artifact).valid
    if args.output and v.artifact is not None:
        Path(args.output).write_text(v.artifact.dumps() + "\n")
    if args.format == "json":
        out = {"verdict": v.status, "time": round(wall, 3), "reason": v.reason}
        if v.artifact is not None:
            out["proof"] = v.artifact.to_json()
            out["check"] = "valid" if confirmed else "invalid"
        print(json.dumps(out, indent=2))
    else:
        print(f"verdict: {v.status}")
        print(f"time: {wall:.2f}s")
        if v.artifact is None:
            print(f"reason: {v.reason}")
        else:
            print(v.artifact.to_text().split("\n", 2)[2])
            print("independent check: " + ("proof valid" if confirmed else "PROOF INVALID"))
    return EXIT.get(v.status, UNKNOWN_EXIT) if (v.artifact is None or confirmed) else UNKNOWN_EXIT


def _oracle(args, nest) -> int:
    try:
        res = oracle_decide(nest)
    except OracleLimit as exc:
        raise InputError(str(exc)) from exc
    if args.format == "json":
        print(json.dumps({"verdict": res.verdict, "cycle": [[n, s] for n, s in res.cycle],
                          "max_trace": res.max_trace}))
    else:
        print(f"verdict: {res.verdict}")
        if res.cycle:
            print("cycle: " + " -> ".join("{" + ", ".join(f"{k}={v}" for k, v in s.items()) + "}"
                                          for _, s in res.cycle))
        else:
            print(f"longest run: {res.max_trace} loop-head visits")
    return EXIT[res.verdict]


def _check(args) -> int:
    nest = _load(args.file, args.width)
    try:
        art = ProofArtifact.loads(Path(args.proof).read_text())
    except OSError as exc:
        raise InputError(f"{args.proof}: {exc.strerror or exc}") from exc
    except ArtifactError as exc:
        raise InputError(f"{args.proof}: {exc}") from exc
    try:
        report = check_proof(nest, art)
    except ShapeMismatch as exc:
        raise InputError(f"proof does not fit program: {exc}") from exc
    print(report.reason)
    return EXIT.get(art.verdict, UNKNOWN_EXIT) if report.valid else UNKNOWN_EXIT


_EXPECT = re.compile(r"//\s*expect:\s*(\w+)")


def _bench(args) -> int:
    files = sorted(Path(args.dir).glob("*.c"))
    if not files:
        raise InputError(f"no .c files in {args.dir}")
    rows, bad = [], 0
    for f in files:
        m = _EXPECT.search(f.read_text())
        expected = m.group(1) if m else "-"
        try:
            nest = _load(str(f), args.width)
        except InputError as exc:
            rows.append((f.name, "input error", "-", expected, "-"))
            print(exc, file=sys.stderr)
            continue
        t0 = time.perf_counter()
        v = solve_gt(nest, _budget(args))
        dt = time.perf_counter() - t0
        if expected == "-" or v.status not in EXIT:
            agree = "-"
        else:
            agree = "yes" if v.status == expected else "NO"
            bad += agree == "NO"
        rows.append((f.name, v.status, f"{dt:.2f}", expected, agree))
    head = ("program", "verdict", "time[s]", "expected", "agrees")
    widths = [max(len(str(r[i])) for r in rows + [head]) for i in range(len(head))]
    for r in [head] + rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bvt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--width", type=int, default=None, help="override every declared width")
        sp.add_argument("--timeout", type=float, default=60.0, help="seconds per side (default 60)")
        sp.add_argument("--max-size", type=int, default=8, help="instructions per hole (default 8)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", action="store_true", help="run both sides in parallel threads")

    sp = sub.add_parser("prove", help="decide termination of a program")
    sp.add_argument("file")
    common(sp)
    sp.add_argument("--mode", choices=["auto", "terminate", "nonterminate", "oracle"], default="auto")
    sp.add_argument("--format", choices=["text", "json"], default="text")
    sp.add_argument("--external-sat", default=None, metavar="CMD",
                    help="DIMACS solver command (also BVT_EXTERNAL_SAT)")
    sp.add_argument("-o", "--output", default=None, help="write the proof JSON here")
    sp.set_defaults(func=_prove)

    sp = sub.add_parser("check", help="validate a proof file against a program")
    sp.add_argument("file")
    sp.add_argument("--proof", required=True)
    sp.add_argument("--width", type=int, default=None)
    sp.set_defaults(func=_check)

    sp = sub.add_parser("oracle", help="exhaustive verdict at tiny widths")
    sp.add_argument("file")
    sp.add_argument("--width", type=int, default=None)
    sp.add_argument("--format", choices=["text", "json"], default="text")
    sp.set_defaults(func=lambda a: _oracle(a, _load(a.file, a.width)))

    sp = sub.add_parser("bench", help="verdict table for every .c file in a directory")
    sp.add_argument("dir")
    common(sp)
    sp.set_defaults(func=_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
