"""Mini-C input language: parsing, elaboration, loop-nest extraction."""
from __future__ import annotations

from pathlib import Path

from ..loops import LoopNest, LoopSpec
from .elaborate import TypeError_, extract_loop_nest
from .parser import ParseError, SourceProgram, UnsupportedConstruct, format_program, parse


def load(source: str | Path, width: int | None = None) -> LoopNest:
    """Parse program text (or a path to it) and extract its loop nest."""
    if isinstance(source, Path):
        source = source.read_text()
    return extract_loop_nest(parse(source), width)


__all__ = [
    "LoopNest", "LoopSpec", "ParseError", "SourceProgram", "TypeError_", "UnsupportedConstruct",
    "extract_loop_nest", "format_program", "load", "parse",
]
