"""Loop-nest model and its control-flow graph.

A program is ``block_0; loop_0; block_1; loop_1; ...; tail``. Each loop has a
guard and a body ``body; child_0; post_0; child_1; post_1; ...`` where
``body`` and ``post_i`` are loop-free relations and the children are loops.
The same structure is flattened into a small control-flow graph that gives
the concrete program semantics used by the oracle and by trace replay.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Sequence

from .satcore import expr as bx
from .satcore.expr import BvExpr
from .semantics import IDENTITY, TransitionRelation, VarDecl, apply, evaluate


@dataclass(frozen=True)
class LoopSpec:
    guard: BvExpr
    body: TransitionRelation = IDENTITY
    children: tuple = ()
    posts: tuple = ()  # one relation after each child

    @property
    def is_simple(self) -> bool:
        return not self.children

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    def count(self) -> int:
        return 1 + sum(c.count() for c in self.children)

    def inner(self) -> "LoopSpec":
        """The single nested loop of a two-level nest."""
        if len(self.children) != 1:
            raise ValueError(f"expected exactly one nested loop, found {len(self.children)}")
        return self.children[0]

    def post(self) -> TransitionRelation:
        return self.posts[0] if self.posts else IDENTITY


@dataclass(frozen=True)
class LoopNest:
    decls: tuple  # VarDecl, in state-vector order
    loops: tuple = ()  # top-level LoopSpec
    blocks: tuple = ()  # straight-line relation before each top-level loop
    tail: TransitionRelation = IDENTITY

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.decls]

    @property
    def width(self) -> int:
        return max((d.width for d in self.decls), default=1)

    def loop_count(self) -> int:
        return sum(l.count() for l in self.loops)

    def depth(self) -> int:
        return max((l.depth() for l in self.loops), default=0)

    def state_vars(self, suffix: str = "") -> dict[str, BvExpr]:
        return {d.name: bx.var(d.name + suffix, d.width) for d in self.decls}

    def entry_is_trivial(self, k: int) -> bool:
        return k == 0 and self.blocks[0].is_identity

    def with_loop(self, k: int) -> "LoopNest":
        """Program consisting of the glue code before loop ``k`` and loop ``k`` alone."""
        return LoopNest(self.decls, (self.loops[k],), (self.blocks[k],))


# ---------------------------------------------------------------- control flow


@dataclass
class Node:
    kind: str  # "block", "head" or "exit"
    rel: TransitionRelation = IDENTITY
    guard: Optional[BvExpr] = None
    next: int = -1  # block successor, or head's false edge
    body: int = -1  # head's true edge
    loop: Optional[LoopSpec] = None
    top: int = -1  # index of the top-level loop this head belongs to


@dataclass
class ControlFlow:
    nodes: list = field(default_factory=list)
    entry: int = 0
    heads: dict = field(default_factory=dict)  # id(LoopSpec) -> node index

    @property
    def exit(self) -> int:
        return 0


def build_cfg(nest: LoopNest) -> ControlFlow:
    cfg = ControlFlow(nodes=[Node("exit")])

    def add(node):
        cfg.nodes.append(node)
        return len(cfg.nodes) - 1

    def seq(items, cont, top):
        for item in reversed(items):
            if isinstance(item, LoopSpec):
                cont = loop(item, cont, top)
            elif not item.is_identity:
                cont = add(Node("block", rel=item, next=cont))
        return cont

    def loop(spec, cont, top):
        head = add(Node("head", guard=spec.guard, next=cont, loop=spec, top=top))
        cfg.heads[id(spec)] = head
        items = [spec.body]
        for child, post in zip(spec.children, spec.posts):
            items += [child, post]
        cfg.nodes[head].body = seq(items, head, top)
        return head

    cont = seq([nest.tail], 0, -1)
    for k in range(len(nest.loops) - 1, -1, -1):
        cont = loop(nest.loops[k], cont, k)
        cont = seq([nest.blocks[k]], cont, k)
    cfg.entry = cont
    return cfg


ChoiceFn = Callable[[TransitionRelation, Mapping[str, int]], Mapping[str, int]]


def run(nest: LoopNest, init: Mapping[str, int], choose: ChoiceFn | None = None,
        max_steps: int = 100_000, cfg: ControlFlow | None = None) -> Iterator[tuple[int, dict]]:
    """Concrete execution yielding ``(node, state)`` at every loop head visit.

    ``choose(rel, state)`` supplies nondet inputs for one relation (default all
    zeros). Stops at program exit or after ``max_steps`` node visits.
    """
    cfg = cfg or build_cfg(nest)
    node, state = cfg.entry, dict(init)
    for _ in range(max_steps):
        n = cfg.nodes[node]
        if n.kind == "exit":
            return
        if n.kind == "head":
            yield node, state
            node = n.body if evaluate(n.guard, state) else n.next
        else:
            inputs = choose(n.rel, state) if (choose and n.rel.inputs) else None
            state = apply(n.rel, state, inputs)
            node = n.next


def replay(nest: LoopNest, init: Mapping[str, int], choices: Sequence[int],
           max_steps: int = 100_000, cfg: ControlFlow | None = None) -> Iterator[tuple[int, dict]]:
    """:func:`run` with nondet inputs drawn in order from ``choices`` (then zeros)."""
    it = iter(choices)

    def choose(rel, state):
        return {name: next(it, 0) & ((1 << w) - 1) for name, w in rel.inputs.items()}

    return run(nest, init, choose, max_steps, cfg)


def relation_inputs(nest: LoopNest) -> dict[str, int]:
    out = {}
    for b in nest.blocks:
        out.update(b.inputs)
    out.update(nest.tail.inputs)

    def walk(spec):
        out.update(spec.body.inputs)
        for p in spec.posts:
            out.update(p.inputs)
        for c in spec.children:
            walk(c)

    for l in nest.loops:
        walk(l)
    return out


def decl_map(decls: Sequence[VarDecl]) -> dict[str, VarDecl]:
    return {d.name: d for d in decls}
