"""Vectorised concrete simulation that looks for lasso-shaped runs.

Many start stores are executed side by side over the program's control-flow
graph. Nondet inputs are resolved by a per-lane *policy* (a constant, or a
copy of a state variable), which makes each lane deterministic, so Brent's
cycle detection applies. Lanes that close a cycle are replayed one by one to
recover the stem, the cycle and the input values consumed on the way.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..loops import LoopNest, build_cfg, run
from ..semantics import evaluate_vec
from ..words import mask

Policy = tuple  # ("const", c) or ("var", j)


def policy_value(policy: Policy, state_row, decls, width: int, in_width: int) -> int:
    """Value a policy supplies for an input of ``in_width`` bits (scalar)."""
    if policy[0] == "const":
        return policy[1] & mask(in_width)
    d = decls[policy[1]]
    v = int(state_row[policy[1]])
    if d.signed and v >> (d.width - 1):
        v |= mask(width) ^ mask(d.width)
    return v & mask(in_width)


def _policy_vec(policy: Policy, states, decls, width: int, in_width: int) -> np.ndarray:
    if policy[0] == "const":
        return np.full(len(states), policy[1] & mask(in_width), dtype=np.uint64)
    d = decls[policy[1]]
    v = states[:, policy[1]].copy()
    if d.signed:
        neg = (v >> np.uint64(d.width - 1)) & np.uint64(1)
        v |= neg * np.uint64(mask(width) ^ mask(d.width))
    return v & np.uint64(mask(in_width))


@dataclass
class Lasso:
    init: dict
    policy: Policy
    stem: list = field(default_factory=list)  # (node, state, choices consumed) head visits
    cycle: list = field(default_factory=list)
    choices: list = field(default_factory=list)  # every input value consumed up to the cycle's end

    @property
    def cycle_nodes(self) -> set:
        return {n for n, _, _ in self.cycle}


class Simulator:
    def __init__(self, nest: LoopNest):
        self.nest = nest
        self.decls = nest.decls
        self.names = [d.name for d in nest.decls]
        self.width = nest.width
        self.cfg = build_cfg(nest)
        self.block_exprs = {}
        for i, node in enumerate(self.cfg.nodes):
            if node.kind == "block":
                self.block_exprs[i] = node.rel.successor_exprs(self.decls)
        self.masks = np.array([mask(d.width) for d in self.decls], dtype=np.uint64)

    # ------------------------------------------------------------ vectorised search

    def find_lassos(self, init: np.ndarray, policies: list, lane_policy: np.ndarray,
                    max_steps: int, limit: int = 8) -> list[Lasso]:
        """Run all lanes; return up to ``limit`` lassos (replayed in scalar mode)."""
        lanes = len(init)
        if not lanes:
            return []
        states = np.array(init, dtype=np.uint64).reshape(lanes, len(self.decls)) & self.masks
        node = np.full(lanes, self.cfg.entry, dtype=np.int64)
        active = node != self.cfg.exit
        t_node = node.copy()
        t_state = states.copy()
        power = np.ones(lanes, dtype=np.int64)
        lam = np.zeros(lanes, dtype=np.int64)
        found = []
        for _ in range(max_steps):
            idx_active = np.nonzero(active)[0]
            if not len(idx_active):
                break
            for nid in np.unique(node[idx_active]).tolist():
                idx = idx_active[node[idx_active] == nid]
                self._advance(nid, idx, node, states, policies, lane_policy)
            active &= node != self.cfg.exit
            lam += 1
            hit = active & (node == t_node) & np.all(states == t_state, axis=1)
            if hit.any():
                for lane in np.nonzero(hit)[0].tolist():
                    found.append(lane)
                active &= ~hit
                if len(found) >= limit:
                    break
            reset = active & (power == lam)
            if reset.any():
                t_node[reset] = node[reset]
                t_state[reset] = states[reset]
                power[reset] *= 2
                lam[reset] = 0
        out = []
        for lane in found[:limit]:
            init_store = {n: int(v) for n, v in zip(self.names, init[lane])}
            l = self.replay_lasso(init_store, policies[int(lane_policy[lane])], max_steps * 2 + 16)
            if l is not None:
                out.append(l)
        return out

    def _advance(self, nid, idx, node, states, policies, lane_policy):
        n = self.cfg.nodes[nid]
        env = {name: states[idx, j] for j, name in enumerate(self.names)}
        if n.kind == "head":
            g = evaluate_vec([n.guard], env)[0] != 0
            node[idx] = np.where(g, n.body, n.next)
            return
        if n.rel.inputs:
            pol = lane_policy[idx]
            for name, w in n.rel.inputs.items():
                vals = np.zeros(len(idx), dtype=np.uint64)
                for p in np.unique(pol).tolist():
                    sel = pol == p
                    vals[sel] = _policy_vec(policies[p], states[idx[sel]], self.decls, self.width, w)
                env[name] = vals
        outs = evaluate_vec(self.block_exprs[nid], env)
        for j, v in enumerate(outs):
            states[idx, j] = np.broadcast_to(v, len(idx)) & self.masks[j]
        node[idx] = n.next

    # ------------------------------------------------------------ scalar replay

    def choose_fn(self, policy: Policy, log: list):
        decls, width, names = self.decls, self.width, self.names

        def choose(rel, state):
            row = [state[n] for n in names]
            out = {}
            for name, w in rel.inputs.items():
                v = policy_value(policy, row, decls, width, w)
                out[name] = v
                log.append(v)
            return out

        return choose

    def replay_lasso(self, init: dict, policy: Policy, max_steps: int) -> Lasso | None:
        log: list[int] = []
        seen: dict = {}
        visits = []
        for node, state in run(self.nest, init, self.choose_fn(policy, log), max_steps, self.cfg):
            key = (node, tuple(state[n] for n in self.names))
            if key in seen:
                start = seen[key]
                return Lasso(dict(init), policy, visits[:start], visits[start:], list(log))
            seen[key] = len(visits)
            visits.append((node, dict(state), len(log)))
        return None


def corner_values(width: int) -> list[int]:
    m = mask(width)
    return sorted({0, 1, 2, m, m - 1, m >> 1, (m >> 1) + 1})


def sample_states(decls, rng: np.random.Generator, count: int, extra=()) -> np.ndarray:
    """Random stores; each variable takes a corner value (0, 1, max, signed extremes) half the time."""
    n = len(decls)
    rows = [list(r) for r in extra]
    corners = [corner_values(d.width) for d in decls]
    while len(rows) < count:
        rows.append([int(rng.choice(c)) if rng.random() < 0.5 else int(rng.integers(0, mask(d.width) + 1))
                     for d, c in zip(decls, corners)])
    return np.array(rows[:count], dtype=np.uint64).reshape(-1, n)
