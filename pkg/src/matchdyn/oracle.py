"""Exhaustive exploration of improvement dynamics for small games and matching instances.

Matching instances are explored through their direct semantics, never through
an embedding, so results here can check the embeddings independently.
"""

from __future__ import annotations

import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol

from . import game, matching
from .game import GameSpec, ImprovementTrace, InvalidTrace, Step
from .matching import MatchingInstance

DEFAULT_BUDGET = 10**6


def default_budget() -> int:
    return int(os.environ.get("MATCHDYN_BUDGET", DEFAULT_BUDGET))


class TooLarge(RuntimeError):
    pass


class System(Protocol):
    def successors(self, s: frozenset[int]) -> list[tuple[int, frozenset[int], frozenset[int]]]: ...

    def is_feasible(self, s: frozenset[int]) -> bool: ...

    def states(self, limit: int | None) -> list[frozenset[int]]: ...


@dataclass(frozen=True)
class GameSystem:
    spec: GameSpec

    def successors(self, s):
        out = []
        for c in sorted(game.blocking_coalitions(self.spec, s)):
            nxt, deleted = game.apply_insertion(self.spec, s, c)
            out.append((c, nxt, deleted))
        return out

    def is_feasible(self, s):
        return self.spec.is_feasible(s)

    def states(self, limit):
        return game.feasible_structures(self.spec, limit)

    def step_record(self, s, label, deleted):
        return Step(label, deleted, game.generating_rule(self.spec, s, label))


@dataclass(frozen=True)
class MatchingSystem:
    inst: MatchingInstance

    def successors(self, s):
        out = []
        for e in sorted(matching.blocking_pairs(self.inst, s)):
            nxt = matching.after_resolution(self.inst, s, e)
            out.append((e, nxt, (s | {e}) - nxt))
        return out

    def is_feasible(self, s):
        return matching.is_feasible(self.inst, s)

    def states(self, limit):
        return matching.feasible_matchings(self.inst, limit)

    def step_record(self, s, label, deleted):
        return Step(label, deleted, None)


def as_system(obj) -> GameSystem | MatchingSystem:
    if isinstance(obj, (GameSystem, MatchingSystem)):
        return obj
    if isinstance(obj, GameSpec):
        return GameSystem(obj)
    if isinstance(obj, MatchingInstance):
        return MatchingSystem(obj)
    raise TypeError(f"cannot explore a {type(obj).__name__}")


@dataclass
class TransitionGraph:
    states: list[frozenset[int]]
    index: dict[frozenset[int], int]
    # (source index, label, target index)
    edges: list[tuple[int, int, int]]
    overflow: bool = False
    depth: list[int] = field(default_factory=list)

    def out_edges(self) -> dict[int, list[tuple[int, int]]]:
        out: dict[int, list[tuple[int, int]]] = {i: [] for i in range(len(self.states))}
        for a, lab, b in self.edges:
            out[a].append((lab, b))
        return out

    def sinks(self) -> list[frozenset[int]]:
        has_out = {a for a, _, _ in self.edges}
        return [s for i, s in enumerate(self.states) if i not in has_out]

    def cycles_exist(self) -> bool:
        succ = self.out_edges()
        color = [0] * len(self.states)
        for root in range(len(self.states)):
            if color[root]:
                continue
            stack = [(root, iter(succ[root]))]
            color[root] = 1
            while stack:
                v, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    color[v] = 2
                    stack.pop()
                    continue
                w = nxt[1]
                if color[w] == 1:
                    return True
                if color[w] == 0:
                    color[w] = 1
                    stack.append((w, iter(succ[w])))
        return False


class BudgetExceeded(RuntimeError):
    def __init__(self, graph: TransitionGraph, budget: int):
        super().__init__(f"state budget {budget} exceeded after {len(graph.states)} states")
        self.graph = graph


def _expand(system, frontier: list[frozenset[int]], workers: int):
    if workers <= 1 or len(frontier) < 2 * workers:
        return [system.successors(s) for s in frontier]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(system.successors, frontier))


def explore(
    obj,
    s0: Iterable[int],
    budget: int | None = None,
    workers: int = 1,
    strict: bool = True,
    stop: Callable[[frozenset[int]], bool] | None = None,
) -> TransitionGraph:
    """Breadth-first closure of ``s0`` under every blocking resolution.

    Layers are expanded one at a time (optionally on ``workers`` threads) and
    merged in frontier order, so the result does not depend on ``workers``.
    Past ``budget`` states the graph is cut off: ``strict`` raises
    BudgetExceeded carrying the partial graph, otherwise ``overflow`` is set.
    ``stop`` ends the search early once a discovered state satisfies it.
    """
    system = as_system(obj)
    budget = default_budget() if budget is None else budget
    if budget < 1:
        raise ValueError("budget must be at least 1")
    s0 = frozenset(s0)
    if not system.is_feasible(s0):
        raise game.InfeasibleStructure(f"start state {game.canonical(s0)} is not feasible")
    g = TransitionGraph([s0], {s0: 0}, [], depth=[0])
    if stop is not None and stop(s0):
        return g
    frontier = [s0]
    d = 0
    while frontier:
        d += 1
        nxt_frontier = []
        for s, succ in zip(frontier, _expand(system, frontier, workers)):
            src = g.index[s]
            for label, t, _ in succ:
                if t not in g.index:
                    if len(g.states) >= budget:
                        g.overflow = True
                        if strict:
                            raise BudgetExceeded(g, budget)
                        continue
                    g.index[t] = len(g.states)
                    g.states.append(t)
                    g.depth.append(d)
                    nxt_frontier.append(t)
                    if stop is not None and stop(t):
                        g.edges.append((src, label, g.index[t]))
                        return g
                g.edges.append((src, label, g.index[t]))
        frontier = nxt_frontier
    return g


@dataclass(frozen=True)
class ReachResult:
    reachable: bool
    witness: ImprovementTrace | None
    shortest_length: int | None


def _witness(system, g: TransitionGraph, target_idx: int) -> ImprovementTrace:
    parent: dict[int, tuple[int, int]] = {}
    for a, lab, b in g.edges:
        if b not in parent and g.depth[b] == g.depth[a] + 1:
            parent[b] = (a, lab)
    path = []
    v = target_idx
    while v != 0:
        a, lab = parent[v]
        path.append((a, lab, v))
        v = a
    steps = []
    for a, lab, b in reversed(path):
        s, t = g.states[a], g.states[b]
        steps.append(system.step_record(s, lab, (s | {lab}) - t))
    return ImprovementTrace(g.states[0], tuple(steps))


def reachable(obj, s0: Iterable[int], target: Iterable[int], budget: int | None = None, workers: int = 1) -> ReachResult:
    """Exact reachability with a shortest witness."""
    system = as_system(obj)
    target = frozenset(target)
    if not system.is_feasible(target):
        raise game.InfeasibleStructure(f"target {game.canonical(target)} is not feasible")
    g = explore(system, s0, budget, workers, stop=lambda s: s == target)
    if target not in g.index:
        return ReachResult(False, None, None)
    idx = g.index[target]
    return ReachResult(True, _witness(system, g, idx), g.depth[idx])


def reach_stable(obj, s0: Iterable[int], budget: int | None = None, workers: int = 1) -> ReachResult:
    """Shortest path from ``s0`` to any stable state."""
    system = as_system(obj)
    g = explore(system, s0, budget, workers, stop=lambda s: not system.successors(s))
    for idx, s in enumerate(g.states):
        if not system.successors(s):
            return ReachResult(True, _witness(system, g, idx), g.depth[idx])
    return ReachResult(False, None, None)


def min_label_count(obj, s0: Iterable[int], label: int, budget: int | None = None) -> int | None:
    """Fewest resolutions of ``label`` on any path from ``s0`` to a stable state.

    0-1 shortest path over the whole reachable graph; None if no stable state is reachable.
    """
    system = as_system(obj)
    g = explore(system, s0, budget)
    succ = g.out_edges()
    dist = [None] * len(g.states)
    dist[0] = 0
    dq = deque([0])
    best = None
    done = [False] * len(g.states)
    while dq:
        v = dq.popleft()
        if done[v]:
            continue
        done[v] = True
        if not succ[v] and (best is None or dist[v] < best):
            best = dist[v]
        for lab, w in succ[v]:
            cost = dist[v] + (lab == label)
            if dist[w] is None or cost < dist[w]:
                dist[w] = cost
                if lab == label:
                    dq.append(w)
                else:
                    dq.appendleft(w)
    return best


def enumerate_stable(obj, limit: int = 200_000) -> set[frozenset[int]]:
    """Every feasible stable state; TooLarge past ``limit`` feasible states."""
    system = as_system(obj)
    states = system.states(limit)
    if len(states) > limit:
        raise TooLarge(f"more than {limit} feasible states")
    return {s for s in states if not system.successors(s)}


def replay_matching(inst: MatchingInstance, trace: ImprovementTrace) -> frozenset[int]:
    """Re-execute a matching trace (inserted = edge id, deleted = dropped edge ids)."""
    m = frozenset(trace.start)
    if not matching.is_feasible(inst, m):
        raise InvalidTrace("start matching infeasible", 0)
    for i, st in enumerate(trace.steps):
        if not matching.is_blocking(inst, m, st.inserted):
            raise InvalidTrace(f"edge {st.inserted} is not a blocking pair", i)
        nxt = matching.after_resolution(inst, m, st.inserted)
        if (m | {st.inserted}) - nxt != st.deleted:
            raise InvalidTrace("recorded deletions differ", i)
        m = nxt
    return m


def replay_any(obj, trace: ImprovementTrace) -> frozenset[int]:
    system = as_system(obj)
    if isinstance(system, GameSystem):
        return game.replay(system.spec, trace)
    return replay_matching(system.inst, trace)


def random_witness(obj, s0: Iterable[int], seed: int, budget: int | None = None, max_len: int = 400) -> ImprovementTrace | None:
    """Random walk from ``s0`` that ends in a stable state.

    Moves only through states from which a stable state stays reachable, so
    the walk cannot get trapped in a cycle-only region; None if no stable state
    is reachable.  Once ``max_len`` steps are taken it heads to the nearest
    stable state.
    """
    import numpy as np

    system = as_system(obj)
    g = explore(system, s0, budget)
    succ = g.out_edges()
    pred: dict[int, list[int]] = {i: [] for i in range(len(g.states))}
    for a, _, b in g.edges:
        pred[b].append(a)
    # distance to the nearest sink, by reverse BFS
    dist = {i: 0 for i in range(len(g.states)) if not succ[i]}
    queue = deque(dist)
    while queue:
        v = queue.popleft()
        for a in pred[v]:
            if a not in dist:
                dist[a] = dist[v] + 1
                queue.append(a)
    if 0 not in dist:
        return None
    rng = np.random.Generator(np.random.Philox(seed))
    v, steps = 0, []
    while succ[v]:
        options = [(lab, w) for lab, w in succ[v] if w in dist]
        if len(steps) >= max_len:
            options = [(lab, w) for lab, w in options if dist[w] < dist[v]]
        lab, w = options[int(rng.integers(len(options)))]
        s, t = g.states[v], g.states[w]
        steps.append(system.step_record(s, lab, (s | {lab}) - t))
        v = w
    return ImprovementTrace(g.states[0], tuple(steps))
