"""Object movement hypergraph: coalition structures as markings on vertices.

One vertex per coalition.  Markings are created at generator vertices and moved
along weight-increasing exchange edges; after every action all marked vertices
that became dominated are unmarked.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Union

from .game import GameSpec, check_consistency


class InconsistentSpec(ValueError):
    pass


class IllegalAction(ValueError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class CreateAt:
    vertex: int


@dataclass(frozen=True)
class MoveAlong:
    source: int
    target: int


Action = Union[CreateAt, MoveAlong]
Marking = frozenset


@dataclass(frozen=True)
class MovementGraph:
    spec: GameSpec
    generators: frozenset[int]
    exchange_edges: tuple[tuple[int, int], ...]
    # target -> tuple of sorted source tuples (stored domination rules only;
    # weight domination is evaluated on demand)
    hyperedges: tuple[tuple[tuple[int, ...], ...], ...]
    successors: tuple[tuple[int, ...], ...]
    edge_rule: dict

    @property
    def vertices(self) -> range:
        return range(self.spec.m)

    def topological_order(self) -> list[int]:
        indeg = [0] * self.spec.m
        for _, t in self.exchange_edges:
            indeg[t] += 1
        queue = deque(v for v in self.vertices if indeg[v] == 0)
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for t in self.successors[v]:
                indeg[t] -= 1
                if indeg[t] == 0:
                    queue.append(t)
        if len(order) != self.spec.m:
            raise InconsistentSpec("exchange edges contain a cycle")
        return order


def build(spec: GameSpec) -> MovementGraph:
    report = check_consistency(spec)
    if not report.consistent:
        raise InconsistentSpec("; ".join(report.violations))
    if not spec.include_weight_domination:
        raise InconsistentSpec("weight domination must be part of the domination rules")
    edges = []
    edge_rule = {}
    for r_idx, r in enumerate(spec.generation_rules):
        (src,) = r.pre
        if spec.weight(src) < spec.weight(r.target) and (src, r.target) not in edge_rule:
            edges.append((src, r.target))
            edge_rule[(src, r.target)] = r_idx
    edges.sort()
    succ: list[list[int]] = [[] for _ in range(spec.m)]
    for s, t in edges:
        succ[s].append(t)
    hyper: list[list[tuple[int, ...]]] = [[] for _ in range(spec.m)]
    for r in spec.domination_rules:
        hyper[r.target].append(tuple(sorted(r.pre)))
    return MovementGraph(
        spec=spec,
        generators=frozenset(spec.self_generating),
        exchange_edges=tuple(edges),
        hyperedges=tuple(tuple(sorted(set(h))) for h in hyper),
        successors=tuple(tuple(x) for x in succ),
        edge_rule=edge_rule,
    )


def undominated(g: MovementGraph, m: Iterable[int], v: int) -> bool:
    marked = m if isinstance(m, frozenset) else frozenset(m)
    for sources in g.hyperedges[v]:
        if all(u in marked for u in sources):
            return False
    w = g.spec.weight(v)
    for u in g.spec.overlaps[v]:
        if u in marked and g.spec.weight(u) >= w:
            return False
    return True


def legal_actions(g: MovementGraph, m: frozenset[int]) -> list[Action]:
    out: list[Action] = []
    for v in sorted(g.generators):
        if v not in m and undominated(g, m, v):
            out.append(CreateAt(v))
    for s, t in g.exchange_edges:
        if s in m and t not in m and undominated(g, m, t):
            out.append(MoveAlong(s, t))
    return out


def step(g: MovementGraph, m: frozenset[int], action: Action) -> tuple[frozenset[int], frozenset[int]]:
    """Apply ``action``; returns (new marking, unmarked vertices)."""
    m = frozenset(m)
    if isinstance(action, CreateAt):
        v = action.vertex
        if v not in g.generators:
            raise IllegalAction(f"vertex {v} is not a generator")
        vacated: frozenset[int] = frozenset()
    else:
        v = action.target
        if (action.source, v) not in g.edge_rule:
            raise IllegalAction(f"no exchange edge {action.source}->{v}")
        if action.source not in m:
            raise IllegalAction(f"source {action.source} unmarked")
        vacated = frozenset({action.source})
    if v in m:
        raise IllegalAction(f"vertex {v} already marked")
    if not undominated(g, m, v):
        raise IllegalAction(f"vertex {v} dominated")
    after = (m - vacated) | {v}
    dropped = frozenset(u for u in after if u != v and not undominated(g, after, u))
    return after - dropped, vacated | dropped


def reachable_positions(g: MovementGraph, m: Iterable[int]) -> dict[int, dict[int, tuple[int, ...]]]:
    """For each unmarked undominated generator, vertices reachable by exchange-edge walks.

    A vertex is admitted when it is unmarked and stays undominated given the
    current marks plus a mark on the edge's source.  Paths start at the generator.
    """
    m = frozenset(m)
    out: dict[int, dict[int, tuple[int, ...]]] = {}
    for gen in sorted(g.generators):
        if gen in m or not undominated(g, m, gen):
            continue
        paths = {gen: (gen,)}
        queue = deque([gen])
        while queue:
            s = queue.popleft()
            with_source = m | {s}
            for t in g.successors[s]:
                if t in paths or t in m:
                    continue
                if undominated(g, with_source, t):
                    paths[t] = paths[s] + (t,)
                    queue.append(t)
        out[gen] = paths
    return out


def path_actions(path: tuple[int, ...]) -> list[Action]:
    acts: list[Action] = [CreateAt(path[0])]
    acts.extend(MoveAlong(a, b) for a, b in zip(path, path[1:]))
    return acts


def to_dot(g: MovementGraph, figure_style: bool = False, weight_domination: bool = True) -> str:
    """DOT rendering; ``figure_style`` draws generation dashed and domination bold."""
    spec = g.spec
    gen_style = "dashed" if figure_style else "solid"
    dom_style = "bold" if figure_style else "dashed"
    lines = ["digraph movement {", "  rankdir=LR;"]
    for c in spec.coalitions:
        shape = "doublecircle" if c.id in g.generators else "circle"
        lines.append(f'  v{c.id} [label="C{c.id}:{c.weight}", shape={shape}];')
    for s, t in g.exchange_edges:
        lines.append(f"  v{s} -> v{t} [style={gen_style}];")
    h = 0
    for t, groups in enumerate(g.hyperedges):
        for sources in groups:
            if len(sources) == 1:
                lines.append(f"  v{sources[0]} -> v{t} [style={dom_style}];")
                continue
            lines.append(f'  h{h} [shape=point, label=""];')
            for s in sources:
                lines.append(f"  v{s} -> h{h} [style={dom_style}, arrowhead=none];")
            lines.append(f"  h{h} -> v{t} [style={dom_style}];")
            h += 1
    if weight_domination:
        for c in spec.coalitions:
            for d in spec.overlaps[c.id]:
                if spec.weight(d) >= c.weight:
                    lines.append(f"  v{d} -> v{c.id} [style={dom_style}, color=gray];")
    lines.append("}")
    return "\n".join(lines) + "\n"
