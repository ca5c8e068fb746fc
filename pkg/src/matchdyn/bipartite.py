"""Two-phase construction of short paths to stability in bipartite instances with
general (possibly tied or incomplete) preferences.

Phase 1 resolves only blocking pairs whose W-side vertex is matched.  Phase 2
repeatedly lets an unmatched W-vertex take its most preferred blocking pair.
Works for plain, social, considerate (no links inside W) and friendship
(positive alphas only inside U) matching with one partner per agent.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import matching
from .game import ImprovementTrace, Step
from .matching import MatchingInstance

SUPPORTED = ("plain", "social", "considerate", "friendship")


class PreconditionViolated(ValueError):
    pass


@dataclass(frozen=True)
class PreferenceTable:
    """Per-vertex ranking of incident edges as ordered groups; a group is a tie."""

    ranking: Mapping[int, Sequence[Sequence[int]]]

    def benefit(self, x: int, e_id: int) -> Fraction | None:
        groups = self.ranking.get(x, ())
        for idx, grp in enumerate(groups):
            if e_id in grp:
                return Fraction(len(groups) - idx)
        return None


def instance_from_preferences(
    vertices: int,
    pairs: Sequence[tuple[int, int]],
    table: PreferenceTable,
    **kw,
) -> MatchingInstance:
    """Edges ranked by both endpoints become edges; anything else is absent.

    Benefits are rank scores (top group of r groups scores r), so only the
    order within each vertex's list matters.  Edge ids of the result follow
    the order of ``pairs`` with absent edges skipped.
    """
    for x, groups in table.ranking.items():
        for grp in groups:
            for e_id in grp:
                if not 0 <= e_id < len(pairs) or x not in pairs[e_id]:
                    raise PreconditionViolated(f"vertex {x} ranks edge {e_id} it is not part of")
    edges = []
    for e_id, (u, v) in enumerate(pairs):
        bu, bv = table.benefit(u, e_id), table.benefit(v, e_id)
        if bu is not None and bv is not None:
            edges.append((u, v, bu, bv))
    return matching.make_instance(vertices, edges, **kw)


def two_coloring(inst: MatchingInstance) -> tuple[frozenset[int], frozenset[int]] | None:
    color: dict[int, int] = {}
    adj: list[list[int]] = [[] for _ in range(inst.vertices)]
    for e in inst.edges:
        adj[e.u].append(e.v)
        adj[e.v].append(e.u)
    for root in range(inst.vertices):
        if root in color:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in color:
                    color[y] = 1 - color[x]
                    queue.append(y)
                elif color[y] == color[x]:
                    return None
    u = frozenset(x for x, c in color.items() if c == 0)
    return u, frozenset(range(inst.vertices)) - u


def sides(inst: MatchingInstance) -> tuple[frozenset[int], frozenset[int]]:
    """(U, W), checking the preconditions of the two-phase procedure."""
    if inst.k != 1:
        raise PreconditionViolated("two-phase procedure needs one partner per agent (k = 1)")
    if inst.variant not in SUPPORTED:
        raise PreconditionViolated(f"variant {inst.variant!r} is not supported; use one of {SUPPORTED}")
    if inst.bipartition is not None:
        left, right = inst.bipartition
        for i, e in enumerate(inst.edges):
            if (e.u in left) == (e.v in left):
                raise PreconditionViolated(f"non-bipartite: edge {i} lies inside one side")
    else:
        split = two_coloring(inst)
        if split is None:
            raise PreconditionViolated("non-bipartite: the graph has an odd cycle")
        left, right = split
    if inst.variant == "considerate":
        for l in inst.links:
            if l <= right:
                a, b = sorted(l)
                raise PreconditionViolated(f"W-W link present: {{{a}, {b}}}")
    if inst.variant == "friendship":
        for (a, b), val in inst.alphas.items():
            if val > 0 and not (a in left and b in left):
                raise PreconditionViolated(f"cross-partition alpha positive: alpha[{a}, {b}] = {val}")
    return left, right


@dataclass(frozen=True)
class TwoPhaseReport:
    trace: ImprovementTrace
    phase1_steps: int
    u_size: int
    w_size: int

    @property
    def bound(self) -> int:
        return 2 * self.u_size * self.w_size

    @property
    def phase2_steps(self) -> int:
        return len(self.trace) - self.phase1_steps


def _w_gain(inst: MatchingInstance, m: frozenset[int], e_id: int, w: int) -> Fraction:
    after = matching.after_resolution(inst, m, e_id)
    if inst.variant == "friendship":
        return matching._perceived(inst, after, w)
    return matching.utility(inst, after, w)


def two_phase_converge(inst: MatchingInstance, m0: Iterable[int]) -> TwoPhaseReport:
    left, right = sides(inst)
    m = frozenset(m0)
    if not matching.is_feasible(inst, m):
        raise PreconditionViolated("start matching is infeasible")
    w_of = {i: (e.v if e.v in right else e.u) for i, e in enumerate(inst.edges)}
    u_of = {i: e.other(w_of[i]) for i, e in enumerate(inst.edges)}
    steps: list[Step] = []
    limit = len(left) * len(right)

    def matched(x: int) -> bool:
        return bool(matching.partners(inst, m, x))

    def resolve(e_id: int) -> None:
        nonlocal m
        nxt = matching.resolve_pair(inst, m, e_id)
        steps.append(Step(e_id, (m | {e_id}) - nxt, None))
        m = nxt

    while True:
        eligible = [e for e in matching.blocking_pairs(inst, m) if matched(w_of[e])]
        if not eligible:
            break
        if len(steps) >= limit:
            raise RuntimeError("phase 1 exceeded |U|*|W| steps")
        resolve(min(eligible, key=lambda e: (w_of[e], u_of[e])))
    phase1 = len(steps)

    while True:
        blocking = matching.blocking_pairs(inst, m)
        if not blocking:
            break
        if len(steps) - phase1 >= limit:
            raise RuntimeError("phase 2 exceeded |U|*|W| steps")
        free = [w_of[e] for e in blocking if not matched(w_of[e])]
        if not free:
            raise RuntimeError("a matched W-vertex is in a blocking pair during phase 2")
        w = min(free)
        mine = [e for e in blocking if w_of[e] == w]
        resolve(min(mine, key=lambda e: (-_w_gain(inst, m, e, w), u_of[e])))

    return TwoPhaseReport(ImprovementTrace(frozenset(m0), tuple(steps)), phase1, len(left), len(right))
