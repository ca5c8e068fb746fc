"""Polynomial paths to stability and witness-sequence truncation for consistent games."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from . import movement
from .game import (
    SELF,
    GameSpec,
    ImprovementTrace,
    InfeasibleStructure,
    InvalidTrace,
    Step,
    apply_insertion,
    canonical,
    check_consistency,
    replay,
)
from .movement import CreateAt, InconsistentSpec, MoveAlong, MovementGraph


@dataclass(frozen=True)
class ConvergenceReport:
    trace: ImprovementTrace
    phase1_steps: int
    phase2_steps: int
    n: int
    m: int

    @property
    def bound(self) -> int:
        return self.n * self.m**2

    @property
    def total_bound(self) -> int:
        return self.n * self.m**2 + self.n * self.m

    @property
    def phase1(self) -> tuple[Step, ...]:
        return self.trace.steps[: self.phase1_steps]

    @property
    def phase2(self) -> tuple[Step, ...]:
        return self.trace.steps[self.phase1_steps :]


class _Run:
    def __init__(self, g: MovementGraph, marks: frozenset[int]):
        self.g = g
        self.marks = marks
        self.steps: list[Step] = []

    def act(self, action) -> None:
        g = self.g
        if isinstance(action, CreateAt):
            rule = SELF
            target = action.vertex
        else:
            rule = g.edge_rule[(action.source, action.target)]
            target = action.target
        self.marks, removed = movement.step(g, self.marks, action)
        self.steps.append(Step(target, removed, rule))

    def walk(self, path: tuple[int, ...]) -> None:
        for action in movement.path_actions(path):
            # paths were found against a superset of the live marks, so every
            # action stays legal; re-check rather than trust it
            if isinstance(action, MoveAlong) and action.source not in self.marks:
                raise RuntimeError(f"path {path} broken at {action}")
            self.act(action)


def _first_exchange(g: MovementGraph, marks: frozenset[int]) -> MoveAlong | None:
    for s, t in g.exchange_edges:
        if s in marks and t not in marks and movement.undominated(g, marks, t):
            return MoveAlong(s, t)
    return None


def _overlaps_mark(g: MovementGraph, marks: frozenset[int], v: int) -> bool:
    return any(u in marks for u in g.spec.overlaps[v])


def converge(spec: GameSpec, s0: Iterable[int]) -> ConvergenceReport:
    """Two-phase construction of an improvement sequence ending in a stable structure."""
    s0 = frozenset(s0)
    if not spec.is_feasible(s0):
        raise InfeasibleStructure(f"start structure {canonical(s0)} is not feasible")
    g = movement.build(spec)
    run = _Run(g, s0)
    guard = spec.agents * spec.m**2 + spec.agents * spec.m + spec.m + 1

    # phase 1: replace existing markings by heavier ones while possible
    while True:
        if len(run.steps) > guard:
            raise RuntimeError("phase 1 exceeded its step bound")
        move = _first_exchange(g, run.marks)
        if move is not None:
            run.act(move)
            continue
        found = None
        for gen, paths in movement.reachable_positions(g, run.marks).items():
            for v, path in paths.items():
                if _overlaps_mark(g, run.marks, v):
                    found = path
                    break
            if found:
                break
        if found is None:
            break
        run.walk(found)
    phase1 = len(run.steps)

    # phase 2: add the heaviest reachable marking until none remains
    while True:
        if len(run.steps) > guard:
            raise RuntimeError("phase 2 exceeded its step bound")
        best = None
        for gen, paths in movement.reachable_positions(g, run.marks).items():
            for v, path in paths.items():
                key = (-spec.weight(v), v, gen)
                if best is None or key < best[0]:
                    best = (key, path)
        if best is None:
            break
        run.walk(best[1])

    trace = ImprovementTrace(s0, tuple(run.steps))
    return ConvergenceReport(trace, phase1, len(run.steps) - phase1, spec.agents, spec.m)


def _instances(spec: GameSpec, trace: ImprovementTrace):
    """Replay ``trace`` and describe every coalition instance.

    Returns (pred, deleter, survivors): pred[i] is the instance consumed as
    generation precondition by step i (or None); deleter[x] is the step that
    removed instance x.  Instances of the start structure are keyed ("s", cid).
    """
    replay(spec, trace)
    live: dict[int, object] = {c: ("s", c) for c in trace.start}
    pred: list[object | None] = []
    deleter: dict[object, int] = {}
    for i, st in enumerate(trace.steps):
        p = None
        if st.inserted not in spec.self_generating and st.rule not in (None, SELF):
            (pc,) = spec.generation_rules[st.rule].pre
            p = live[pc]
        elif st.inserted not in spec.self_generating:
            raise InvalidTrace("non-self-generating coalition without rule", i)
        pred.append(p)
        for d in st.deleted:
            deleter[live.pop(d)] = i
        live[st.inserted] = i
    return pred, deleter, set(live.values())


def truncate(spec: GameSpec, s0: Iterable[int], trace: ImprovementTrace) -> ImprovementTrace:
    """Drop steps whose coalition is created and later deleted without contributing.

    A step is kept if its coalition survives to the end, is the generation
    precondition of a kept step, or deletes a kept coalition (start-structure
    coalitions are always kept).  Requires consistent rules.
    """
    s0 = frozenset(s0)
    if s0 != trace.start:
        raise InvalidTrace("trace start differs from s0", 0)
    report = check_consistency(spec)
    if not report.consistent:
        raise InconsistentSpec("; ".join(report.violations))
    steps = [
        Step(st.inserted, st.deleted, SELF) if st.inserted in spec.self_generating else st
        for st in trace.steps
    ]
    trace = ImprovementTrace(s0, tuple(steps))
    pred, deleter, survivors = _instances(spec, trace)

    kept: set[object] = {("s", c) for c in s0} | survivors
    changed = True
    while changed:
        changed = False
        # back-to-front: a kept step pulls in its predecessor; a kept deletion pulls in its deleter
        for i in range(len(steps) - 1, -1, -1):
            if i in kept and pred[i] is not None and pred[i] not in kept:
                kept.add(pred[i])
                changed = True
        for x, i in deleter.items():
            if x in kept and i not in kept:
                kept.add(i)
                changed = True

    # deletions shrink where removed coalitions are no longer present
    out = []
    live = s0
    for i, st in enumerate(steps):
        if i in kept:
            live, deleted = apply_insertion(spec, live, st.inserted)
            out.append(Step(st.inserted, deleted, st.rule))
    result = ImprovementTrace(s0, tuple(out))
    end = replay(spec, result)
    if end != trace.end:
        raise InvalidTrace("truncation changed the endpoint", len(out))
    return result
