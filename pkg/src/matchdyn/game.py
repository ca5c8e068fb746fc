"""Coalition formation games with generation and domination rules.

A state is a set of pairwise agent-disjoint coalitions, stored as a frozenset
of coalition ids.  All operations are pure functions of (spec, structure).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

SELF = "self"

POLICIES = ("lexicographic-min-id", "max-weight-then-min-id", "seeded-uniform-random")


class SpecError(ValueError):
    """Malformed game specification (dangling reference, bad weight, ...)."""


class NotBlocking(ValueError):
    pass


class InfeasibleStructure(ValueError):
    pass


class InvalidTrace(ValueError):
    def __init__(self, message: str, step: int):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class Coalition:
    id: int
    members: tuple[int, ...]
    weight: Fraction


@dataclass(frozen=True)
class Rule:
    """A generation or domination rule: ``pre`` present => effect on ``target``."""

    pre: frozenset[int]
    target: int


@dataclass(frozen=True)
class GameSpec:
    agents: int
    coalitions: tuple[Coalition, ...]
    self_generating: frozenset[int] = frozenset()
    generation_rules: tuple[Rule, ...] = ()
    domination_rules: tuple[Rule, ...] = ()
    include_weight_domination: bool = True

    def __post_init__(self):
        m = len(self.coalitions)
        for i, c in enumerate(self.coalitions):
            if c.id != i:
                raise SpecError(f"coalition ids must be dense: position {i} holds id {c.id}")
            if not c.members:
                raise SpecError(f"coalition {i} is empty")
            if list(c.members) != sorted(set(c.members)):
                raise SpecError(f"coalition {i} members not strictly increasing")
            if c.members[0] < 0 or c.members[-1] >= self.agents:
                raise SpecError(f"coalition {i} references an unknown agent")
            if c.weight <= 0:
                raise SpecError(f"coalition {i} has non-positive weight")
        for cid in self.self_generating:
            if not 0 <= cid < m:
                raise SpecError(f"self-generating id {cid} out of range")
        for kind, rules in (("generation", self.generation_rules), ("domination", self.domination_rules)):
            for r_idx, r in enumerate(rules):
                if not 0 <= r.target < m:
                    raise SpecError(f"{kind} rule {r_idx}: target {r.target} out of range")
                for p in r.pre:
                    if not 0 <= p < m:
                        raise SpecError(f"{kind} rule {r_idx}: precondition id {p} out of range")
        for r_idx, r in enumerate(self.generation_rules):
            if not r.pre:
                raise SpecError(f"generation rule {r_idx} has an empty precondition")
            if r.target in r.pre:
                raise SpecError(f"generation rule {r_idx} lists its target in the precondition")

    @property
    def m(self) -> int:
        return len(self.coalitions)

    def weight(self, cid: int) -> Fraction:
        return self.coalitions[cid].weight

    @cached_property
    def member_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(c.members) for c in self.coalitions)

    @cached_property
    def overlaps(self) -> tuple[tuple[int, ...], ...]:
        """overlaps[c] = ids of other coalitions sharing an agent with c."""
        by_agent: dict[int, list[int]] = {}
        for c in self.coalitions:
            for a in c.members:
                by_agent.setdefault(a, []).append(c.id)
        out = []
        for c in self.coalitions:
            nb = {d for a in c.members for d in by_agent[a]}
            nb.discard(c.id)
            out.append(tuple(sorted(nb)))
        return tuple(out)

    @cached_property
    def _gen_by_pre(self) -> tuple[tuple[int, ...], ...]:
        idx: list[list[int]] = [[] for _ in range(self.m)]
        for r_idx, r in enumerate(self.generation_rules):
            for p in r.pre:
                idx[p].append(r_idx)
        return tuple(tuple(x) for x in idx)

    @cached_property
    def _dom_by_target(self) -> tuple[tuple[Rule, ...], ...]:
        idx: list[list[Rule]] = [[] for _ in range(self.m)]
        for r in self.domination_rules:
            idx[r.target].append(r)
        return tuple(tuple(x) for x in idx)

    def is_feasible(self, s: Iterable[int]) -> bool:
        seen: set[int] = set()
        for cid in s:
            if not 0 <= cid < self.m:
                return False
            mem = self.member_sets[cid]
            if seen & mem:
                return False
            seen |= mem
        return True


@dataclass(frozen=True)
class ConsistencyReport:
    generation_ok: bool
    domination_ok: bool
    violations: tuple[str, ...] = ()

    @property
    def consistent(self) -> bool:
        return self.generation_ok and self.domination_ok


@dataclass(frozen=True)
class Step:
    inserted: int
    deleted: frozenset[int]
    rule: str | int | None = SELF


@dataclass(frozen=True)
class ImprovementTrace:
    start: frozenset[int]
    steps: tuple[Step, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def end(self) -> frozenset[int]:
        s = set(self.start)
        for st in self.steps:
            s -= st.deleted
            s.add(st.inserted)
        return frozenset(s)

    def states(self) -> list[frozenset[int]]:
        out = [self.start]
        s = set(self.start)
        for st in self.steps:
            s -= st.deleted
            s.add(st.inserted)
            out.append(frozenset(s))
        return out


@dataclass(frozen=True)
class SimulationResult:
    outcome: str  # "stable" | "cycle" | "budget"
    trace: ImprovementTrace
    period: int | None = None

    @property
    def cycle(self) -> bool:
        return self.outcome == "cycle"


def canonical(s: Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted(s))


def _require_feasible(spec: GameSpec, s: Iterable[int]) -> frozenset[int]:
    s = frozenset(s)
    if not spec.is_feasible(s):
        raise InfeasibleStructure(f"structure {canonical(s)} is not feasible")
    return s


def check_consistency(spec: GameSpec) -> ConsistencyReport:
    violations = []
    gen_ok = dom_ok = True
    members = spec.member_sets
    for i, r in enumerate(spec.generation_rules):
        if len(r.pre) != 1:
            gen_ok = False
            violations.append(f"generation rule {i}: precondition has {len(r.pre)} coalitions, expected 1")
        elif not members[next(iter(r.pre))] & members[r.target]:
            gen_ok = False
            violations.append(f"generation rule {i}: precondition does not overlap target {r.target}")
    for i, r in enumerate(spec.domination_rules):
        if r.target in r.pre:
            dom_ok = False
            violations.append(f"domination rule {i}: target {r.target} is part of its precondition")
        elif not any(members[p] & members[r.target] for p in r.pre):
            dom_ok = False
            violations.append(f"domination rule {i}: no precondition coalition overlaps target {r.target}")
    return ConsistencyReport(gen_ok, dom_ok, tuple(violations))


def generating_rule(spec: GameSpec, s: frozenset[int], c: int) -> str | int | None:
    """How ``c`` becomes a candidate in ``s``: SELF, a generation-rule index, or None."""
    if c in s:
        return None
    if c in spec.self_generating:
        return SELF
    for r_idx, r in enumerate(spec.generation_rules):
        if r.target == c and r.pre <= s:
            return r_idx
    return None


def candidate_coalitions(spec: GameSpec, s: Iterable[int]) -> frozenset[int]:
    s = frozenset(s)
    out = set(spec.self_generating) - s
    for p in s:
        for r_idx in spec._gen_by_pre[p]:
            r = spec.generation_rules[r_idx]
            if r.target not in s and r.pre <= s:
                out.add(r.target)
    return frozenset(out)


def is_dominated(spec: GameSpec, s: frozenset[int], c: int) -> bool:
    """True if some effective domination rule (stored or weight-based) fires on ``c`` in ``s``."""
    for r in spec._dom_by_target[c]:
        if r.pre <= s:
            return True
    if spec.include_weight_domination:
        w = spec.coalitions[c].weight
        for d in spec.overlaps[c]:
            if d in s and spec.coalitions[d].weight >= w:
                return True
    return False


def blocking_coalitions(spec: GameSpec, s: Iterable[int]) -> frozenset[int]:
    s = frozenset(s)
    return frozenset(c for c in candidate_coalitions(spec, s) if not is_dominated(spec, s, c))


def is_stable(spec: GameSpec, s: Iterable[int]) -> bool:
    return not blocking_coalitions(spec, s)


def apply_insertion(spec: GameSpec, s: frozenset[int], c: int) -> tuple[frozenset[int], frozenset[int]]:
    """Insert ``c`` without checking that it blocks; returns (structure, deleted)."""
    after = s | {c}
    # single simultaneous pass; removals cannot satisfy a domination precondition
    deleted = frozenset(d for d in after if d != c and is_dominated(spec, after, d))
    return after - deleted, deleted


def resolve(spec: GameSpec, s: Iterable[int], c: int) -> tuple[frozenset[int], frozenset[int]]:
    """Insert blocking coalition ``c`` and drop everything dominated afterwards."""
    s = frozenset(s)
    if c not in blocking_coalitions(spec, s):
        raise NotBlocking(f"coalition {c} is not blocking in {canonical(s)}")
    return apply_insertion(spec, s, c)


def step(spec: GameSpec, s: frozenset[int], c: int) -> tuple[frozenset[int], Step]:
    rule = generating_rule(spec, s, c)
    new, deleted = resolve(spec, s, c)
    return new, Step(c, deleted, rule)


def replay(spec: GameSpec, trace: ImprovementTrace) -> frozenset[int]:
    """Re-execute ``trace``; raise InvalidTrace at the first illegal or mismatching step."""
    s = frozenset(trace.start)
    if not spec.is_feasible(s):
        raise InvalidTrace("start structure infeasible", 0)
    for i, st in enumerate(trace.steps):
        if st.inserted not in blocking_coalitions(spec, s):
            raise InvalidTrace(f"coalition {st.inserted} is not blocking", i)
        if st.rule is not None and st.rule != SELF:
            r = spec.generation_rules[st.rule]
            if r.target != st.inserted or not r.pre <= s:
                raise InvalidTrace(f"generation rule {st.rule} does not apply", i)
        elif st.rule == SELF and st.inserted not in spec.self_generating:
            raise InvalidTrace(f"coalition {st.inserted} is not self-generating", i)
        s, deleted = apply_insertion(spec, s, st.inserted)
        if deleted != st.deleted:
            raise InvalidTrace(
                f"deleted {canonical(deleted)} but trace records {canonical(st.deleted)}", i
            )
    return s


def choose(spec: GameSpec, options: Sequence[int], policy: str, rng: np.random.Generator | None) -> int:
    if policy == "lexicographic-min-id":
        return min(options)
    if policy == "max-weight-then-min-id":
        return min(options, key=lambda c: (-spec.coalitions[c].weight, c))
    if policy == "seeded-uniform-random":
        ordered = sorted(options)
        return ordered[int(rng.integers(len(ordered)))]
    raise ValueError(f"unknown policy {policy!r}")


def simulate(
    spec: GameSpec,
    s0: Iterable[int],
    policy: str = "lexicographic-min-id",
    max_steps: int = 100_000,
    seed: int | None = None,
) -> SimulationResult:
    s = _require_feasible(spec, s0)
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; choose from {POLICIES}")
    rng = np.random.Generator(np.random.Philox(seed or 0)) if policy == "seeded-uniform-random" else None
    start = s
    visited = {canonical(s): 0}
    steps: list[Step] = []
    while True:
        options = blocking_coalitions(spec, s)
        if not options:
            return SimulationResult("stable", ImprovementTrace(start, tuple(steps)))
        if len(steps) >= max_steps:
            return SimulationResult("budget", ImprovementTrace(start, tuple(steps)))
        c = choose(spec, tuple(options), policy, rng)
        s, st = step(spec, s, c)
        steps.append(st)
        key = canonical(s)
        if key in visited:
            period = len(steps) - visited[key]
            return SimulationResult("cycle", ImprovementTrace(start, tuple(steps)), period)
        visited[key] = len(steps)


def make_spec(
    agents: int,
    coalitions: Sequence[tuple[Sequence[int], Fraction | int | str]],
    self_generating: Iterable[int] = (),
    generation_rules: Iterable[tuple[Iterable[int], int]] = (),
    domination_rules: Iterable[tuple[Iterable[int], int]] = (),
    include_weight_domination: bool = True,
) -> GameSpec:
    """Convenience constructor from plain tuples; coalition ids follow list order."""
    return GameSpec(
        agents=agents,
        coalitions=tuple(
            Coalition(i, tuple(sorted(set(mem))), Fraction(w)) for i, (mem, w) in enumerate(coalitions)
        ),
        self_generating=frozenset(self_generating),
        generation_rules=tuple(Rule(frozenset(p), t) for p, t in generation_rules),
        domination_rules=tuple(Rule(frozenset(p), t) for p, t in domination_rules),
        include_weight_domination=include_weight_domination,
    )


def feasible_structures(spec: GameSpec, limit: int | None = None) -> list[frozenset[int]]:
    """All feasible coalition structures, by backtracking over coalition ids."""
    out: list[frozenset[int]] = []
    members = spec.member_sets

    def rec(i: int, used: frozenset[int], chosen: list[int]):
        if limit is not None and len(out) > limit:
            return
        if i == spec.m:
            out.append(frozenset(chosen))
            return
        rec(i + 1, used, chosen)
        if not members[i] & used:
            chosen.append(i)
            rec(i + 1, used | members[i], chosen)
            chosen.pop()

    rec(0, frozenset(), [])
    return out
