"""Constructed instances: the three-coalition cycle, the exponential chain, the
3-SAT reduction gadgets, and seeded random consistent games."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import numpy as np

from .game import GameSpec, make_spec
from .matching import MatchingInstance, make_instance

SAT_VARIANTS = ("social", "local", "considerate", "friendship", "ties", "strict")


class FormulaError(ValueError):
    pass


def rng_for(seed: int) -> np.random.Generator:
    """Counter-based generator; ``spawn`` gives reproducible independent streams."""
    return np.random.Generator(np.random.Philox(seed))


# --- coalition games ----------------------------------------------------------


def gen_cycle_example() -> tuple[GameSpec, frozenset[int]]:
    """Six agents in pairs {0,1}, {2,3}, {4,5}; each pair is dominated by the previous one."""
    spec = make_spec(
        6,
        [((0, 1), 1), ((2, 3), 1), ((4, 5), 1)],
        self_generating=range(3),
        domination_rules=[({0}, 1), ({1}, 2), ({2}, 0)],
    )
    return spec, frozenset({0})


def chain_coalition(t: int, i: int) -> int:
    """Id of the t-th coalition (1..6) of gadget i (1..k)."""
    return 6 * (i - 1) + (t - 1)


_CHAIN_MEMBERS = ((0, 1, 2), (1, 3), (3, 4, 5), (4, 6), (2, 6, 7), (5, 7, 8))
_CHAIN_OFFSETS = (1, 2, 4, 3, 2, 5)


def gen_exponential_chain(k: int) -> tuple[GameSpec, frozenset[int]]:
    """k linked 9-agent gadgets; the last agent of gadget i is the first of gadget i+1.

    Start {C_{4,k}}.  Each gadget must build C_{1,i} twice before C_{6,i} exists,
    and C_{6,i} is what generates C_{1,i+1}.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    coalitions = []
    for i in range(1, k + 1):
        base = 8 * (i - 1)
        x = 5 * (i - 1)
        for mem, off in zip(_CHAIN_MEMBERS, _CHAIN_OFFSETS):
            coalitions.append((tuple(base + a for a in mem), x + off))
    c = chain_coalition
    rules = []
    for i in range(1, k + 1):
        rules += [({c(1, i)}, c(2, i)), ({c(1, i)}, c(5, i)), ({c(2, i)}, c(3, i))]
        if i == 1:
            rules += [({c(3, 1)}, c(1, 1)), ({c(4, 1)}, c(1, 1))]
        else:
            rules += [({c(3, i)}, c(4, i - 1)), ({c(4, i)}, c(4, i - 1)), ({c(6, i - 1)}, c(1, i))]
        rules.append(({c(5, i)}, c(6, i)))
    spec = make_spec(8 * k + 1, coalitions, generation_rules=rules)
    return spec, frozenset({c(4, k)})


def gen_random_consistent(n: int, m: int, density: float, seed: int, max_size: int = 3) -> GameSpec:
    """Random game whose rules are consistent by construction.

    Coalitions are distinct agent sets of size 1..max_size with distinct weights.
    Each overlapping (lighter, heavier) pair becomes a generation rule with
    probability ``density``; domination rules get one overlapping and at most
    one arbitrary extra precondition coalition.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = rng_for(seed)
    seen: set[tuple[int, ...]] = set()
    members: list[tuple[int, ...]] = []
    attempts = 0
    while len(members) < m:
        attempts += 1
        if attempts > 100 * m:
            raise ValueError(f"cannot draw {m} distinct coalitions over {n} agents")
        size = int(rng.integers(1, min(max_size, n) + 1))
        mem = tuple(sorted(int(a) for a in rng.choice(n, size=size, replace=False)))
        if mem not in seen:
            seen.add(mem)
            members.append(mem)
    weights = [Fraction(int(w) + 1, 2) for w in rng.permutation(2 * m)[:m]]
    sets = [set(x) for x in members]
    self_gen = [i for i in range(m) if rng.random() < 0.5] or [int(rng.integers(m))]
    gen_rules = []
    dom_rules = []
    for a, b in combinations(range(m), 2):
        if not sets[a] & sets[b]:
            continue
        lo, hi = (a, b) if weights[a] < weights[b] else (b, a)
        if rng.random() < density:
            gen_rules.append(({lo}, hi))
    for t in range(m):
        for p in range(m):
            if p == t or not sets[p] & sets[t] or rng.random() >= density / 2:
                continue
            pre = {p}
            if rng.random() < 0.5:
                extra = int(rng.integers(m))
                if extra != t:
                    pre.add(extra)
            dom_rules.append((pre, t))
    return make_spec(n, list(zip(members, weights)), self_gen, gen_rules, dom_rules)


# --- 3-SAT reduction ------------------------------------------------------------


@dataclass(frozen=True)
class Formula:
    variables: int
    clauses: tuple[tuple[int, ...], ...]


def parse_dimacs(text: str) -> Formula:
    nvars = None
    lits: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise FormulaError(f"bad problem line: {line!r}")
            nvars = int(parts[2])
            continue
        try:
            lits.extend(int(t) for t in line.split())
        except ValueError:
            raise FormulaError(f"bad clause line: {line!r}") from None
    clauses = []
    cur: list[int] = []
    for x in lits:
        if x == 0:
            clauses.append(tuple(cur))
            cur = []
        else:
            cur.append(x)
    if cur:
        clauses.append(tuple(cur))
    if nvars is None:
        nvars = max((abs(x) for c in clauses for x in c), default=0)
    formula = Formula(nvars, tuple(clauses))
    validate_formula(formula)
    return formula


def load_formula(path: str | Path) -> Formula:
    return parse_dimacs(Path(path).read_text())


def validate_formula(f: Formula) -> None:
    if f.variables < 1 or not f.clauses:
        raise FormulaError("formula needs at least one variable and one clause")
    for j, c in enumerate(f.clauses, 1):
        if len(c) != 3:
            raise FormulaError(f"clause {j} has {len(c)} literals, expected 3")
        for x in c:
            if x == 0 or abs(x) > f.variables:
                raise FormulaError(f"clause {j} has literal {x} outside 1..{f.variables}")


def is_satisfiable(f: Formula) -> bool:
    """Brute force; only for tiny formulas."""
    for bits in range(1 << f.variables):
        val = lambda x: bool(bits >> (abs(x) - 1) & 1) == (x > 0)  # noqa: E731
        if all(any(val(x) for x in c) for c in f.clauses):
            return True
    return False


@dataclass(frozen=True)
class SatLayout:
    """Vertex numbering of the reduction."""

    k: int
    l: int

    def u(self, lit: int) -> int:
        return 2 * (abs(lit) - 1) + (lit < 0)

    def w(self, lit: int) -> int:
        return 2 * self.k + 2 * (abs(lit) - 1) + (lit < 0)

    def x(self, j: int) -> int:
        return 4 * self.k + (j - 1)

    def gadget(self, j: int, slot: int, per_clause: int) -> int:
        return 4 * self.k + self.l + (j - 1) * per_clause + slot


def central_edges(f: Formula) -> tuple[list[tuple], list[tuple], list[tuple]]:
    """(E1, E2, E3) as (u, v, benefit) triples."""
    k, l = f.variables, len(f.clauses)
    lay = SatLayout(k, l)
    e1, e2, e3 = [], [], []
    for i in range(1, k + 1):
        e2.append((lay.u(i), lay.w(-i), 4 * l + i))
        e2.append((lay.u(-i), lay.w(i), 4 * l + k + i))
        e1.append((lay.u(i), lay.w(i), 4 * l + 2 * k + i))
        e1.append((lay.u(-i), lay.w(-i), 4 * l + 3 * k + i))
    for j, clause in enumerate(f.clauses, 1):
        seen = set()
        for pos, lit in enumerate(clause, 1):
            if lit in seen:
                continue  # repeated literal: keep its first position
            seen.add(lit)
            e3.append((lay.x(j), lay.w(lit), pos * l + j))
    return e1, e2, e3


def gen_sat_reduction(f: Formula, variant: str) -> tuple[MatchingInstance, frozenset[int], frozenset[int]]:
    """Matching instance plus (m0, m_star); m_star is reachable from m0 iff ``f`` is satisfiable."""
    validate_formula(f)
    if variant not in SAT_VARIANTS:
        raise ValueError(f"unknown reduction variant {variant!r}; choose from {SAT_VARIANTS}")
    k, l = f.variables, len(f.clauses)
    lay = SatLayout(k, l)
    e1, e2, e3 = central_edges(f)
    edges: list[tuple] = e1 + e2 + e3
    start = list(range(len(e1), len(e1) + len(e2)))
    final = list(range(len(e1)))
    links: list[tuple[int, int]] = []
    alphas: dict[tuple[int, int], Fraction] = {}
    per_clause = {"social": 1, "local": 1, "strict": 3}.get(variant, 2)

    def add(edge, *into):
        edges.append(edge)
        for target in into:
            target.append(len(edges) - 1)

    for j in range(1, l + 1):
        x = lay.x(j)
        y = lay.gadget(j, 0, per_clause)
        if variant in ("social", "local"):
            add((x, y, j), start)
        elif variant in ("considerate", "friendship", "ties"):
            yp = lay.gadget(j, 1, per_clause)
            b_y = j if variant == "ties" else Fraction(2 * j - 1, 2)
            add((x, y, b_y), start)
            add((x, yp, j), final)
            if variant == "considerate":
                links.append((y, yp))
            if variant == "friendship":
                alphas[(x, y)] = Fraction(1, 2 * j - 1)
        else:
            yp = lay.gadget(j, 1, per_clause)
            xp = lay.gadget(j, 2, per_clause)
            # (u, v, b_u, b_v): x ranks y over y' below the centre; x' ranks y' over y;
            # y ranks x' over x; y' ranks x over x'
            add((x, y, 1, 1), start)
            add((x, yp, Fraction(1, 2), 2), final)
            add((xp, y, 1, 2), final)
            add((xp, yp, 2, 1), start)

    n = 4 * k + l + l * per_clause
    if variant in ("social", "local"):
        u_side = [lay.u(i) for i in range(1, k + 1)] + [lay.u(-i) for i in range(1, k + 1)]
        u_side += [lay.x(j) for j in range(1, l + 1)]
        w_side = [lay.w(i) for i in range(1, k + 1)] + [lay.w(-i) for i in range(1, k + 1)]
        links += [(a, b) for a in u_side for b in w_side]
    base_variant = {"ties": "plain", "strict": "plain"}.get(variant, variant)
    u_set = set(range(2 * k)) | {lay.x(j) for j in range(1, l + 1)}
    if variant == "strict":
        u_set |= {lay.gadget(j, 2, per_clause) for j in range(1, l + 1)}
    bip = (frozenset(u_set), frozenset(range(n)) - frozenset(u_set))
    inst = make_instance(
        n,
        edges,
        links=links,
        alphas=alphas,
        variant=base_variant,
        lookahead=2,
        bipartition=bip,
    )
    return inst, frozenset(start), frozenset(final)


# --- random matching instances ------------------------------------------------


def gen_random_bipartite(
    nu: int,
    nw: int,
    variant: str,
    seed: int,
    edge_prob: float = 0.6,
    link_prob: float = 0.4,
    levels: int = 3,
) -> MatchingInstance:
    """Bipartite instance with general preferences: per-endpoint benefits drawn
    from 1..levels (ties likely), missing edges as incomplete lists.

    Links respect the two-phase preconditions: none inside W for considerate
    matching; friendship values are positive only inside U and need not be symmetric.
    """
    rng = rng_for(seed)
    us, ws = list(range(nu)), list(range(nu, nu + nw))
    edges = []
    for u in us:
        for w in ws:
            if rng.random() < edge_prob:
                edges.append((u, w, int(rng.integers(1, levels + 1)), int(rng.integers(1, levels + 1))))
    links = []
    alphas: dict[tuple[int, int], Fraction] = {}
    if variant in ("social", "considerate"):
        pool = [(a, b) for a, b in combinations(range(nu + nw), 2) if not (a >= nu and b >= nu)]
        links = [p for p in pool if rng.random() < link_prob]
    if variant == "friendship":
        for a in us:
            for b in us:
                if a != b and rng.random() < link_prob:
                    alphas[(a, b)] = Fraction(int(rng.integers(1, 5)), int(rng.integers(1, 5)))
    return make_instance(
        nu + nw,
        edges,
        links=links,
        alphas=alphas,
        symmetric_alphas=False,
        variant=variant,
        bipartition=(frozenset(us), frozenset(ws)),
    )


def gen_random_matching(
    n: int,
    variant: str,
    seed: int,
    k: int = 1,
    edge_prob: float = 0.5,
    link_prob: float = 0.4,
    lookahead: int = 2,
) -> MatchingInstance:
    """Small instance with correlated benefits, suitable for embedding."""
    rng = rng_for(seed)
    edges = [
        (a, b, int(rng.integers(1, 5)))
        for a, b in combinations(range(n), 2)
        if rng.random() < edge_prob
    ]
    links = [p for p in combinations(range(n), 2) if rng.random() < link_prob]
    alphas: dict[tuple[int, int], Fraction] = {}
    if variant == "friendship":
        for a, b in combinations(range(n), 2):
            if rng.random() < link_prob:
                alphas[(a, b)] = Fraction(int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    return make_instance(
        n, edges, links=links, alphas=alphas, variant=variant, k=k, lookahead=lookahead
    )
