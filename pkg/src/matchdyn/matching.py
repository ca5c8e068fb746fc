"""Matching games with dynamic constraints and their embeddings into coalition games.

Variants: plain, social, local (lookahead ``lookahead``), considerate and
friendship matching, each with up to ``k`` partners per agent.  With k > 1 an
agent at capacity gives up its worst edge (lowest own benefit, then lowest edge
id) when accepting a new one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping

from .game import Coalition, GameSpec, Rule

VARIANTS = ("plain", "social", "local", "considerate", "friendship")


class InstanceError(ValueError):
    pass


class UnsupportedEmbedding(ValueError):
    pass


class WrongVariant(ValueError):
    pass


class NotBlockingPair(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    bu: Fraction
    bv: Fraction

    @property
    def ends(self) -> tuple[int, int]:
        return (self.u, self.v)

    @property
    def correlated(self) -> bool:
        return self.bu == self.bv

    def benefit(self, x: int) -> Fraction:
        if x == self.u:
            return self.bu
        if x == self.v:
            return self.bv
        raise KeyError(x)

    def other(self, x: int) -> int:
        return self.v if x == self.u else self.u


def _pair(a: int, b: int) -> frozenset[int]:
    return frozenset((a, b))


@dataclass(frozen=True)
class MatchingInstance:
    vertices: int
    edges: tuple[Edge, ...]
    links: frozenset[frozenset[int]] = frozenset()
    # alphas[(u, v)]: how much u cares about v's benefit
    alphas: Mapping[tuple[int, int], Fraction] = field(default_factory=dict)
    variant: str = "plain"
    k: int = 1
    lookahead: int = 2
    bipartition: tuple[frozenset[int], frozenset[int]] | None = None
    considerate_symmetric: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InstanceError(f"unknown variant {self.variant!r}")
        if self.k < 1:
            raise InstanceError("k must be at least 1")
        if self.lookahead < 2 and self.variant == "local":
            raise InstanceError("lookahead must be at least 2")
        seen = set()
        for i, e in enumerate(self.edges):
            if e.u == e.v or not (0 <= e.u < self.vertices and 0 <= e.v < self.vertices):
                raise InstanceError(f"edge {i} has invalid endpoints")
            if e.bu <= 0 or e.bv <= 0:
                raise InstanceError(f"edge {i} has a non-positive benefit")
            key = _pair(e.u, e.v)
            if key in seen:
                raise InstanceError(f"edge {i} duplicates an earlier edge")
            seen.add(key)
        for (a, b), val in self.alphas.items():
            if a == b or val < 0:
                raise InstanceError(f"invalid friendship value on ({a}, {b})")
        if self.bipartition is not None:
            left, right = self.bipartition
            if left & right or (left | right) != frozenset(range(self.vertices)):
                raise InstanceError("bipartition must split the vertex set")

    def alpha(self, a: int, b: int) -> Fraction:
        return self.alphas.get((a, b), Fraction(0))

    @cached_property
    def incident(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in range(self.vertices)]
        for i, e in enumerate(self.edges):
            inc[e.u].append(i)
            inc[e.v].append(i)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def edge_index(self) -> dict[frozenset[int], int]:
        return {_pair(e.u, e.v): i for i, e in enumerate(self.edges)}

    @cached_property
    def link_adj(self) -> tuple[frozenset[int], ...]:
        adj: list[set[int]] = [set() for _ in range(self.vertices)]
        for l in self.links:
            a, b = tuple(l)
            adj[a].add(b)
            adj[b].add(a)
        return tuple(frozenset(x) for x in adj)

    def has_link(self, a: int, b: int) -> bool:
        return b in self.link_adj[a]

    def with_variant(self, variant: str, **kw) -> "MatchingInstance":
        from dataclasses import replace

        return replace(self, variant=variant, **kw)


def make_instance(
    vertices: int,
    edges: Iterable[tuple],
    links: Iterable[tuple[int, int]] = (),
    alphas: Mapping[tuple[int, int], object] | None = None,
    symmetric_alphas: bool = True,
    **kw,
) -> MatchingInstance:
    """Build an instance from ``(u, v, b)`` or ``(u, v, bu, bv)`` tuples."""
    es = []
    for e in edges:
        if len(e) == 3:
            u, v, b = e
            es.append(Edge(u, v, Fraction(b), Fraction(b)))
        else:
            u, v, bu, bv = e
            es.append(Edge(u, v, Fraction(bu), Fraction(bv)))
    al: dict[tuple[int, int], Fraction] = {}
    for (a, b), val in (alphas or {}).items():
        al[(a, b)] = Fraction(val)
        if symmetric_alphas:
            al[(b, a)] = Fraction(val)
    return MatchingInstance(
        vertices=vertices,
        edges=tuple(es),
        links=frozenset(_pair(a, b) for a, b in links),
        alphas=al,
        **kw,
    )


# --- direct semantics -------------------------------------------------------


def is_feasible(inst: MatchingInstance, m: Iterable[int]) -> bool:
    deg = [0] * inst.vertices
    for i in m:
        if not 0 <= i < len(inst.edges):
            return False
        e = inst.edges[i]
        deg[e.u] += 1
        deg[e.v] += 1
    return all(d <= inst.k for d in deg)


def partners(inst: MatchingInstance, m: frozenset[int], x: int) -> list[int]:
    """Edge ids of ``m`` incident to ``x``."""
    return [i for i in inst.incident[x] if i in m]


def displaced(inst: MatchingInstance, m: frozenset[int], x: int) -> int | None:
    """Edge ``x`` gives up to accept a new partner, or None when it has a free slot."""
    inc = partners(inst, m, x)
    if len(inc) < inst.k:
        return None
    return min(inc, key=lambda i: (inst.edges[i].benefit(x), i))


def utility(inst: MatchingInstance, m: Iterable[int], x: int) -> Fraction:
    """B(M, x): sum of x's benefits over its matched edges (0 when unmatched)."""
    ms = m if isinstance(m, frozenset) else frozenset(m)
    return sum((inst.edges[i].benefit(x) for i in inst.incident[x] if i in ms), Fraction(0))


def perceived_utility(inst: MatchingInstance, m: Iterable[int], x: int) -> Fraction:
    if inst.variant != "friendship":
        raise WrongVariant("perceived utility is defined for friendship matching only")
    return _perceived(inst, frozenset(m), x)


def _perceived(inst: MatchingInstance, m: frozenset[int], x: int) -> Fraction:
    total = utility(inst, m, x)
    for (a, b), val in inst.alphas.items():
        if a == x and val:
            total += val * utility(inst, m, b)
    return total


def after_resolution(inst: MatchingInstance, m: frozenset[int], e_id: int) -> frozenset[int]:
    e = inst.edges[e_id]
    drop = {displaced(inst, m, e.u), displaced(inst, m, e.v)} - {None}
    return (m - drop) | {e_id}


def _hop_distance_within(inst: MatchingInstance, m: frozenset[int], a: int, b: int, limit: int) -> bool:
    adj = [set(x) for x in inst.link_adj]
    for i in m:
        e = inst.edges[i]
        adj[e.u].add(e.v)
        adj[e.v].add(e.u)
    dist = {a: 0}
    queue = deque([a])
    while queue:
        x = queue.popleft()
        if dist[x] == limit:
            continue
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                if y == b:
                    return True
                queue.append(y)
    return False


def _considerate_ok(inst: MatchingInstance, m: frozenset[int], e: Edge) -> bool:
    ends = ((e.u, e.v), (e.v, e.u)) if inst.considerate_symmetric else ((e.u, e.v),)
    for x, y in ends:
        f = displaced(inst, m, x)
        if f is None:
            continue
        z = inst.edges[f].other(x)
        if inst.has_link(x, z) or inst.has_link(z, y):
            return False
    return True


def accessible(inst: MatchingInstance, m: frozenset[int], e_id: int) -> bool:
    e = inst.edges[e_id]
    var = inst.variant
    if var in ("plain", "friendship"):
        return True
    if var == "social":
        return inst.has_link(e.u, e.v)
    if var == "local":
        return _hop_distance_within(inst, m, e.u, e.v, inst.lookahead)
    if var == "considerate":
        return _considerate_ok(inst, m, e)
    raise WrongVariant(var)


def _improves(inst: MatchingInstance, m: frozenset[int], e_id: int) -> bool:
    e = inst.edges[e_id]
    if inst.variant == "friendship":
        after = after_resolution(inst, m, e_id)
        return all(_perceived(inst, m, x) < _perceived(inst, after, x) for x in e.ends)
    for x in e.ends:
        f = displaced(inst, m, x)
        if f is not None and not e.benefit(x) > inst.edges[f].benefit(x):
            return False
    return True


def is_blocking(inst: MatchingInstance, m: Iterable[int], e_id: int) -> bool:
    m = frozenset(m)
    return e_id not in m and _improves(inst, m, e_id) and accessible(inst, m, e_id)


def blocking_pairs(inst: MatchingInstance, m: Iterable[int]) -> frozenset[int]:
    """Edge ids of all variant blocking pairs of ``m``."""
    m = frozenset(m)
    return frozenset(i for i in range(len(inst.edges)) if is_blocking(inst, m, i))


def as_pairs(inst: MatchingInstance, ids: Iterable[int]) -> set[frozenset[int]]:
    return {_pair(*inst.edges[i].ends) for i in ids}


def resolve_pair(inst: MatchingInstance, m: Iterable[int], e_id: int) -> frozenset[int]:
    m = frozenset(m)
    if not is_blocking(inst, m, e_id):
        raise NotBlockingPair(f"edge {e_id} is not a blocking pair")
    return after_resolution(inst, m, e_id)


def is_stable(inst: MatchingInstance, m: Iterable[int]) -> bool:
    return not blocking_pairs(inst, m)


def feasible_matchings(inst: MatchingInstance, limit: int | None = None) -> list[frozenset[int]]:
    out: list[frozenset[int]] = []
    deg = [0] * inst.vertices

    def rec(i: int, chosen: list[int]):
        if limit is not None and len(out) > limit:
            return
        if i == len(inst.edges):
            out.append(frozenset(chosen))
            return
        rec(i + 1, chosen)
        e = inst.edges[i]
        if deg[e.u] < inst.k and deg[e.v] < inst.k:
            deg[e.u] += 1
            deg[e.v] += 1
            chosen.append(i)
            rec(i + 1, chosen)
            chosen.pop()
            deg[e.u] -= 1
            deg[e.v] -= 1

    rec(0, [])
    return out


# --- embeddings ---------------------------------------------------------------


def _link_distance_within(inst: MatchingInstance, a: int, b: int, limit: int) -> bool:
    return _hop_distance_within(inst, frozenset(), a, b, limit)


@dataclass(frozen=True)
class StateMap:
    """Correspondence between matchings and coalition structures of an embedding.

    For k = 1 coalition ids coincide with edge ids.  For k > 1 every edge has
    k*k coalitions, one per pair of agent copies; a matching maps to the
    canonical structure that hands out the lowest free copies in edge-id order.
    """

    inst: MatchingInstance
    k: int

    def coalition(self, e_id: int, copy_u: int, copy_v: int) -> int:
        return e_id * self.k * self.k + copy_u * self.k + copy_v

    def edge_of(self, cid: int) -> int:
        return cid // (self.k * self.k)

    def copies_of(self, cid: int) -> tuple[int, int]:
        r = cid % (self.k * self.k)
        return divmod(r, self.k)

    def to_matching(self, s: Iterable[int]) -> frozenset[int]:
        return frozenset(self.edge_of(c) for c in s)

    def _assignment(self, m: frozenset[int]) -> dict[tuple[int, int], int]:
        """(vertex, edge) -> copy index under the canonical assignment."""
        used: dict[int, int] = {}
        out = {}
        for e_id in sorted(m):
            e = self.inst.edges[e_id]
            for x in e.ends:
                out[(x, e_id)] = used.get(x, 0)
                used[x] = used.get(x, 0) + 1
        return out

    def to_structure(self, m: Iterable[int]) -> frozenset[int]:
        m = frozenset(m)
        if self.k == 1:
            return m
        asg = self._assignment(m)
        return frozenset(
            self.coalition(i, asg[(self.inst.edges[i].u, i)], asg[(self.inst.edges[i].v, i)]) for i in m
        )

    def coalition_for(self, m: Iterable[int], e_id: int) -> int:
        """Coalition that realises pair ``e_id`` in the canonical structure of ``m``.

        Each endpoint uses its lowest free copy, or, at capacity, the copy
        holding the edge it would give up.
        """
        m = frozenset(m)
        if self.k == 1:
            return e_id
        asg = self._assignment(m)
        e = self.inst.edges[e_id]
        copies = []
        for x in e.ends:
            f = displaced(self.inst, m, x)
            if f is None:
                taken = {asg[(x, i)] for i in partners(self.inst, m, x)}
                copies.append(min(set(range(self.k)) - taken))
            else:
                copies.append(asg[(x, f)])
        return self.coalition(e_id, copies[0], copies[1])


def _require_correlated(inst: MatchingInstance) -> None:
    for i, e in enumerate(inst.edges):
        if not e.correlated:
            raise UnsupportedEmbedding(f"edge {i} has uncorrelated benefits; embedding needs b_u = b_v")


def _orientations(inst: MatchingInstance):
    """Yield (s, t, f, e): e = {s, r} is a target edge, f = {s, t} another edge at s."""
    for e_id, e in enumerate(inst.edges):
        for s in e.ends:
            for f_id in inst.incident[s]:
                if f_id != e_id:
                    yield s, e_id, f_id


def _friendship_rules(inst: MatchingInstance, weight) -> set[tuple[frozenset[int], int]]:
    """Base (edge-level) rules of the friendship embedding beyond weight domination.

    Single-edge rules: the far endpoint r of target e = {s, r} loses more
    through friendship with s and s's dropped partner than it gains.  Two-edge
    rules: same, with r also giving up its own edge g = {q, r}.
    """
    b = lambda i: inst.edges[i].bu  # noqa: E731  correlated
    a = inst.alpha
    rules: set[tuple[frozenset[int], int]] = set()
    for s, e_id, f_id in _orientations(inst):
        e, f = inst.edges[e_id], inst.edges[f_id]
        r, t = e.other(s), f.other(s)
        if (a(r, t) + a(r, s)) * b(f_id) >= weight(e_id):
            rules.add((frozenset({f_id}), e_id))
        for g_id in inst.incident[r]:
            if g_id == e_id:
                continue
            q = inst.edges[g_id].other(r)
            if q == s:
                continue
            if t == q and inst.k == 1:
                continue  # f and g share t and cannot coexist
            if weight(g_id) + (a(r, t) + a(r, s)) * b(f_id) >= weight(e_id):
                rules.add((frozenset({f_id, g_id}), e_id))
    return rules


def _considerate_rules(inst: MatchingInstance) -> set[tuple[frozenset[int], int]]:
    rules = set()
    for s, e_id, f_id in _orientations(inst):
        e, f = inst.edges[e_id], inst.edges[f_id]
        if not inst.considerate_symmetric and s != e.u:
            continue
        r, t = e.other(s), f.other(s)
        if inst.has_link(s, t) or inst.has_link(t, r):
            rules.add((frozenset({f_id}), e_id))
    return rules


def _local_rules(inst: MatchingInstance) -> set[tuple[frozenset[int], int]]:
    """Generation rules for lookahead ``ell``: one per simple path of length <= ell.

    A pair {u, v} is accessible when a path of at most ell hops joins u and v
    in links plus matched edges.  Each simple path through links and edges
    yields the rule "its edges present -> {u, v} is a candidate"; paths made of
    links alone are covered by the self-generating set.  Preconditions that
    could never coexist (more than k edges at one vertex) and supersets of
    other preconditions are dropped.
    """
    ell = inst.lookahead
    adj: list[list[tuple[int, int | None]]] = [[] for _ in range(inst.vertices)]
    for l in inst.links:
        a, b = tuple(l)
        adj[a].append((b, None))
        adj[b].append((a, None))
    for i, e in enumerate(inst.edges):
        adj[e.u].append((e.v, i))
        adj[e.v].append((e.u, i))

    def coexist(pre: frozenset[int]) -> bool:
        deg: dict[int, int] = {}
        for i in pre:
            for x in inst.edges[i].ends:
                deg[x] = deg.get(x, 0) + 1
        return all(d <= inst.k for d in deg.values())

    rules: dict[int, set[frozenset[int]]] = {}
    for e_id, e in enumerate(inst.edges):
        found: set[frozenset[int]] = set()
        stack = [(e.u, (e.u,), frozenset())]
        while stack:
            x, path, used = stack.pop()
            if x == e.v:
                if used and coexist(used):
                    found.add(used)
                continue
            if len(path) > ell:
                continue
            for y, via in adj[x]:
                if y in path or via == e_id:
                    continue
                stack.append((y, path + (y,), used if via is None else used | {via}))
        minimal = {p for p in found if not any(q < p for q in found)}
        if minimal:
            rules[e_id] = minimal
    return {(p, t) for t, ps in rules.items() for p in ps}


def embed(inst: MatchingInstance) -> tuple[GameSpec, StateMap]:
    """Coalition game whose improvement dynamics mirror ``inst``."""
    _require_correlated(inst)
    var, k = inst.variant, inst.k
    if var == "local" and inst.lookahead > 3:
        raise UnsupportedEmbedding(
            "local matching embeds only with lookahead <= 3; longer paths have no "
            "embedding with consistent generation rules"
        )
    if var == "friendship":
        for (a, b), val in inst.alphas.items():
            if inst.alpha(b, a) != val:
                raise UnsupportedEmbedding(f"friendship embedding needs symmetric alphas; ({a}, {b}) differs")

    def weight(i: int) -> Fraction:
        e = inst.edges[i]
        if var == "friendship":
            return e.bu * (1 + inst.alpha(e.u, e.v))
        return e.bu

    n_edges = len(inst.edges)
    if var in ("plain", "considerate", "friendship"):
        base_gen = set(range(n_edges))
    elif var == "social":
        base_gen = {i for i, e in enumerate(inst.edges) if inst.has_link(e.u, e.v)}
    else:
        base_gen = {i for i, e in enumerate(inst.edges) if _link_distance_within(inst, e.u, e.v, inst.lookahead)}

    gen_rules: set[tuple[frozenset[int], int]] = set()
    dom_rules: set[tuple[frozenset[int], int]] = set()
    if var == "local":
        gen_rules = _local_rules(inst)
    elif var == "considerate":
        dom_rules = _considerate_rules(inst)
    elif var == "friendship":
        dom_rules = _friendship_rules(inst, weight)

    smap = StateMap(inst, k)
    if k == 1:
        coalitions = tuple(Coalition(i, tuple(sorted(e.ends)), weight(i)) for i, e in enumerate(inst.edges))
        spec = GameSpec(
            agents=inst.vertices,
            coalitions=coalitions,
            self_generating=frozenset(base_gen),
            generation_rules=tuple(Rule(p, t) for p, t in sorted(gen_rules, key=_rule_key)),
            domination_rules=tuple(Rule(p, t) for p, t in sorted(dom_rules, key=_rule_key)),
        )
        return spec, smap

    # k > 1: vertex x becomes copies x*k .. x*k+k-1; edge i gets auxiliary agent n*k + i
    n = inst.vertices
    coalitions = []
    for i, e in enumerate(inst.edges):
        for cu in range(k):
            for cv in range(k):
                cid = smap.coalition(i, cu, cv)
                members = tuple(sorted((e.u * k + cu, e.v * k + cv, n * k + i)))
                coalitions.append(Coalition(cid, members, weight(i)))
    coalitions.sort(key=lambda c: c.id)
    generators = frozenset(smap.coalition(i, cu, cv) for i in base_gen for cu in range(k) for cv in range(k))
    lifted = _replacement_rules(inst, smap)
    for pre, tgt in dom_rules:
        lifted |= _lift(inst, smap, pre, tgt)
    lifted_gen = set()
    for pre, tgt in gen_rules:
        lifted_gen |= _lift_free(inst, smap, pre, tgt)
    spec = GameSpec(
        agents=n * k + n_edges,
        coalitions=tuple(coalitions),
        self_generating=generators,
        generation_rules=tuple(Rule(p, t) for p, t in sorted(lifted_gen, key=_rule_key)),
        domination_rules=tuple(Rule(p, t) for p, t in sorted(lifted, key=_rule_key)),
    )
    return spec, smap


def _rule_key(rule):
    pre, tgt = rule
    return (tgt, tuple(sorted(pre)))


def _replacement_rules(inst: MatchingInstance, smap: StateMap):
    """Forbid a new edge from taking the copy of an edge that is not its endpoint's worst.

    A full agent gives up only its worst edge, so a coalition for e at the copy
    of x that holds g is dominated whenever x also holds a worse edge f.
    """
    k = smap.k
    out = set()
    for x in range(inst.vertices):
        inc = inst.incident[x]
        for f_id, g_id in product(inc, repeat=2):
            f, g = inst.edges[f_id], inst.edges[g_id]
            if (f.benefit(x), f_id) >= (g.benefit(x), g_id):
                continue
            for e_id in inc:
                if e_id in (f_id, g_id):
                    continue
                for c, c2 in product(range(k), repeat=2):
                    if c == c2:
                        continue
                    for of, og, oe in product(range(k), repeat=3):
                        fc = smap.coalition(f_id, *((c, of) if f.u == x else (of, c)))
                        gc = smap.coalition(g_id, *((c2, og) if g.u == x else (og, c2)))
                        e = inst.edges[e_id]
                        ec = smap.coalition(e_id, *((c2, oe) if e.u == x else (oe, c2)))
                        out.add((frozenset({fc, gc}), ec))
    return out


def _copy_choices(inst: MatchingInstance, smap: StateMap, pre: Iterable[int]):
    """Copy assignments for the edges of ``pre`` whose coalitions can coexist."""
    k = smap.k
    pre = sorted(pre)
    for combo in product(product(range(k), repeat=2), repeat=len(pre)):
        taken = set()
        ok = True
        for f_id, (cu, cv) in zip(pre, combo):
            f = inst.edges[f_id]
            for slot in ((f.u, cu), (f.v, cv)):
                if slot in taken:
                    ok = False
                taken.add(slot)
        if ok:
            yield frozenset(smap.coalition(f_id, cu, cv) for f_id, (cu, cv) in zip(pre, combo))


def _lift_free(inst: MatchingInstance, smap: StateMap, pre: frozenset[int], tgt: int):
    """Copy-level versions of a generation rule; copies are unconstrained."""
    k = smap.k
    targets = [smap.coalition(tgt, cu, cv) for cu, cv in product(range(k), repeat=2)]
    return {(p, t) for p in _copy_choices(inst, smap, pre) for t in targets}


def _lift(inst: MatchingInstance, smap: StateMap, pre: frozenset[int], tgt: int):
    """Copy-level versions of an edge-level domination rule.

    Every precondition edge shares an endpoint with the target; the shared
    endpoint uses the same copy on both sides so the lifted rule stays consistent.
    """
    k = smap.k
    target = inst.edges[tgt]
    pre_edges = sorted(pre)
    out = set()
    for tu, tv in product(range(k), repeat=2):
        copy_at = {target.u: tu, target.v: tv}
        choices = []
        for f_id in pre_edges:
            f = inst.edges[f_id]
            opts = []
            for cu, cv in product(range(k), repeat=2):
                pinned = [(x, c) for x, c in ((f.u, cu), (f.v, cv)) if x in copy_at]
                if all(copy_at[x] == c for x, c in pinned):
                    opts.append((f_id, cu, cv))
            choices.append(opts)
        for combo in product(*choices):
            agents_used = set()
            ok = True
            for f_id, cu, cv in combo:
                f = inst.edges[f_id]
                for x, c in ((f.u, cu), (f.v, cv)):
                    if (x, c) in agents_used:
                        ok = False
                    agents_used.add((x, c))
            if not ok:
                continue  # precondition coalitions could never coexist
            out.add(
                (frozenset(smap.coalition(f_id, cu, cv) for f_id, cu, cv in combo), smap.coalition(tgt, tu, tv))
            )
    return out
