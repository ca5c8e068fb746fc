"""Shared checkers for the test modules."""

from __future__ import annotations

from matchdyn import game, matching


def embedding_mismatches(inst) -> int:
    """States where the embedded game disagrees with the matching dynamics.

    Compares blocking coalitions against blocking pairs, and resolving the
    canonical coalition against resolving the pair, over every feasible matching.
    """
    spec, smap = matching.embed(inst)
    bad = 0
    for m in matching.feasible_matchings(inst):
        s = smap.to_structure(m)
        pairs = matching.blocking_pairs(inst, m)
        coalitions = game.blocking_coalitions(spec, s)
        if {smap.edge_of(c) for c in coalitions} != set(pairs):
            bad += 1
            continue
        for e in pairs:
            c = smap.coalition_for(m, e)
            if c not in coalitions:
                bad += 1
                continue
            s2, _ = game.resolve(spec, s, c)
            if smap.to_matching(s2) != matching.resolve_pair(inst, m, e):
                bad += 1
    return bad


def scan_blocking_pairs(inst, m) -> set[int]:
    """Direct blocking-pair scanner for one partner per agent, written from the definitions.

    Recomputes partners, utilities and access from scratch for every edge.
    """
    m = frozenset(m)
    partner_edge = {}
    for i in m:
        e = inst.edges[i]
        partner_edge[e.u] = i
        partner_edge[e.v] = i

    def value(state, x):
        own = sum((inst.edges[i].benefit(x) for i in state if x in inst.edges[i].ends), 0)
        if inst.variant != "friendship":
            return own
        for (a, b), al in inst.alphas.items():
            if a == x:
                own += al * sum((inst.edges[i].benefit(b) for i in state if b in inst.edges[i].ends), 0)
        return own

    def linked(a, b):
        return frozenset((a, b)) in inst.links

    out = set()
    for i, e in enumerate(inst.edges):
        if i in m:
            continue
        after = (m - {partner_edge.get(e.u), partner_edge.get(e.v)}) | {i}
        if not all(value(after, x) > value(m, x) for x in e.ends):
            continue
        if inst.variant == "social" and not linked(e.u, e.v):
            continue
        if inst.variant == "considerate":
            bad = False
            for x, y in ((e.u, e.v), (e.v, e.u)):
                f = partner_edge.get(x)
                if f is not None:
                    z = inst.edges[f].other(x)
                    bad |= linked(x, z) or linked(z, y)
            if bad:
                continue
        out.add(i)
    return out
