"""JSON / JSON-lines / DOT (de)serialization."""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Iterable

from .game import SELF, Coalition, GameSpec, ImprovementTrace, Rule, SpecError, Step, canonical
from .matching import Edge, MatchingInstance


def frac(x: Any) -> Fraction:
    try:
        return Fraction(str(x))
    except (ValueError, ZeroDivisionError):
        raise SpecError(f"not a rational number: {x!r}") from None


def fstr(x: Fraction) -> str:
    return str(x)


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


# --- game specs -----------------------------------------------------------------


def spec_to_dict(spec: GameSpec) -> dict:
    return {
        "agents": spec.agents,
        "coalitions": [{"id": c.id, "members": list(c.members), "weight": fstr(c.weight)} for c in spec.coalitions],
        "self_generating": sorted(spec.self_generating),
        "generation_rules": [{"pre": sorted(r.pre), "target": r.target} for r in spec.generation_rules],
        "domination_rules": [{"pre": sorted(r.pre), "target": r.target} for r in spec.domination_rules],
        "include_weight_domination": spec.include_weight_domination,
    }


def spec_from_dict(d: dict) -> GameSpec:
    try:
        coalitions = sorted(
            (Coalition(int(c["id"]), tuple(sorted(int(a) for a in c["members"])), frac(c["weight"])) for c in d["coalitions"]),
            key=lambda c: c.id,
        )
        return GameSpec(
            agents=int(d["agents"]),
            coalitions=tuple(coalitions),
            self_generating=frozenset(int(x) for x in d.get("self_generating", ())),
            generation_rules=tuple(
                Rule(frozenset(int(x) for x in r["pre"]), int(r["target"])) for r in d.get("generation_rules", ())
            ),
            domination_rules=tuple(
                Rule(frozenset(int(x) for x in r["pre"]), int(r["target"])) for r in d.get("domination_rules", ())
            ),
            include_weight_domination=bool(d.get("include_weight_domination", True)),
        )
    except (KeyError, TypeError) as exc:
        raise SpecError(f"malformed spec document: {exc!r}") from None


# --- traces ---------------------------------------------------------------------


def trace_to_jsonl(trace: ImprovementTrace) -> str:
    lines = [json.dumps({"start": list(canonical(trace.start))})]
    for st in trace.steps:
        lines.append(json.dumps({"inserted": st.inserted, "deleted": list(canonical(st.deleted)), "rule": st.rule}))
    return "\n".join(lines) + "\n"


def trace_from_jsonl(text: str) -> ImprovementTrace:
    rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not rows or "start" not in rows[0]:
        raise SpecError("trace must begin with a {\"start\": [...]} line")
    steps = []
    for r in rows[1:]:
        rule = r.get("rule")
        if rule is not None and rule != SELF:
            rule = int(rule)
        steps.append(Step(int(r["inserted"]), frozenset(int(x) for x in r["deleted"]), rule))
    return ImprovementTrace(frozenset(int(x) for x in rows[0]["start"]), tuple(steps))


def trace_to_list(trace: ImprovementTrace) -> list[dict]:
    return [
        {"inserted": st.inserted, "deleted": list(canonical(st.deleted)), "rule": st.rule} for st in trace.steps
    ]


# --- matching instances -----------------------------------------------------------


def instance_to_dict(inst: MatchingInstance) -> dict:
    edges = []
    for e in inst.edges:
        if e.correlated:
            edges.append({"u": e.u, "v": e.v, "b": fstr(e.bu)})
        else:
            edges.append({"u": e.u, "v": e.v, "bu": fstr(e.bu), "bv": fstr(e.bv)})
    d = {
        "vertices": inst.vertices,
        "edges": edges,
        "links": sorted(sorted(l) for l in inst.links),
        "alphas": [[a, b, fstr(v)] for (a, b), v in inst.alphas.items()],
        "variant": inst.variant,
        "k": inst.k,
        "lookahead": inst.lookahead,
        "bipartition": None if inst.bipartition is None else [sorted(inst.bipartition[0]), sorted(inst.bipartition[1])],
        "considerate_symmetric": inst.considerate_symmetric,
    }
    return d


def instance_from_dict(d: dict) -> MatchingInstance:
    try:
        edges = []
        for e in d["edges"]:
            if "b" in e:
                bu = bv = frac(e["b"])
            else:
                bu, bv = frac(e["bu"]), frac(e["bv"])
            edges.append(Edge(int(e["u"]), int(e["v"]), bu, bv))
        bip = d.get("bipartition")
        return MatchingInstance(
            vertices=int(d["vertices"]),
            edges=tuple(edges),
            links=frozenset(frozenset((int(a), int(b))) for a, b in d.get("links", ())),
            alphas={(int(a), int(b)): frac(v) for a, b, v in d.get("alphas", ())},
            variant=d.get("variant", "plain"),
            k=int(d.get("k", 1)),
            lookahead=int(d.get("lookahead", 2)),
            bipartition=None if bip is None else (frozenset(bip[0]), frozenset(bip[1])),
            considerate_symmetric=bool(d.get("considerate_symmetric", True)),
        )
    except (KeyError, TypeError) as exc:
        raise SpecError(f"malformed instance document: {exc!r}") from None


# --- bundles: a spec or instance with optional start/target states -------------


def bundle(obj: GameSpec | MatchingInstance, start: Iterable[int] | None = None, target: Iterable[int] | None = None) -> dict:
    d: dict = {"spec": spec_to_dict(obj)} if isinstance(obj, GameSpec) else {"instance": instance_to_dict(obj)}
    if start is not None:
        d["start"] = list(canonical(start))
    if target is not None:
        d["target"] = list(canonical(target))
    return d


def load_bundle(d: dict) -> tuple[GameSpec | MatchingInstance, frozenset[int] | None, frozenset[int] | None]:
    """Accept a bundle or a bare spec/instance document."""
    if "spec" in d:
        obj: GameSpec | MatchingInstance = spec_from_dict(d["spec"])
    elif "instance" in d:
        obj = instance_from_dict(d["instance"])
    elif "coalitions" in d:
        obj = spec_from_dict(d)
    elif "edges" in d:
        obj = instance_from_dict(d)
    else:
        raise SpecError("document is neither a game spec nor a matching instance")
    start = frozenset(d["start"]) if "start" in d else None
    target = frozenset(d["target"]) if "target" in d else None
    return obj, start, target


# --- transition graphs -------------------------------------------------------------


def transition_graph_to_dict(g) -> dict:
    return {
        "states": [list(canonical(s)) for s in g.states],
        "edges": [[a, lab, b] for a, lab, b in g.edges],
        "overflow": g.overflow,
        "sinks": [g.index[s] for s in g.sinks()],
    }


def transition_graph_to_dot(g) -> str:
    lines = ["digraph transitions {"]
    sinks = {g.index[s] for s in g.sinks()}
    for i, s in enumerate(g.states):
        label = "{" + ",".join(str(c) for c in canonical(s)) + "}"
        shape = "doublecircle" if i in sinks else "ellipse"
        lines.append(f'  s{i} [label="{label}", shape={shape}];')
    for a, lab, b in g.edges:
        lines.append(f'  s{a} -> s{b} [label="{lab}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
