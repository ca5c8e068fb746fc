"""Command-line entry point: ``matchdyn <subcommand> ...``.

Exit codes: 0 success, 1 domain failure (inconsistent spec, budget exhausted,
precondition violated, ...), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bipartite, factory, game, io, matching, movement, oracle, sequencer
from .game import GameSpec
from .matching import MatchingInstance


class Failure(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _ids(text: str | None) -> frozenset[int] | None:
    if text is None:
        return None
    text = text.strip()
    if not text:
        return frozenset()
    return frozenset(int(x) for x in text.split(","))


def _load(path: str):
    try:
        doc = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise Failure(f"{path}: invalid JSON ({exc})") from None
    return io.load_bundle(doc)


def _spec(path: str) -> tuple[GameSpec, frozenset[int] | None]:
    obj, start, _ = _load(path)
    if not isinstance(obj, GameSpec):
        raise Failure(f"{path}: expected a coalition game spec, found a matching instance")
    return obj, start


def _instance(path: str) -> tuple[MatchingInstance, frozenset[int] | None, frozenset[int] | None]:
    obj, start, target = _load(path)
    if not isinstance(obj, MatchingInstance):
        raise Failure(f"{path}: expected a matching instance, found a coalition game spec")
    return obj, start, target


def _pick(cli_value, from_file, default=frozenset()):
    if cli_value is not None:
        return cli_value
    return from_file if from_file is not None else default


def cmd_validate(a) -> int:
    obj, _, _ = _load(a.input)
    if isinstance(obj, MatchingInstance):
        _write(a.output, io.dumps({"valid": True, "kind": "matching-instance", "variant": obj.variant}))
        return 0
    rep = game.check_consistency(obj)
    _write(
        a.output,
        io.dumps(
            {
                "valid": True,
                "kind": "coalition-game",
                "generation_ok": rep.generation_ok,
                "domination_ok": rep.domination_ok,
                "violations": list(rep.violations),
            }
        ),
    )
    return 0


def cmd_simulate(a) -> int:
    spec, start = _spec(a.input)
    s0 = _pick(_ids(a.start), start)
    res = game.simulate(spec, s0, a.policy, a.max_steps, a.seed)
    out = {
        "outcome": res.outcome,
        "cycle": res.cycle,
        "period": res.period,
        "steps": len(res.trace),
        "end": list(game.canonical(res.trace.end)),
    }
    if res.cycle:
        states = res.trace.states()
        out["cycle_states"] = [list(game.canonical(s)) for s in states[len(states) - 1 - res.period : -1]]
    if a.trace:
        _write(a.trace, io.trace_to_jsonl(res.trace))
    _write(a.output, io.dumps(out))
    return 0


def _report_dict(spec: GameSpec, rep: sequencer.ConvergenceReport) -> dict:
    return {
        "stable": game.is_stable(spec, rep.trace.end),
        "end": list(game.canonical(rep.trace.end)),
        "phase1_steps": rep.phase1_steps,
        "phase2_steps": rep.phase2_steps,
        "total_steps": len(rep.trace),
        "n": rep.n,
        "m": rep.m,
        "bound": rep.bound,
        "total_bound": rep.total_bound,
        "phase1": io.trace_to_list(game.ImprovementTrace(rep.trace.start, rep.phase1)),
        "phase2": io.trace_to_list(game.ImprovementTrace(rep.trace.start, rep.phase2)),
    }


def cmd_converge(a) -> int:
    spec, start = _spec(a.input)
    rep = sequencer.converge(spec, _pick(_ids(a.start), start))
    if a.trace:
        _write(a.trace, io.trace_to_jsonl(rep.trace))
    _write(a.output, io.dumps(_report_dict(spec, rep)))
    return 0


def cmd_truncate(a) -> int:
    spec, _ = _spec(a.input)
    trace = io.trace_from_jsonl(_read(a.trace_file))
    out = sequencer.truncate(spec, trace.start, trace)
    _write(a.output, io.trace_to_jsonl(out))
    return 0


def cmd_embed(a) -> int:
    inst, start, target = _instance(a.input)
    spec, smap = matching.embed(inst)
    s = None if start is None else smap.to_structure(start)
    t = None if target is None else smap.to_structure(target)
    doc = io.bundle(spec, s, t)
    doc["consistent"] = game.check_consistency(spec).consistent
    _write(a.output, io.dumps(doc))
    return 0


def cmd_bipartite(a) -> int:
    inst, start, _ = _instance(a.input)
    if a.preferences:
        table_doc = json.loads(_read(a.preferences))
        pairs = [tuple(p) for p in table_doc["pairs"]]
        table = bipartite.PreferenceTable({int(x): g for x, g in table_doc["ranking"].items()})
        inst = bipartite.instance_from_preferences(
            inst.vertices,
            pairs,
            table,
            links=[tuple(l) for l in inst.links],
            alphas=dict(inst.alphas),
            symmetric_alphas=False,
            variant=inst.variant,
            bipartition=inst.bipartition,
        )
    rep = bipartite.two_phase_converge(inst, _pick(_ids(a.start), start))
    end = rep.trace.end
    if a.trace:
        _write(a.trace, io.trace_to_jsonl(rep.trace))
    _write(
        a.output,
        io.dumps(
            {
                "stable": matching.is_stable(inst, end),
                "end": sorted(end),
                "phase1_steps": rep.phase1_steps,
                "phase2_steps": rep.phase2_steps,
                "bound": rep.bound,
                "steps": io.trace_to_list(rep.trace),
            }
        ),
    )
    return 0


def cmd_reach(a) -> int:
    obj, start, target = _load(a.input)
    s0 = _pick(_ids(a.start), start)
    goal = _pick(_ids(a.target), target, None)
    if goal is None:
        raise Failure("no target state: pass --target or include \"target\" in the input")
    res = oracle.reachable(obj, s0, goal, oracle.default_budget(), a.workers)
    out = {
        "reachable": res.reachable,
        "shortest_length": res.shortest_length,
        "witness": None if res.witness is None else io.trace_to_list(res.witness),
    }
    _write(a.output, io.dumps(out))
    return 0


def cmd_stable(a) -> int:
    obj, _, _ = _load(a.input)
    found = oracle.enumerate_stable(obj, a.limit)
    _write(a.output, io.dumps({"stable": sorted(sorted(s) for s in found)}))
    return 0


def cmd_gen(a) -> int:
    if a.kind == "cycle":
        spec, s0 = factory.gen_cycle_example()
        doc = io.bundle(spec, s0)
    elif a.kind == "expchain":
        spec, s0 = factory.gen_exponential_chain(a.k)
        doc = io.bundle(spec, s0)
    elif a.kind == "sat":
        if not a.formula:
            raise UsageError("gen sat needs --formula")
        inst, m0, mstar = factory.gen_sat_reduction(factory.load_formula(a.formula), a.variant)
        doc = io.bundle(inst, m0, mstar)
    else:
        if a.seed is None:
            raise UsageError("gen random needs --seed")
        spec = factory.gen_random_consistent(a.n, a.m, a.density, a.seed)
        doc = io.bundle(spec, frozenset())
    _write(a.output, io.dumps(doc))
    return 0


def cmd_export_dot(a) -> int:
    obj, start, _ = _load(a.input)
    if a.graph == "movement":
        if not isinstance(obj, GameSpec):
            obj, _ = matching.embed(obj)
        g = movement.build(obj)
        if a.format == "json":
            text = io.dumps(
                {
                    "generators": sorted(g.generators),
                    "exchange_edges": [list(e) for e in g.exchange_edges],
                    "hyperedges": [[list(src), t] for t, groups in enumerate(g.hyperedges) for src in groups],
                }
            )
        else:
            text = movement.to_dot(g, figure_style=a.figure_style)
    else:
        tg = oracle.explore(obj, _pick(_ids(a.start), start), oracle.default_budget(), a.workers)
        text = io.dumps(io.transition_graph_to_dict(tg)) if a.format == "json" else io.transition_graph_to_dot(tg)
    _write(a.output, text)
    return 0


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="matchdyn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, input_arg=True):
        sp = sub.add_parser(name, help=help_text)
        if input_arg:
            sp.add_argument("input", help="spec/instance JSON file, or - for stdin")
        sp.add_argument("-o", "--output", default="-", help="output file (default: stdout)")
        sp.set_defaults(func=func)
        return sp

    add("validate", cmd_validate, "parse a spec or instance and report rule consistency")

    sp = add("simulate", cmd_simulate, "run improvement dynamics under a tie-break policy")
    sp.add_argument("--start", help="comma-separated coalition ids")
    sp.add_argument("--policy", choices=game.POLICIES, default="lexicographic-min-id")
    sp.add_argument("--max-steps", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trace", help="write the trace as JSON lines")

    sp = add("converge", cmd_converge, "two-phase path to a stable structure")
    sp.add_argument("--start")
    sp.add_argument("--trace")

    sp = add("truncate", cmd_truncate, "shorten a valid trace without changing its endpoint")
    sp.add_argument("trace_file", help="trace in JSON lines")

    add("embed", cmd_embed, "translate a matching instance into a coalition game")

    sp = add("bipartite", cmd_bipartite, "two-phase path to stability for bipartite instances")
    sp.add_argument("--start", help="comma-separated edge ids")
    sp.add_argument("--preferences", help="JSON {pairs: [[u,v],...], ranking: {vertex: [[edge ids],...]}}")
    sp.add_argument("--trace")

    sp = add("reach", cmd_reach, "exact reachability between two states")
    sp.add_argument("--start")
    sp.add_argument("--target")
    sp.add_argument("--workers", type=int, default=1)

    sp = add("stable", cmd_stable, "enumerate all stable states")
    sp.add_argument("--limit", type=int, default=200_000)

    sp = add("gen", cmd_gen, "generate a constructed or random instance", input_arg=False)
    sp.add_argument("kind", choices=("cycle", "expchain", "sat", "random"))
    sp.add_argument("--k", type=int, default=1, help="gadget count for expchain")
    sp.add_argument("--formula", help="DIMACS CNF file for sat")
    sp.add_argument("--variant", choices=factory.SAT_VARIANTS, default="social")
    sp.add_argument("--n", type=int, default=6)
    sp.add_argument("--m", type=int, default=8)
    sp.add_argument("--density", type=float, default=0.3)
    sp.add_argument("--seed", type=int)

    sp = add("export-dot", cmd_export_dot, "movement graph or transition graph as DOT or JSON")
    sp.add_argument("--graph", choices=("movement", "transitions"), default="movement")
    sp.add_argument("--format", choices=("json", "dot"), default="dot")
    sp.add_argument("--start")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--figure-style", action="store_true", help="dashed generation, bold domination")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"matchdyn: error: {exc}", file=sys.stderr)
        return 2
    except (Failure, ValueError, RuntimeError, OSError) as exc:
        print(f"matchdyn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
