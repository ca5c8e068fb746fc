from __future__ import annotations

import pytest

from matchdyn import factory, game, matching, movement
from matchdyn.factory import chain_coalition as C
from matchdyn.movement import CreateAt, IllegalAction, InconsistentSpec, MoveAlong


def marking_mismatches(spec) -> int:
    """Compare marking actions with blocking coalitions on every feasible structure."""
    g = movement.build(spec)
    bad = 0
    for s in game.feasible_structures(spec):
        acts = movement.legal_actions(g, s)
        targets = {a.vertex if isinstance(a, CreateAt) else a.target for a in acts}
        blocking = game.blocking_coalitions(spec, s)
        if targets != blocking:
            bad += 1
            continue
        for a in acts:
            t = a.vertex if isinstance(a, CreateAt) else a.target
            marks, _ = movement.step(g, s, a)
            if marks != game.resolve(spec, s, t)[0]:
                bad += 1
    return bad


def path_graph_local():
    # path 0-1-2-3 of potential edges; links {0,2} and {1,3}
    inst = matching.make_instance(
        4, [(0, 1, 1), (1, 2, 2), (2, 3, 3)], links=[(0, 2), (1, 3)], variant="local", lookahead=2
    )
    return matching.embed(inst)[0]


def test_social_embedding_has_no_exchange_edges():
    inst = matching.make_instance(4, [(0, 1, 1), (1, 2, 2), (2, 3, 3)], links=[(0, 1), (2, 3)], variant="social")
    spec, _ = matching.embed(inst)
    g = movement.build(spec)
    assert g.exchange_edges == ()
    assert g.generators == {0, 2}


def test_local_path_graph_exchange_edges():
    g = movement.build(path_graph_local())
    # {0,1} -> {1,2}? needs 0 linked to 2: yes, weight 1 < 2.
    # {2,3} -> {1,2}? needs 3 linked to 1: yes, but weight 3 > 2, so no exchange edge.
    # {1,2} -> {2,3}? needs 1 linked to 3: yes, weight 2 < 3.
    assert g.exchange_edges == ((0, 1), (1, 2))
    assert g.generators == frozenset()


def test_chain_rejected():
    spec, _ = factory.gen_exponential_chain(1)
    with pytest.raises(InconsistentSpec):
        movement.build(spec)


def test_weight_domination_required():
    spec = game.make_spec(2, [((0,), 1)], self_generating=[0], include_weight_domination=False)
    with pytest.raises(InconsistentSpec):
        movement.build(spec)


def test_create_on_empty_marking():
    spec = factory.gen_random_consistent(5, 6, 0.3, 1)
    g = movement.build(spec)
    v = min(g.generators)
    assert movement.step(g, frozenset(), CreateAt(v)) == ({v}, frozenset())


def test_mirror_of_gadget_step():
    # gadget 1 made consistent by dropping its two disjoint rules
    full, _ = factory.gen_exponential_chain(1)
    spec = game.GameSpec(
        full.agents,
        full.coalitions,
        full.self_generating,
        tuple(r for r in full.generation_rules if r.target != C(1, 1)),
        (),
    )
    g = movement.build(spec)
    marks, removed = movement.step(g, {C(2, 1), C(4, 1)}, MoveAlong(C(2, 1), C(3, 1)))
    assert marks == {C(3, 1)}
    assert removed == {C(2, 1), C(4, 1)}


def test_illegal_actions_name_reason():
    spec = game.make_spec(3, [((0, 1), 1), ((1, 2), 2)], self_generating=[0], generation_rules=[({0}, 1)])
    g = movement.build(spec)
    with pytest.raises(IllegalAction, match="not a generator"):
        movement.step(g, frozenset(), CreateAt(1))
    with pytest.raises(IllegalAction, match="unmarked"):
        movement.step(g, frozenset(), MoveAlong(0, 1))
    with pytest.raises(IllegalAction, match="already marked"):
        movement.step(g, {0}, CreateAt(0))
    with pytest.raises(IllegalAction, match="no exchange edge"):
        movement.step(g, {1}, MoveAlong(1, 0))
    spec2 = game.make_spec(3, [((0, 1), 2), ((1, 2), 1)], self_generating=[0, 1])
    g2 = movement.build(spec2)
    with pytest.raises(IllegalAction, match="dominated"):
        movement.step(g2, {0}, CreateAt(1))


def test_undominated_without_hyperedges():
    spec = game.make_spec(2, [((0,), 1)], self_generating=[0])
    g = movement.build(spec)
    assert movement.undominated(g, frozenset(), 0)


def test_undominated_with_full_hyperedge():
    spec = game.make_spec(3, [((0, 1), 1), ((1, 2), 5)], self_generating=[0, 1], domination_rules=[({0}, 1)])
    g = movement.build(spec)
    assert not movement.undominated(g, {0}, 1)


def test_undominated_agrees_with_game():
    for seed in range(100):
        spec = factory.gen_random_consistent(5, 6, 0.5, seed)
        g = movement.build(spec)
        for s in game.feasible_structures(spec):
            for v in range(spec.m):
                assert movement.undominated(g, s, v) == (not game.is_dominated(spec, s, v))


def test_exchange_edges_increase_weight_and_form_dag():
    for seed in range(50):
        spec = factory.gen_random_consistent(6, 10, 0.6, seed)
        g = movement.build(spec)
        for s, t in g.exchange_edges:
            assert spec.weight(s) < spec.weight(t)
        order = g.topological_order()
        pos = {v: i for i, v in enumerate(order)}
        assert all(pos[s] < pos[t] for s, t in g.exchange_edges)


def _enumerate_paths(g, m):
    """Every walk from an unmarked undominated generator along admissible exchange edges."""
    out = {}
    for gen in sorted(g.generators):
        if gen in m or not movement.undominated(g, m, gen):
            continue
        reach = {gen}
        stack = [(gen, (gen,))]
        while stack:
            v, path = stack.pop()
            for t in g.successors[v]:
                if t in path or t in m or not movement.undominated(g, m | {v}, t):
                    continue
                reach.add(t)
                stack.append((t, path + (t,)))
        out[gen] = reach
    return out


def test_reachable_positions_match_path_enumeration():
    for seed in range(80):
        spec = factory.gen_random_consistent(5, 8, 0.7, seed)
        g = movement.build(spec)
        for s in game.feasible_structures(spec)[:30]:
            got = movement.reachable_positions(g, s)
            assert {k: set(v) for k, v in got.items()} == _enumerate_paths(g, s)
            for gen, paths in got.items():
                for v, path in paths.items():
                    assert path[0] == gen and path[-1] == v


def test_reachable_positions_empty_graph():
    spec = game.make_spec(0, [])
    assert movement.reachable_positions(movement.build(spec), frozenset()) == {}


def test_reachable_positions_social_is_generators_only():
    inst = matching.make_instance(4, [(0, 1, 1), (2, 3, 2)], links=[(0, 1), (2, 3)], variant="social")
    g = movement.build(matching.embed(inst)[0])
    assert movement.reachable_positions(g, frozenset()) == {0: {0: (0,)}, 1: {1: (1,)}}


def test_marking_equivalence_small_family():
    total = 0
    for seed in range(100):
        spec = factory.gen_random_consistent(5, 6, 0.5, seed)
        total += marking_mismatches(spec)
    assert total == 0


def test_marks_decode_to_feasible_structures():
    spec = factory.gen_random_consistent(6, 9, 0.6, 5)
    g = movement.build(spec)
    m = frozenset()
    for _ in range(50):
        acts = movement.legal_actions(g, m)
        if not acts:
            break
        m, _ = movement.step(g, m, acts[-1])
        assert spec.is_feasible(m)


def test_dot_export():
    spec = path_graph_local()
    dot = movement.to_dot(movement.build(spec))
    assert dot.startswith("digraph movement {")
    assert 'v0 [label="C0:1"' in dot
    assert "v0 -> v1 [style=solid]" in dot
    styled = movement.to_dot(movement.build(spec), figure_style=True)
    assert "v0 -> v1 [style=dashed]" in styled


def test_dot_groups_multi_source_hyperedges():
    spec = game.make_spec(
        4, [((0, 1), 1), ((2, 3), 1), ((1, 2), 1)], self_generating=[0, 1, 2], domination_rules=[({0, 1}, 2)]
    )
    dot = movement.to_dot(movement.build(spec), weight_domination=False)
    assert "h0 [shape=point" in dot and "h0 -> v2" in dot
