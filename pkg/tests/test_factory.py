from __future__ import annotations

import hashlib

import pytest

from matchdyn import factory, game, io, matching
from matchdyn.factory import FormulaError, chain_coalition as C

SAT = factory.Formula(2, ((1, 2, 2), (-1, -2, -2)))


def _digest(doc) -> str:
    return hashlib.sha256(io.dumps(doc).encode()).hexdigest()


def test_cycle_example_shape():
    spec, s0 = factory.gen_cycle_example()
    assert spec.agents == 6 and spec.m == 3 and s0 == {0}
    assert all(c.weight == 1 for c in spec.coalitions)


def test_chain_sizes_and_linking():
    for k in (1, 2, 3):
        spec, s0 = factory.gen_exponential_chain(k)
        assert spec.agents == 8 * k + 1 and spec.m == 6 * k
        assert s0 == {C(4, k)}
    spec, _ = factory.gen_exponential_chain(2)
    shared = set(spec.coalitions[C(6, 1)].members) & set(spec.coalitions[C(1, 2)].members)
    assert shared == {8}
    with pytest.raises(ValueError):
        factory.gen_exponential_chain(0)


def test_random_consistent_is_consistent_and_seeded():
    for seed in range(50):
        spec = factory.gen_random_consistent(6, 9, 0.5, seed)
        assert game.check_consistency(spec).consistent
        assert spec.self_generating
    assert factory.gen_random_consistent(6, 9, 0.5, 3) == factory.gen_random_consistent(6, 9, 0.5, 3)
    assert factory.gen_random_consistent(6, 9, 0.5, 3) != factory.gen_random_consistent(6, 9, 0.5, 4)


def test_random_generators_golden():
    spec = factory.gen_random_consistent(6, 8, 0.3, 42)
    assert _digest(io.spec_to_dict(spec)) == "a102c3a1e001b1dfcb9a3389695a81d777a0c5d793f30a7636065bd90718297f"
    inst = factory.gen_random_matching(6, "friendship", 7)
    assert _digest(io.instance_to_dict(inst)) == "c53cb5831678a033d91d5210970e18ea52ab2d2d24f679e71277c906c14628db"


def test_random_consistent_too_many_coalitions():
    with pytest.raises(ValueError):
        factory.gen_random_consistent(2, 10, 0.5, 0)


def test_dimacs_parsing():
    f = factory.parse_dimacs("c demo\np cnf 3 2\n1 -2 3 0\n-1 2 -3 0\n")
    assert f == factory.Formula(3, ((1, -2, 3), (-1, 2, -3)))
    assert factory.parse_dimacs("1 2 3 0") == factory.Formula(3, ((1, 2, 3),))


@pytest.mark.parametrize(
    "text",
    ["p cnf 2 1\n1 2 0\n", "p cnf 2 1\n1 2 5 0\n", "p dnf 3 1\n1 2 3 0\n", "p cnf 3 1\n1 x 3 0\n", "p cnf 3 0\n"],
)
def test_dimacs_errors(text):
    with pytest.raises(FormulaError):
        factory.parse_dimacs(text)


def test_satisfiability_oracle():
    assert factory.is_satisfiable(SAT)
    assert not factory.is_satisfiable(factory.Formula(1, ((1, 1, 1), (-1, -1, -1))))


def test_clause_edge_benefits():
    # single clause (x or not y or z): positions 1..3 give benefits 2, 3, 4
    f = factory.Formula(3, ((1, -2, 3),))
    _, _, e3 = factory.central_edges(f)
    lay = factory.SatLayout(3, 1)
    assert e3 == [(lay.x(1), lay.w(1), 2), (lay.x(1), lay.w(-2), 3), (lay.x(1), lay.w(3), 4)]


def test_central_benefits_order():
    e1, e2, _ = factory.central_edges(SAT)
    l, k = 2, 2
    assert [b for *_, b in e2] == [4 * l + 1, 4 * l + k + 1, 4 * l + 2, 4 * l + k + 2]
    assert min(b for *_, b in e1) > max(b for *_, b in e2)


def test_duplicate_literal_keeps_first_position():
    _, _, e3 = factory.central_edges(SAT)
    assert len(e3) == 4
    assert [b for *_, b in e3] == [1 * 2 + 1, 2 * 2 + 1, 1 * 2 + 2, 2 * 2 + 2]


@pytest.mark.parametrize("variant", factory.SAT_VARIANTS)
def test_sat_instances_are_well_formed(variant):
    inst, m0, mstar = factory.gen_sat_reduction(SAT, variant)
    assert matching.is_feasible(inst, m0) and matching.is_feasible(inst, mstar)
    assert inst.bipartition is not None
    for e in inst.edges:
        assert (e.u in inst.bipartition[0]) != (e.v in inst.bipartition[0])


def test_strict_gadget_benefits():
    inst, _, _ = factory.gen_sat_reduction(SAT, "strict")
    lay = factory.SatLayout(2, 2)
    x = lay.x(1)
    y, yp, xp = (lay.gadget(1, s, 3) for s in range(3))
    got = {(e.u, e.v): (e.bu, e.bv) for e in inst.edges}
    assert got[(x, y)] == (1, 1)
    assert got[(x, yp)] == (0.5, 2)
    assert got[(xp, y)] == (1, 2)
    assert got[(xp, yp)] == (2, 1)


def test_friendship_gadget_alphas():
    inst, _, _ = factory.gen_sat_reduction(SAT, "friendship")
    lay = factory.SatLayout(2, 2)
    for j in (1, 2):
        x, y = lay.x(j), lay.gadget(j, 0, 2)
        assert inst.alpha(x, y) == inst.alpha(y, x) == factory.Fraction(1, 2 * j - 1)


def test_unknown_variant():
    with pytest.raises(ValueError):
        factory.gen_sat_reduction(SAT, "nope")


def test_random_bipartite_respects_preconditions():
    from matchdyn import bipartite

    for variant in ("plain", "social", "considerate", "friendship"):
        for seed in range(20):
            inst = factory.gen_random_bipartite(4, 4, variant, seed)
            bipartite.sides(inst)
