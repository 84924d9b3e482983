import itertools
from fractions import Fraction

import pytest

from conftest import load_table
from oracles import permanent_by_expansion
from onlinefair.axioms import is_pareto_efficient, pareto_dominates
from onlinefair.mechanisms import MechanismKind, allocation_probability, ante_probabilities
from onlinefair.reductions import (
    BipartiteGraph,
    Literal,
    ReductionError,
    SatInstance,
    count_perfect_matchings,
    matching_probability_closed_form,
    matching_to_instance,
    reference_graph_example,
    reference_sat_example,
    sat_to_instance,
    satisfying_dominator,
    verify_matching_correspondence,
)


def biadjacency(g):
    return [[int((a, b) in g.edges) for b in range(g.v)] for a in range(g.u)]


def three_regular_graphs(n):
    """All 3-regular bipartite graphs on n + n vertices for n = 3, 4 (complements of permutations for 4)."""
    if n == 3:
        yield BipartiteGraph(3, 3, frozenset(itertools.product(range(3), range(3))))
        return
    assert n == 4
    for perm in itertools.permutations(range(4)):
        yield BipartiteGraph(4, 4, frozenset((a, b) for a in range(4) for b in range(4) if perm[a] != b))


def _name(label):
    # table labels are LaTeX: a_{\neg p_1}, i_{p_1c_1}, e^1_1, u^1_1, [s]
    label = label.strip("[]").replace("\\neg ", "~").replace("{", "").replace("}", "")
    return label.replace("p_", "p").replace("c_", "c")


class TestSatReduction:
    def test_reproduces_printed_table(self, sat_table):
        columns, rows, cells, marks = sat_table
        inst, pi = sat_to_instance(reference_sat_example())
        assert [[int(u) for u in r] for r in inst.utilities] == cells
        assert [[pi.assignment[j] == i for j in range(inst.m)] for i in range(inst.n)] == marks
        assert list(inst.agents) == [_name(r) for r in rows]
        assert list(inst.items) == [_name(c) for c in columns]

    def test_marked_cells_are_liked(self):
        inst, pi = sat_to_instance(reference_sat_example())
        assert all(inst.utilities[a][j] > 0 for j, a in enumerate(pi.assignment))
        for kind in MechanismKind:
            assert allocation_probability(kind, inst, pi) > 0

    def test_every_agent_and_item_used(self):
        inst, _ = sat_to_instance(reference_sat_example())
        assert all(inst.likers)
        assert all(any(u > 0 for u in row) for row in inst.utilities)

    def test_satisfiable_example_is_dominated(self):
        sat = reference_sat_example()
        inst, pi = sat_to_instance(sat)
        truth = {"p1": True, "p2": True, "p3": True}
        assert sat.satisfied_by(truth)
        dominator = satisfying_dominator(sat, inst, truth)
        assert pareto_dominates(inst, dominator, pi)
        report = is_pareto_efficient(inst, pi)
        assert report.verdict == "dominated"
        assert pareto_dominates(inst, report.witness, pi)

    def test_every_satisfying_assignment_dominates(self):
        sat = reference_sat_example()
        inst, pi = sat_to_instance(sat)
        models = list(sat.satisfying_assignments())
        assert models
        for truth in models:
            assert pareto_dominates(inst, satisfying_dominator(sat, inst, truth), pi)

    @pytest.mark.parametrize("clauses", [
        [["p"], ["p"], ["~p"]],
        [["p", "~p"], ["p"]],
        [["p1"], ["~p1"], ["p2"], ["p1", "p2", "~p2"]],
    ])
    def test_empty_interpretation_dominated_regardless_of_satisfiability(self, clauses):
        # a_p takes i_p and keeps one occurrence item (3 > 2); the freed occurrence
        # item starts a clause -> sat -> un chain that improves a_un,p
        props = sorted({l.lstrip("~") for c in clauses for l in c})
        sat = SatInstance.from_json({"propositions": props, "clauses": clauses})
        inst, pi = sat_to_instance(sat)
        report = is_pareto_efficient(inst, pi)
        assert report.verdict == "dominated"
        assert pareto_dominates(inst, report.witness, pi)

    @pytest.mark.parametrize("bad", [
        {"propositions": ["p"], "clauses": [["p"], ["~p"]]},
        {"propositions": ["p"], "clauses": [["p", "p"], ["~p"]]},
        {"propositions": ["p"], "clauses": [["p", "q"], ["p"], ["~p"]]},
        {"propositions": ["p"], "clauses": [["p", "p", "~p", "p"]]},
        {"clauses": []},
    ])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ReductionError):
            SatInstance.from_json(bad)

    def test_literal_parsing(self):
        assert Literal.parse("¬p1") == Literal("p1", False)
        assert Literal.parse("-p1") == Literal("p1", False)
        assert str(Literal("q", False)) == "~q"

    def test_deterministic(self):
        assert sat_to_instance(reference_sat_example()) == sat_to_instance(reference_sat_example())


class TestMatchingReduction:
    def test_reproduces_printed_table(self, matching_table):
        columns, rows, cells, _ = matching_table
        inst = matching_to_instance(reference_graph_example())
        assert [[int(u) for u in r] for r in inst.utilities] == cells
        assert (inst.n, inst.m) == (13, 14)
        assert inst.agents[-1] == "s" and inst.items[-2:] == ("i1", "i2")

    def test_s_likes_only_final_items(self):
        inst = matching_to_instance(reference_graph_example())
        row = inst.utilities[inst.agent_index("s")]
        assert [j for j, u in enumerate(row) if u] == [12, 13]

    def test_rejects_non_regular(self):
        g = BipartiteGraph(2, 2, frozenset({(0, 0), (1, 1)}))
        with pytest.raises(ReductionError, match="3-regular"):
            matching_to_instance(g)
        with pytest.raises(ReductionError):
            matching_to_instance(BipartiteGraph(3, 4, frozenset()))

    def test_reference_probability(self):
        g = reference_graph_example()
        inst = matching_to_instance(g)
        ante = ante_probabilities(MechanismKind.BALANCED_LIKE, inst)
        assert ante[inst.agent_index("s"), inst.item_index("i2")] == Fraction(9, 13 * 3**4) == Fraction(1, 117)

    def test_correspondence_report(self):
        report = verify_matching_correspondence(reference_graph_example())
        assert report.perfect_matchings == 9
        assert report.one_each_allocations == 144
        assert report.probability_enumerated == Fraction(1, 117)
        assert report.holds

    @pytest.mark.parametrize("g", list(three_regular_graphs(3)) + list(three_regular_graphs(4)))
    def test_identity_for_all_small_regular_graphs(self, g):
        inst = matching_to_instance(g)
        ante = ante_probabilities(MechanismKind.BALANCED_LIKE, inst)
        p = ante[inst.agent_index("s"), inst.item_index("i2")]
        assert p == matching_probability_closed_form(g, permanent_by_expansion(biadjacency(g)))

    @pytest.mark.parametrize("g", [next(three_regular_graphs(3)), list(three_regular_graphs(4))[7]])
    def test_correspondence_by_enumeration(self, g):
        assert verify_matching_correspondence(g).holds


class TestPermanent:
    def test_complete(self):
        assert count_perfect_matchings(BipartiteGraph(3, 3, frozenset(itertools.product(range(3), range(3))))) == 6

    def test_isolated_vertex(self):
        g = BipartiteGraph(3, 3, frozenset({(0, 0), (0, 1), (1, 0), (1, 1), (0, 2)}))
        assert count_perfect_matchings(g) == 0
        assert matching_probability_closed_form(g, 0) == 0

    def test_reference_graph(self):
        g = reference_graph_example()
        # independent Laplace expansion fixes the value 9
        assert permanent_by_expansion(biadjacency(g)) == 9
        assert count_perfect_matchings(g) == 9

    def test_size_guard(self):
        with pytest.raises(ReductionError, match="too large"):
            count_perfect_matchings(BipartiteGraph(11, 11, frozenset()))
