"""Instance generators for the two hardness constructions, plus brute-force oracles.

``sat_to_instance`` builds the Pareto-efficiency instance from a restricted
3-SAT formula (every proposition twice positive, once negative) together with
the allocation for the empty interpretation. ``matching_to_instance`` builds
the Balanced Like instance whose probability for agent ``s`` and item ``i2``
encodes the number of perfect matchings of a 3-regular bipartite graph.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .core import Allocation, FoodbankInstance, InstanceError
from .mechanisms import DEFAULT_BUDGET, MechanismKind, ante_probabilities, enumerate_distribution

MAX_PERMANENT_SIDE = 10
NEGATION_PREFIXES = ("~", "-", "¬", "!")


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class Literal:
    prop: str
    positive: bool = True

    def __str__(self):
        return self.prop if self.positive else f"~{self.prop}"

    @classmethod
    def parse(cls, text: str) -> "Literal":
        text = text.strip()
        for prefix in NEGATION_PREFIXES:
            if text.startswith(prefix):
                return cls(text[len(prefix):].strip(), False)
        return cls(text, True)


@dataclass(frozen=True)
class SatInstance:
    propositions: tuple[str, ...]
    clauses: tuple[tuple[Literal, ...], ...]

    def __post_init__(self):
        props = set(self.propositions)
        if len(props) != len(self.propositions):
            raise ReductionError("duplicate proposition names")
        pos, neg = Counter(), Counter()
        for k, clause in enumerate(self.clauses):
            if not 1 <= len(clause) <= 3:
                raise ReductionError(f"clause {k} has {len(clause)} literals; expected 1 to 3")
            if len(set(clause)) != len(clause):
                raise ReductionError(f"clause {k} repeats a literal")
            for lit in clause:
                if lit.prop not in props:
                    raise ReductionError(f"clause {k} mentions unknown proposition {lit.prop!r}")
                (pos if lit.positive else neg)[lit.prop] += 1
        for p in self.propositions:
            if pos[p] != 2 or neg[p] != 1:
                raise ReductionError(
                    f"proposition {p!r} occurs {pos[p]} times positively and {neg[p]} times "
                    "negatively; expected 2 and 1"
                )

    def satisfied_by(self, assignment: dict[str, bool]) -> bool:
        return all(any(assignment[l.prop] == l.positive for l in clause) for clause in self.clauses)

    def satisfying_assignments(self):
        """Brute force over all 2^|P| truth assignments."""
        for values in itertools.product((True, False), repeat=len(self.propositions)):
            assignment = dict(zip(self.propositions, values))
            if self.satisfied_by(assignment):
                yield assignment

    @classmethod
    def from_json(cls, data) -> "SatInstance":
        try:
            props = tuple(str(p) for p in data["propositions"])
            clauses = tuple(tuple(Literal.parse(str(l)) for l in c) for c in data["clauses"])
        except (KeyError, TypeError) as exc:
            raise ReductionError(f"malformed SAT input: {exc}") from exc
        return cls(props, clauses)

    def to_json(self) -> dict:
        return {"propositions": list(self.propositions),
                "clauses": [[str(l) for l in c] for c in self.clauses]}


@dataclass(frozen=True)
class BipartiteGraph:
    """Left vertices ``0..u-1``, right vertices ``0..v-1``."""

    u: int
    v: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset((int(a), int(b)) for a, b in self.edges))
        for a, b in self.edges:
            if not (0 <= a < self.u and 0 <= b < self.v):
                raise ReductionError(f"edge ({a},{b}) out of range")

    def neighbours(self, left: int) -> list[int]:
        return sorted(b for a, b in self.edges if a == left)

    def degree_right(self, right: int) -> int:
        return sum(1 for _, b in self.edges if b == right)

    def is_regular(self, d: int) -> bool:
        return (all(len(self.neighbours(a)) == d for a in range(self.u))
                and all(self.degree_right(b) == d for b in range(self.v)))

    @classmethod
    def from_json(cls, data) -> "BipartiteGraph":
        try:
            return cls(int(data["u"]), int(data["v"]), frozenset(tuple(e) for e in data["edges"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ReductionError(f"malformed graph input: {exc}") from exc

    def to_json(self) -> dict:
        return {"u": self.u, "v": self.v, "edges": [list(e) for e in sorted(self.edges)]}


def reference_sat_example() -> SatInstance:
    return SatInstance.from_json({
        "propositions": ["p1", "p2", "p3"],
        "clauses": [["p1", "p2", "~p3"], ["~p1", "p2", "p3"], ["p1", "~p2", "p3"]],
    })


def reference_graph_example() -> BipartiteGraph:
    edges = [(1, 1), (1, 2), (1, 4), (2, 2), (2, 3), (2, 4), (3, 1), (3, 3), (3, 4), (4, 1), (4, 2), (4, 3)]
    return BipartiteGraph(4, 4, frozenset((a - 1, b - 1) for a, b in edges))


def _lit_name(lit: Literal) -> str:
    return lit.prop if lit.positive else f"~{lit.prop}"


def sat_to_instance(sat: SatInstance) -> tuple[FoodbankInstance, Allocation]:
    """Pareto-efficiency instance and the allocation for the empty interpretation.

    Agents: ``a_p, a_~p`` per proposition, ``a_c`` per clause, ``a_un,p`` per
    proposition, ``a_sat,c`` per clause. Items: ``i_p``, ``i_c``, one sat item per
    clause, then one item per literal occurrence, clause by clause.
    """
    P, C = sat.propositions, sat.clauses
    if len(C) < len(P):
        raise ReductionError("need at least as many clauses as propositions")
    clause_names = [f"c{k + 1}" for k in range(len(C))]
    # Sat items are paired with a_sat,c agents; with three-literal clauses there is one per proposition.
    sat_labels = list(P) + clause_names[len(P):]

    agents = []
    for p in P:
        agents += [f"a_{p}", f"a_~{p}"]
    agents += [f"a_{c}" for c in clause_names]
    agents += [f"a_un,{p}" for p in P]
    agents += [f"a_sat,{c}" for c in clause_names]

    occurrences = [(k, lit) for k, clause in enumerate(C) for lit in clause]
    items = [f"i_{p}" for p in P] + [f"i_{c}" for c in clause_names] + [f"i_sat,{s}" for s in sat_labels]
    items += [f"i_{_lit_name(lit)}{clause_names[k]}" for k, lit in occurrences]

    a = {name: idx for idx, name in enumerate(agents)}
    x = {name: idx for idx, name in enumerate(items)}
    u = [[0] * len(items) for _ in agents]
    pi: list[int | None] = [None] * len(items)

    for p in P:
        u[a[f"a_{p}"]][x[f"i_{p}"]] = 2
        u[a[f"a_~{p}"]][x[f"i_{p}"]] = 1
        for q in P:
            u[a[f"a_un,{q}"]][x[f"i_{p}"]] = 1
        for s in sat_labels:
            u[a[f"a_un,{p}"]][x[f"i_sat,{s}"]] = 2
        pi[x[f"i_{p}"]] = a[f"a_un,{p}"]
    for k, c in enumerate(clause_names):
        u[a[f"a_{c}"]][x[f"i_{c}"]] = 1
        pi[x[f"i_{c}"]] = a[f"a_{c}"]
        for d in clause_names:
            u[a[f"a_sat,{c}"]][x[f"i_{d}"]] = 1
        for s in sat_labels:
            u[a[f"a_sat,{c}"]][x[f"i_sat,{s}"]] = 1
        pi[x[f"i_sat,{sat_labels[k]}"]] = a[f"a_sat,{c}"]
    for k, lit in occurrences:
        item = x[f"i_{_lit_name(lit)}{clause_names[k]}"]
        holder = a[f"a_{_lit_name(lit)}"]
        u[holder][item] = 1
        u[a[f"a_{clause_names[k]}"]][item] = 1
        pi[item] = holder

    instance = FoodbankInstance(tuple(agents), tuple(items), tuple(map(tuple, u)))
    return instance, Allocation(tuple(pi))


def satisfying_dominator(sat: SatInstance, instance: FoodbankInstance,
                         assignment: dict[str, bool]) -> Allocation:
    """Allocation built from a satisfying assignment that Pareto-dominates the empty one.

    Each proposition item goes to the literal agent made true; that agent's
    occurrence items move to their clause agents, clause items move to the
    sat agents and sat items move to the ``a_un`` agents, who value them at 2.
    """
    if not sat.satisfied_by(assignment):
        raise ReductionError("assignment does not satisfy the formula")
    a = {name: i for i, name in enumerate(instance.agents)}
    x = {name: j for j, name in enumerate(instance.items)}
    clause_names = [f"c{k + 1}" for k in range(len(sat.clauses))]
    sat_labels = list(sat.propositions) + clause_names[len(sat.propositions):]
    out: list[int | None] = [None] * instance.m
    for p in sat.propositions:
        out[x[f"i_{p}"]] = a[f"a_{p}" if assignment[p] else f"a_~{p}"]
    for k, clause in enumerate(sat.clauses):
        c = clause_names[k]
        for lit in clause:
            item = x[f"i_{_lit_name(lit)}{c}"]
            true_lit = assignment[lit.prop] == lit.positive
            out[item] = a[f"a_{c}"] if true_lit else a[f"a_{_lit_name(lit)}"]
        out[x[f"i_{c}"]] = a[f"a_sat,{c}"]
    for k, s in enumerate(sat_labels):
        out[x[f"i_sat,{s}"]] = a[f"a_un,{sat.propositions[k % len(sat.propositions)]}"]
    return Allocation(tuple(out))


def matching_to_instance(g: BipartiteGraph) -> FoodbankInstance:
    """Balanced Like instance for a 3-regular bipartite graph with |U| = |V| = n.

    Agents ``e^j_k`` (j-th edge of left vertex k, edges ordered by right vertex)
    and ``s``; items ``v_1..v_n``, ``u^1_k, u^2_k`` per left vertex, ``i1``, ``i2``.
    """
    if g.u != g.v:
        raise ReductionError(f"sides differ in size: |U|={g.u}, |V|={g.v}")
    if not g.is_regular(3):
        raise ReductionError("graph is not 3-regular")
    n = g.u
    items = [f"v{b + 1}" for b in range(n)]
    for k in range(n):
        items += [f"u{k + 1}^1", f"u{k + 1}^2"]
    items += ["i1", "i2"]
    agents, rows = [], []
    for k in range(n):
        for j, b in enumerate(g.neighbours(k)):
            row = [0] * len(items)
            row[b] = 1
            row[n + 2 * k] = row[n + 2 * k + 1] = 1
            row[-1] = 1
            agents.append(f"e{j + 1}_{k + 1}")
            rows.append(row)
    agents.append("s")
    rows.append([0] * (len(items) - 2) + [1, 1])
    return FoodbankInstance(tuple(agents), tuple(items), tuple(map(tuple, rows)))


def count_perfect_matchings(g: BipartiteGraph) -> int:
    """Permanent of the biadjacency matrix by plain permutation enumeration."""
    if g.u != g.v:
        return 0
    if g.u > MAX_PERMANENT_SIDE:
        raise ReductionError(f"graph too large for brute force (side {g.u} > {MAX_PERMANENT_SIDE})")
    return sum(
        all((a, b) in g.edges for a, b in enumerate(perm))
        for perm in itertools.permutations(range(g.v))
    )


def matching_probability_closed_form(g: BipartiteGraph, perfect: int | None = None) -> Fraction:
    """P(s receives i2) = |Perf(G)| / ((3n+1) * 3^n)."""
    if perfect is None:
        perfect = count_perfect_matchings(g)
    n = g.u
    return Fraction(perfect, (3 * n + 1) * 3**n)


@dataclass(frozen=True)
class CorrespondenceReport:
    perfect_matchings: int
    one_each_allocations: int
    expected_one_each: int
    probability_enumerated: Fraction
    probability_propagated: Fraction
    probability_closed_form: Fraction

    @property
    def holds(self) -> bool:
        return (self.one_each_allocations == self.expected_one_each
                and self.probability_enumerated == self.probability_closed_form
                and self.probability_propagated == self.probability_closed_form)


def verify_matching_correspondence(g: BipartiteGraph, budget: int = DEFAULT_BUDGET) -> CorrespondenceReport:
    """Cross-check the matching identity by full enumeration of Balanced Like."""
    instance = matching_to_instance(g)
    n = g.u
    s = instance.agent_index("s")
    i2 = instance.item_index("i2")
    dist = enumerate_distribution(MechanismKind.BALANCED_LIKE, instance, budget)
    prefix_len = 3 * n + 1
    # Distinct prefixes of the first 3n+1 items where every edge agent holds exactly one item.
    prefixes = set()
    p_enum = Fraction(0)
    for alloc, p in dist:
        prefix = alloc.assignment[:prefix_len]
        held = Counter(prefix)
        if all(held[i] == 1 for i in range(instance.n) if i != s):
            prefixes.add(prefix)
        if alloc.assignment[i2] == s:
            p_enum += p
    perfect = count_perfect_matchings(g)
    ante = ante_probabilities(MechanismKind.BALANCED_LIKE, instance, budget)
    return CorrespondenceReport(
        perfect_matchings=perfect,
        one_each_allocations=len(prefixes),
        expected_one_each=2**n * perfect,
        probability_enumerated=p_enum,
        probability_propagated=ante[s, i2],
        probability_closed_form=matching_probability_closed_form(g, perfect),
    )


def load_sat(path: str | Path) -> SatInstance:
    try:
        return SatInstance.from_json(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: parse failure: {exc.msg}") from exc


def load_graph(path: str | Path) -> BipartiteGraph:
    try:
        return BipartiteGraph.from_json(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: parse failure: {exc.msg}") from exc
