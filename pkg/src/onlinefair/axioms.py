"""Efficiency, envy and egalitarian competitiveness checks for food-bank instances.

Dominator and optimum searches only hand items to agents that value them;
items nobody values stay unallocated.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import Allocation, ExpectedUtilityVector, FoodbankInstance, InstanceError, ex_post_utilities
from .mechanisms import (
    DEFAULT_BUDGET,
    EnumerationTooLarge,
    MechanismKind,
    ante_probabilities,
    enumerate_distribution,
    expected_utilities,
)


@dataclass(frozen=True)
class EfficiencyReport:
    efficient: bool
    witness: Allocation | None = None

    @property
    def verdict(self) -> str:
        return "efficient" if self.efficient else "dominated"


@dataclass(frozen=True)
class ExPostReport:
    efficient: bool
    allocation: Allocation | None = None
    witness: Allocation | None = None
    checked: int = 0

    def __bool__(self):
        return self.efficient


@dataclass(frozen=True)
class EnvyReport:
    pairs: tuple[tuple[int, int], ...]

    @property
    def envy_free(self) -> bool:
        return not self.pairs

    def __bool__(self):
        return self.envy_free


@dataclass(frozen=True)
class CompetitiveReport:
    """``ratio`` is offline / online; ``None`` means unbounded (online value zero)."""

    offline_optimum: Fraction
    mechanism_value: Fraction
    ratio: Fraction | None

    @property
    def unbounded(self) -> bool:
        return self.ratio is None

    @classmethod
    def build(cls, offline: Fraction, online: Fraction) -> "CompetitiveReport":
        offline, online = Fraction(offline), Fraction(online)
        if online > 0:
            return cls(offline, online, offline / online)
        if offline > 0:
            return cls(offline, online, None)
        return cls(offline, online, Fraction(1))

    def to_json(self) -> dict:
        return {
            "offline_optimum": str(self.offline_optimum),
            "mechanism_value": str(self.mechanism_value),
            "ratio": "unbounded" if self.ratio is None else str(self.ratio),
        }


def pareto_dominates(instance: FoodbankInstance, a: Allocation, b: Allocation) -> bool:
    """True iff nobody is worse off under ``a`` than under ``b`` and someone is better off."""
    if len(a.assignment) != len(b.assignment):
        raise InstanceError("allocations cover different item sets")
    ua = ex_post_utilities(instance, a)
    ub = ex_post_utilities(instance, b)
    return all(x >= y for x, y in zip(ua, ub)) and any(x > y for x, y in zip(ua, ub))


def _suffix_potential(instance: FoodbankInstance) -> list[list[Fraction]]:
    # potential[j][i]: utility agent i could still collect from items j..m-1
    n, m = instance.n, instance.m
    potential = [[Fraction(0)] * n for _ in range(m + 1)]
    for j in range(m - 1, -1, -1):
        for i in range(n):
            potential[j][i] = potential[j + 1][i] + instance.utilities[i][j]
    return potential


def find_dominator(instance: FoodbankInstance, alloc: Allocation,
                   budget: int = DEFAULT_BUDGET) -> Allocation | None:
    """Depth-first search for an allocation that Pareto-dominates ``alloc``.

    Branches are cut once some agent can no longer reach its current utility.
    """
    baseline = ex_post_utilities(instance, alloc)
    n, m = instance.n, instance.m
    potential = _suffix_potential(instance)
    current = [Fraction(0)] * n
    assignment: list[int | None] = [None] * m
    visited = 0

    def feasible(j: int) -> bool:
        return all(current[i] + potential[j][i] >= baseline[i] for i in range(n))

    def rec(j: int) -> bool:
        nonlocal visited
        visited += 1
        if visited > budget:
            raise EnumerationTooLarge(budget)
        if j == m:
            return any(current[i] > baseline[i] for i in range(n))
        likers = instance.likers[j]
        if not likers:
            assignment[j] = None
            return rec(j + 1)
        for agent in likers:
            u = instance.utilities[agent][j]
            assignment[j] = agent
            current[agent] += u
            if feasible(j + 1) and rec(j + 1):
                return True
            current[agent] -= u
        assignment[j] = None
        return False

    if not feasible(0):
        return None
    return Allocation(tuple(assignment)) if rec(0) else None


def is_pareto_efficient(instance: FoodbankInstance, alloc: Allocation,
                        budget: int = DEFAULT_BUDGET) -> EfficiencyReport:
    witness = find_dominator(instance, alloc, budget)
    return EfficiencyReport(witness is None, witness)


def is_ex_post_efficient(kind: MechanismKind, instance: FoodbankInstance,
                         budget: int = DEFAULT_BUDGET) -> ExPostReport:
    """Check Pareto efficiency of every allocation the mechanism can output."""
    dist = enumerate_distribution(kind, instance, budget)
    for k, (alloc, _) in enumerate(dist):
        witness = find_dominator(instance, alloc, budget)
        if witness is not None:
            return ExPostReport(False, alloc, witness, k + 1)
    return ExPostReport(True, checked=len(dist))


def envy_free_ex_post(instance: FoodbankInstance, alloc: Allocation) -> EnvyReport:
    """All (envier, envied) pairs where the envier prefers the other bundle to its own."""
    n = instance.n
    own = ex_post_utilities(instance, alloc)
    bundles = [alloc.bundle(i) for i in range(n)]
    pairs = []
    for i in range(n):
        row = instance.utilities[i]
        for k in range(n):
            if k != i and sum((row[j] for j in bundles[k]), Fraction(0)) > own[i]:
                pairs.append((i, k))
    return EnvyReport(tuple(pairs))


def egalitarian_welfare(expected: ExpectedUtilityVector | Sequence[Fraction]) -> Fraction:
    values = tuple(expected)
    if not values:
        raise ValueError("egalitarian welfare of an empty vector")
    return min(values)


def offline_egalitarian_optimum(instance: FoodbankInstance,
                                budget: int = DEFAULT_BUDGET) -> tuple[Fraction, Allocation]:
    """Best minimum ex post utility over deterministic allocations, with a witness."""
    n, m = instance.n, instance.m
    if n == 0:
        raise ValueError("instance has no agents")
    potential = _suffix_potential(instance)
    current = [Fraction(0)] * n
    assignment: list[int | None] = [None] * m
    best_value = Fraction(-1)
    best: tuple[int | None, ...] = tuple(assignment)
    visited = 0

    def rec(j: int):
        nonlocal visited, best_value, best
        visited += 1
        if visited > budget:
            raise EnumerationTooLarge(budget)
        if min(current[i] + potential[j][i] for i in range(n)) <= best_value:
            return
        if j == m:
            best_value = min(current)
            best = tuple(assignment)
            return
        likers = instance.likers[j]
        if not likers:
            rec(j + 1)
            return
        for agent in likers:
            assignment[j] = agent
            current[agent] += instance.utilities[agent][j]
            rec(j + 1)
            current[agent] -= instance.utilities[agent][j]
        assignment[j] = None

    rec(0)
    return best_value, Allocation(best)


def mechanism_egalitarian_welfare(kind: MechanismKind, instance: FoodbankInstance,
                                  budget: int = DEFAULT_BUDGET) -> Fraction:
    ante = ante_probabilities(kind, instance, budget)
    return egalitarian_welfare(expected_utilities(ante, instance))


def egalitarian_competitive_ratio(kind: MechanismKind, instance: FoodbankInstance,
                                  budget: int = DEFAULT_BUDGET) -> CompetitiveReport:
    offline, _ = offline_egalitarian_optimum(instance, budget)
    return CompetitiveReport.build(offline, mechanism_egalitarian_welfare(kind, instance, budget))
