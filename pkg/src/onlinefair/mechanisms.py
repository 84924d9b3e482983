"""Like and Balanced Like: sampling, exact enumeration and ante probabilities."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .core import Allocation, ExpectedUtilityVector, FoodbankInstance, format_rational

DEFAULT_BUDGET = 10**7


class MechanismKind(enum.Enum):
    LIKE = "like"
    BALANCED_LIKE = "balanced-like"

    @classmethod
    def parse(cls, name: str) -> "MechanismKind":
        key = name.strip().lower().replace("_", "-")
        aliases = {"like": cls.LIKE, "balanced-like": cls.BALANCED_LIKE, "balancedlike": cls.BALANCED_LIKE,
                   "balanced": cls.BALANCED_LIKE}
        if key not in aliases:
            raise ValueError(f"unknown mechanism {name!r}; expected 'like' or 'balanced-like'")
        return aliases[key]


class EnumerationTooLarge(RuntimeError):
    def __init__(self, budget: int):
        super().__init__(f"enumeration too large: exceeded budget of {budget} states")
        self.budget = budget


@dataclass(frozen=True)
class AllocationDistribution:
    support: tuple[tuple[Allocation, Fraction], ...]

    def __iter__(self):
        return iter(self.support)

    def __len__(self):
        return len(self.support)

    def total(self) -> Fraction:
        return sum((p for _, p in self.support), Fraction(0))

    def probability_of(self, alloc: Allocation) -> Fraction:
        for a, p in self.support:
            if a == alloc:
                return p
        return Fraction(0)

    def to_json(self, instance: FoodbankInstance) -> list[dict]:
        return [{"assignment": a.to_json(instance), "prob": str(format_rational(p))} for a, p in self.support]


@dataclass(frozen=True)
class AnteMatrix:
    """n x m marginal probabilities; ``unallocated[j]`` flags items nobody likes."""

    probs: tuple[tuple[Fraction, ...], ...]
    unallocated: tuple[bool, ...]

    def __getitem__(self, ij):
        i, j = ij
        return self.probs[i][j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.probs[i]

    def column_sum(self, j: int) -> Fraction:
        return sum((row[j] for row in self.probs), Fraction(0))

    def to_json(self, instance: FoodbankInstance) -> dict:
        return {
            "agents": list(instance.agents),
            "items": list(instance.items),
            "probs": [[format_rational(p) for p in row] for row in self.probs],
            "unallocated": [instance.items[j] for j, flag in enumerate(self.unallocated) if flag],
        }


def _eligible(kind: MechanismKind, likers: tuple[int, ...], counts) -> tuple[int, ...]:
    if kind is MechanismKind.LIKE or len(likers) <= 1:
        return likers
    low = min(counts[i] for i in likers)
    return tuple(i for i in likers if counts[i] == low)


def eligible_agents(kind: MechanismKind, instance: FoodbankInstance, partial: Allocation,
                    item: str | int) -> frozenset[int]:
    """Agents that may receive ``item`` given the items already handed out."""
    j = item if isinstance(item, int) else instance.item_index(item)
    if j < len(partial.assignment) and partial.assignment[j] is not None:
        raise ValueError(f"item {instance.items[j]!r} is already allocated")
    counts = partial.counts(instance.n)
    return frozenset(_eligible(kind, instance.likers[j], counts))


def sample_allocation(kind: MechanismKind, instance: FoodbankInstance, seed: int | random.Random) -> Allocation:
    """Run the mechanism once; O(n*m).

    ``seed`` may be an existing generator, which lets repeated draws share one stream.
    """
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    counts = [0] * instance.n
    assignment: list[int | None] = []
    balanced = kind is MechanismKind.BALANCED_LIKE
    for likers in instance.likers:
        if not likers:
            assignment.append(None)
            continue
        if balanced and len(likers) > 1:
            low = min(counts[i] for i in likers)
            pool = [i for i in likers if counts[i] == low]
        else:
            pool = likers
        agent = pool[rng.randrange(len(pool))]
        counts[agent] += 1
        assignment.append(agent)
    return Allocation(tuple(assignment))


def allocation_probability(kind: MechanismKind, instance: FoodbankInstance, alloc: Allocation) -> Fraction:
    """Probability that one run produces exactly ``alloc`` (zero if unreachable)."""
    counts = [0] * instance.n
    denominator = 1
    for j, agent in enumerate(alloc.assignment):
        pool = _eligible(kind, instance.likers[j], counts)
        if agent is None:
            if pool:
                return Fraction(0)
            continue
        if agent not in pool:
            return Fraction(0)
        denominator *= len(pool)
        counts[agent] += 1
    return Fraction(1, denominator)


def _walk(kind: MechanismKind, instance: FoodbankInstance, budget: int) -> Iterator[tuple[tuple, int]]:
    # Depth-first over choice sequences; every leaf is a distinct allocation and its
    # probability is 1/denominator with denominator the product of pool sizes.
    n, m = instance.n, instance.m
    likers = instance.likers
    counts = [0] * n
    assignment: list[int | None] = [None] * m
    visited = 0

    def rec(j: int, denominator: int):
        nonlocal visited
        visited += 1
        if visited > budget:
            raise EnumerationTooLarge(budget)
        if j == m:
            yield tuple(assignment), denominator
            return
        pool = _eligible(kind, likers[j], counts)
        if not pool:
            assignment[j] = None
            yield from rec(j + 1, denominator)
            return
        k = len(pool)
        for agent in pool:
            assignment[j] = agent
            counts[agent] += 1
            yield from rec(j + 1, denominator * k)
            counts[agent] -= 1
        assignment[j] = None

    yield from rec(0, 1)


def enumerate_distribution(kind: MechanismKind, instance: FoodbankInstance,
                           budget: int = DEFAULT_BUDGET) -> AllocationDistribution:
    """Exact distribution over every allocation the mechanism can output.

    Raises :class:`EnumerationTooLarge` once more than ``budget`` search nodes are visited.
    """
    support = tuple((Allocation(a), Fraction(1, d)) for a, d in _walk(kind, instance, budget))
    return AllocationDistribution(support)


def ante_matrix(dist: AllocationDistribution, instance: FoodbankInstance) -> AnteMatrix:
    """Marginals of a distribution over allocations."""
    probs = [[Fraction(0)] * instance.m for _ in range(instance.n)]
    for alloc, p in dist:
        for j, agent in enumerate(alloc.assignment):
            if agent is not None:
                probs[agent][j] += p
    return AnteMatrix(tuple(map(tuple, probs)), tuple(not likers for likers in instance.likers))


def like_ante_closed_form(instance: FoodbankInstance) -> AnteMatrix:
    """Under Like every liker of an item gets it with probability 1/#likers."""
    probs = [[Fraction(0)] * instance.m for _ in range(instance.n)]
    for j, likers in enumerate(instance.likers):
        for i in likers:
            probs[i][j] = Fraction(1, len(likers))
    return AnteMatrix(tuple(map(tuple, probs)), tuple(not likers for likers in instance.likers))


def ante_probabilities(kind: MechanismKind, instance: FoodbankInstance,
                       budget: int = DEFAULT_BUDGET) -> AnteMatrix:
    """Ante probabilities by forward propagation over count-vector states.

    Allocations with equal per-agent counts behave identically for every later
    item, so probability mass is merged on the full count vector. This avoids
    materialising the support, but the number of states can still blow up.
    """
    if kind is MechanismKind.LIKE:
        return like_ante_closed_form(instance)
    n = instance.n
    probs = [[Fraction(0)] * instance.m for _ in range(n)]
    states: dict[tuple[int, ...], Fraction] = {(0,) * n: Fraction(1)}
    visited = 0
    for j, likers in enumerate(instance.likers):
        if not likers:
            continue
        nxt: dict[tuple[int, ...], Fraction] = {}
        for counts, mass in states.items():
            pool = _eligible(kind, likers, counts)
            share = mass / len(pool)
            for agent in pool:
                visited += 1
                if visited > budget:
                    raise EnumerationTooLarge(budget)
                probs[agent][j] += share
                key = counts[:agent] + (counts[agent] + 1,) + counts[agent + 1:]
                nxt[key] = nxt.get(key, Fraction(0)) + share
        states = nxt
    return AnteMatrix(tuple(map(tuple, probs)), tuple(not likers for likers in instance.likers))


def expected_utilities(ante: AnteMatrix, instance: FoodbankInstance) -> ExpectedUtilityVector:
    if len(ante.probs) != instance.n or any(len(r) != instance.m for r in ante.probs):
        raise ValueError("ante matrix dimensions do not match the instance")
    return ExpectedUtilityVector(tuple(
        sum((p * u for p, u in zip(ante.probs[i], instance.utilities[i])), Fraction(0))
        for i in range(instance.n)
    ))
