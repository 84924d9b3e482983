"""Deliberately naive reference computations, independent of the package's search code."""

import itertools
from fractions import Fraction


def utilities_of(instance, assignment):
    out = [Fraction(0)] * instance.n
    for j, a in enumerate(assignment):
        if a is not None:
            out[a] += instance.utilities[a][j]
    return out


def all_allocations_reversed(instance):
    """Every allocation of liked items to likers, generated last item first."""
    choices = [list(instance.likers[j]) or [None] for j in range(instance.m)]
    for combo in itertools.product(*reversed(choices)):
        yield tuple(reversed(combo))


def has_dominator(instance, assignment):
    base = utilities_of(instance, assignment)
    for other in all_allocations_reversed(instance):
        u = utilities_of(instance, other)
        if all(x >= y for x, y in zip(u, base)) and any(x > y for x, y in zip(u, base)):
            return True
    return False


def undominated_vectors(instance):
    """Utility vectors of Pareto efficient allocations, by pairwise comparison of all vectors."""
    vectors = {tuple(utilities_of(instance, a)) for a in all_allocations_reversed(instance)}
    return {
        v for v in vectors
        if not any(all(x >= y for x, y in zip(w, v)) and w != v for w in vectors)
    }


def brute_offline_optimum(instance):
    return max(min(utilities_of(instance, a)) for a in all_allocations_reversed(instance))


def brute_distribution(kind_balanced, instance):
    """Probability of every assignment by replaying each candidate sequence item by item."""
    out = {}
    for assignment in itertools.product(*[list(l) or [None] for l in instance.likers]):
        counts = [0] * instance.n
        p = Fraction(1)
        for j, a in enumerate(assignment):
            likers = instance.likers[j]
            if not likers:
                continue
            pool = likers
            if kind_balanced:
                low = min(counts[i] for i in likers)
                pool = [i for i in likers if counts[i] == low]
            if a not in pool:
                p = Fraction(0)
                break
            p /= len(pool)
            counts[a] += 1
        if p:
            out[assignment] = p
    return out


def permanent_by_expansion(matrix):
    """Laplace expansion along the first row."""
    if not matrix:
        return 1
    total = 0
    for k, v in enumerate(matrix[0]):
        if v:
            minor = [row[:k] + row[k + 1:] for row in matrix[1:]]
            total += v * permanent_by_expansion(minor)
    return total
