"""Domain types and instance I/O for the food-bank model.

All utilities and probabilities are :class:`fractions.Fraction`; floats are
only ever produced by the plotting helpers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence


class InstanceError(ValueError):
    """Raised when an instance file or value violates the instance contract."""


def parse_rational(value, where: str = "") -> Fraction:
    """Parse an int or a ``"p/q"`` string into a Fraction.

    Floats are rejected so that no binary rounding sneaks into exact code paths.

    >>> parse_rational("6/4")
    Fraction(3, 2)
    >>> parse_rational(7)
    Fraction(7, 1)
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise InstanceError(f"expected integer or 'p/q' string{where}, got {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceError(f"cannot parse rational {value!r}{where}") from exc
    raise InstanceError(f"expected integer or 'p/q' string{where}, got {value!r}")


def format_rational(value: Fraction) -> int | str:
    """Canonical form: plain int when the denominator is 1, else ``"p/q"``."""
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class FoodbankInstance:
    """n agents, m items in arrival order, and an n x m utility matrix.

    A utility of zero means the agent does not bid for the item.
    """

    agents: tuple[str, ...]
    items: tuple[str, ...]
    utilities: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "items", tuple(self.items))
        rows = []
        for i, row in enumerate(self.utilities):
            row = tuple(parse_rational(u, f" at ({i},{j})") for j, u in enumerate(row))
            rows.append(row)
        object.__setattr__(self, "utilities", tuple(rows))
        self._validate()

    def _validate(self):
        if len(set(self.agents)) != len(self.agents):
            raise InstanceError("agent identifiers are not unique")
        if len(set(self.items)) != len(self.items):
            raise InstanceError("item identifiers are not unique")
        if len(self.utilities) != len(self.agents):
            raise InstanceError(
                f"dimension mismatch: {len(self.utilities)} utility rows for {len(self.agents)} agents"
            )
        for i, row in enumerate(self.utilities):
            if len(row) != len(self.items):
                raise InstanceError(
                    f"dimension mismatch in row {i}: {len(row)} entries for {len(self.items)} items"
                )
            for j, u in enumerate(row):
                if u < 0:
                    raise InstanceError(f"negative utility at ({i},{j})")

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def m(self) -> int:
        return len(self.items)

    @cached_property
    def likers(self) -> tuple[tuple[int, ...], ...]:
        """For each item, the indices of agents with positive utility, in agent order."""
        return tuple(
            tuple(i for i in range(self.n) if self.utilities[i][j] > 0) for j in range(self.m)
        )

    def agent_index(self, agent: str) -> int:
        try:
            return self.agents.index(agent)
        except ValueError:
            raise KeyError(f"unknown agent {agent!r}") from None

    def item_index(self, item: str) -> int:
        try:
            return self.items.index(item)
        except ValueError:
            raise KeyError(f"unknown item {item!r}") from None

    def to_json(self) -> dict:
        return {
            "agents": list(self.agents),
            "items": list(self.items),
            "utilities": [[format_rational(u) for u in row] for row in self.utilities],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FoodbankInstance":
        for key in ("agents", "items", "utilities"):
            if key not in data:
                raise InstanceError(f"missing key {key!r}")
        utilities = data["utilities"]
        if not isinstance(utilities, list) or not all(isinstance(r, list) for r in utilities):
            raise InstanceError("utilities must be a list of rows")
        return cls(
            agents=tuple(str(a) for a in data["agents"]),
            items=tuple(str(x) for x in data["items"]),
            utilities=tuple(tuple(row) for row in utilities),
        )


@dataclass(frozen=True)
class Allocation:
    """One discrete allocation: ``assignment[j]`` is the agent index holding item j.

    ``None`` marks an item that was explicitly left unallocated (nobody bid for it).
    """

    assignment: tuple[int | None, ...]

    def counts(self, n: int) -> tuple[int, ...]:
        out = [0] * n
        for agent in self.assignment:
            if agent is not None:
                out[agent] += 1
        return tuple(out)

    def bundle(self, agent: int) -> tuple[int, ...]:
        return tuple(j for j, a in enumerate(self.assignment) if a == agent)

    @property
    def unallocated(self) -> tuple[int, ...]:
        return tuple(j for j, a in enumerate(self.assignment) if a is None)

    def to_json(self, instance: FoodbankInstance) -> dict[str, str | None]:
        return {
            instance.items[j]: (None if a is None else instance.agents[a])
            for j, a in enumerate(self.assignment)
        }

    @classmethod
    def from_mapping(cls, instance: FoodbankInstance, mapping: Mapping[str, str | None]) -> "Allocation":
        unknown = set(mapping) - set(instance.items)
        if unknown:
            raise InstanceError(f"allocation names unknown items: {sorted(unknown)}")
        assignment = []
        for item in instance.items:
            if item not in mapping:
                raise InstanceError(f"unassigned item {item!r}")
            agent = mapping[item]
            assignment.append(None if agent is None else instance.agent_index(agent))
        return cls(tuple(assignment))


@dataclass(frozen=True)
class ExpectedUtilityVector:
    values: tuple[Fraction, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def load_instance(path: str | Path) -> FoodbankInstance:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: parse failure at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return FoodbankInstance.from_json(data)


def dumps_instance(instance: FoodbankInstance) -> str:
    return json.dumps(instance.to_json(), indent=1) + "\n"


def save_instance(instance: FoodbankInstance, path: str | Path) -> None:
    Path(path).write_text(dumps_instance(instance))


def make_instance(utilities: Sequence[Sequence], agents: Iterable[str] | None = None,
                  items: Iterable[str] | None = None) -> FoodbankInstance:
    """Convenience constructor with default names ``a0..`` and ``x0..``."""
    utilities = [list(r) for r in utilities]
    n = len(utilities)
    m = len(utilities[0]) if utilities else 0
    agents = tuple(agents) if agents is not None else tuple(f"a{i}" for i in range(n))
    items = tuple(items) if items is not None else tuple(f"x{j}" for j in range(m))
    return FoodbankInstance(agents, items, tuple(tuple(r) for r in utilities))


def ex_post_utilities(instance: FoodbankInstance, alloc: Allocation) -> tuple[Fraction, ...]:
    """Per-agent utility of a discrete allocation."""
    if len(alloc.assignment) != instance.m:
        raise InstanceError(
            f"allocation covers {len(alloc.assignment)} items, instance has {instance.m}"
        )
    totals = [Fraction(0)] * instance.n
    for j, agent in enumerate(alloc.assignment):
        if agent is not None:
            totals[agent] += instance.utilities[agent][j]
    return tuple(totals)
