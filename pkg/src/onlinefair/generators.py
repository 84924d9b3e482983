"""Synthetic food-bank profiles and organ event streams."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import FoodbankInstance
from .organs import (
    ACCEPTS,
    BloodType,
    Organ,
    OrganArrival,
    OrganEvent,
    Patient,
    PatientArrival,
    PatientDeparture,
)

BLOOD_ORDER = (BloodType.O, BloodType.A, BloodType.B, BloodType.AB)
DEFAULT_BLOOD_MIX = (0.50, 0.25, 0.20, 0.05)


class ProfileKind(str, enum.Enum):
    UNIFORM_BINARY = "uniform"
    CORRELATED_BINARY = "correlated"
    BORDA = "borda"


@dataclass(frozen=True)
class ProfileSpec:
    """``p`` is the like probability (binary kinds); ``correlation`` mixes a
    shared per-item popularity draw with independent noise."""

    kind: ProfileKind
    n: int
    m: int
    seed: int = 0
    p: float = 0.5
    correlation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if self.n < 1 or self.m < 0:
            raise ValueError(f"need n >= 1 and m >= 0, got n={self.n}, m={self.m}")
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not 0 <= self.correlation <= 1:
            raise ValueError(f"correlation must lie in [0, 1], got {self.correlation}")


def generate_foodbank(spec: ProfileSpec) -> FoodbankInstance:
    rng = np.random.default_rng(spec.seed)
    n, m = spec.n, spec.m
    if spec.kind is ProfileKind.UNIFORM_BINARY:
        u = (rng.random((n, m)) < spec.p).astype(int)
    elif spec.kind is ProfileKind.CORRELATED_BINARY:
        popular = rng.random(m) < spec.p
        own = rng.random((n, m)) < spec.p
        copy = rng.random((n, m)) < spec.correlation
        u = np.where(copy, popular[None, :], own).astype(int)
    else:
        u = np.stack([rng.permutation(np.arange(m, 0, -1)) for _ in range(n)]) if m else np.zeros((n, 0), int)
    agents = tuple(f"a{i}" for i in range(n))
    items = tuple(f"x{j}" for j in range(m))
    return FoodbankInstance(agents, items, tuple(tuple(int(v) for v in row) for row in u))


def _check_mix(blood_mix: Sequence[float]) -> np.ndarray:
    mix = np.asarray(blood_mix, dtype=float)
    if mix.shape != (4,) or (mix < 0).any() or not np.isclose(mix.sum(), 1.0):
        raise ValueError(f"blood_mix must be four non-negative proportions summing to 1, got {list(blood_mix)}")
    return mix


def generate_organ_stream(n_patients: int, n_organs: int, blood_mix: Sequence[float] = DEFAULT_BLOOD_MIX,
                          exact_fraction: float = 0.0, seed: int = 0, *,
                          organ_mix: Sequence[float] | None = None, departure_prob: float = 0.05,
                          double_prob: float = 0.5) -> list[OrganEvent]:
    """Random waiting-list stream.

    Patients are split between an initial list and later arrivals spread over
    the organ rounds. Each round may remove a random earlier arrival, then
    delivers one organ (two kidneys with ``double_prob``). For a fraction
    ``exact_fraction`` of organs, one zero-gap compatible patient per kidney
    is added just before the organ arrives. EPTS and KDPI are integers in 0..100.
    """
    mix = _check_mix(blood_mix)
    omix = mix if organ_mix is None else _check_mix(organ_mix)
    if not 0 <= exact_fraction <= 1:
        raise ValueError(f"exact_fraction must lie in [0, 1], got {exact_fraction}")
    if n_patients < 0 or n_organs < 0:
        raise ValueError("counts must be non-negative")
    rng = np.random.default_rng(seed)
    events: list[OrganEvent] = []
    arrived: list[str] = []
    departed: set[str] = set()

    def new_patient(t: int, pid: str, blood: BloodType, epts: int):
        events.append(PatientArrival(t, Patient(pid, blood, Fraction(epts))))
        arrived.append(pid)

    initial = n_patients // 2 if n_organs else n_patients
    for k in range(initial):
        new_patient(0, f"P{k}", BLOOD_ORDER[rng.choice(4, p=mix)], int(rng.integers(0, 101)))
    later = list(range(initial, n_patients))
    per_round = np.array_split(np.array(later, dtype=int), n_organs) if n_organs else []
    injected = 0
    for r in range(n_organs):
        t = r + 1
        for k in per_round[r]:
            new_patient(t, f"P{k}", BLOOD_ORDER[rng.choice(4, p=mix)], int(rng.integers(0, 101)))
        if arrived and rng.random() < departure_prob:
            pid = arrived[int(rng.integers(len(arrived)))]
            if pid not in departed:
                departed.add(pid)
                events.append(PatientDeparture(t, pid))
        blood = BLOOD_ORDER[rng.choice(4, p=omix)]
        kdpi = int(rng.integers(0, 101))
        kidneys = 2 if rng.random() < double_prob else 1
        if rng.random() < exact_fraction:
            accepting = [bt for bt in BLOOD_ORDER if blood in ACCEPTS[bt]]
            for _ in range(kidneys):
                new_patient(t, f"X{injected}", accepting[int(rng.integers(len(accepting)))], kdpi)
                injected += 1
        events.append(OrganArrival(t, Organ(f"K{r}", blood, Fraction(kdpi), kidneys)))
    return events
