"""Deceased-organ matching on a waiting list with arrivals and departures.

Two deterministic matchers share one pipeline: restrict the waiting list by
blood type (exact type for Hard, ABO-compatible for Soft), keep the patients
whose EPTS is closest to the organ's KDPI, split them by blood type, take the
longest sub-list and give the organ to its longest-waiting patient.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx

from .axioms import CompetitiveReport
from .core import format_rational, parse_rational

DEFAULT_EPSILON = Fraction(1, 10**9)
DEFAULT_AUDIT_BUDGET = 10**6


class BloodType(str, enum.Enum):
    O = "O"
    A = "A"
    B = "B"
    AB = "AB"


# donor types each recipient type can accept
ACCEPTS = {
    BloodType.O: frozenset({BloodType.O}),
    BloodType.A: frozenset({BloodType.O, BloodType.A}),
    BloodType.B: frozenset({BloodType.O, BloodType.B}),
    BloodType.AB: frozenset(BloodType),
}
# sub-list priority after the exact-type sub-list: smaller donor pool first, A before B
SUBLIST_ORDER = {BloodType.O: 0, BloodType.A: 1, BloodType.B: 2, BloodType.AB: 3}


class Mechanism(str, enum.Enum):
    HARD = "hard"
    SOFT = "soft"

    @classmethod
    def parse(cls, name: str) -> "Mechanism":
        key = name.strip().lower()
        aliases = {"hard": cls.HARD, "hardtypebestindexmatch": cls.HARD,
                   "soft": cls.SOFT, "softtypebestindexmatch": cls.SOFT}
        if key not in aliases:
            raise ValueError(f"unknown organ mechanism {name!r}; expected 'hard' or 'soft'")
        return aliases[key]


class StreamError(ValueError):
    pass


class StandingHypothesisError(RuntimeError):
    """The stream violates the assumption an optimality claim depends on."""


def _index(value, what: str) -> Fraction:
    value = parse_rational(value, f" for {what}")
    if not 0 <= value <= 100:
        raise StreamError(f"{what} {value} outside [0, 100]")
    return value


@dataclass(frozen=True)
class Patient:
    id: str
    blood: BloodType
    epts: Fraction
    arrival_position: int = 0

    def __post_init__(self):
        object.__setattr__(self, "blood", BloodType(self.blood))
        object.__setattr__(self, "epts", _index(self.epts, "EPTS"))


@dataclass(frozen=True)
class Organ:
    id: str
    blood: BloodType
    kdpi: Fraction
    kidneys: int = 1

    def __post_init__(self):
        object.__setattr__(self, "blood", BloodType(self.blood))
        object.__setattr__(self, "kdpi", _index(self.kdpi, "KDPI"))
        if self.kidneys not in (1, 2):
            raise StreamError(f"organ {self.id}: kidneys must be 1 or 2, got {self.kidneys}")


@dataclass(frozen=True)
class PatientArrival:
    t: int
    patient: Patient


@dataclass(frozen=True)
class PatientDeparture:
    t: int
    patient_id: str


@dataclass(frozen=True)
class OrganArrival:
    t: int
    organ: Organ


OrganEvent = PatientArrival | PatientDeparture | OrganArrival


@dataclass(frozen=True)
class OrganConfig:
    mechanism: Mechanism = Mechanism.SOFT
    epsilon: Fraction = DEFAULT_EPSILON

    def __post_init__(self):
        object.__setattr__(self, "mechanism", Mechanism(self.mechanism))
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class MatchRecord:
    organ: Organ
    patient: Patient
    kidney: int = 1

    @property
    def organ_id(self) -> str:
        return self.organ.id

    @property
    def patient_id(self) -> str:
        return self.patient.id

    @property
    def gap(self) -> Fraction:
        return abs(self.patient.epts - self.organ.kdpi)

    @property
    def exact_blood(self) -> bool:
        return self.patient.blood == self.organ.blood

    @property
    def exact_index(self) -> bool:
        return self.gap == 0


@dataclass
class StreamResult:
    records: list[MatchRecord] = field(default_factory=list)
    waiting: list[Patient] = field(default_factory=list)
    # waiting list just before each allocation attempt, aligned with ``units``
    snapshots: list[tuple[Patient, ...]] = field(default_factory=list)
    # (organ, kidney number, matched record or None) in processing order
    units: list[tuple[Organ, int, MatchRecord | None]] = field(default_factory=list)
    ignored_departures: list[str] = field(default_factory=list)

    @property
    def unmatched(self) -> list[tuple[Organ, int]]:
        return [(o, k) for o, k, rec in self.units if rec is None]


def compatible(patient_blood: BloodType, organ_blood: BloodType) -> bool:
    """ABO rule: can a patient of ``patient_blood`` receive an organ of ``organ_blood``?"""
    return BloodType(organ_blood) in ACCEPTS[BloodType(patient_blood)]


def _candidates(mechanism: Mechanism, waiting: Iterable[Patient], organ: Organ) -> list[Patient]:
    if mechanism is Mechanism.HARD:
        return [p for p in waiting if p.blood == organ.blood]
    return [p for p in waiting if compatible(p.blood, organ.blood)]


def eligible_sublists(mechanism: Mechanism, waiting_list: Iterable[Patient],
                      organ: Organ) -> dict[BloodType, list[Patient]]:
    """Closest-index candidates, partitioned by blood type (each list in waiting order)."""
    candidates = _candidates(Mechanism(mechanism), waiting_list, organ)
    out: dict[BloodType, list[Patient]] = {bt: [] for bt in BloodType}
    if not candidates:
        return out
    best = min(abs(p.epts - organ.kdpi) for p in candidates)
    for p in candidates:
        if abs(p.epts - organ.kdpi) == best:
            out[p.blood].append(p)
    return out


def _sublist_key(organ: Organ):
    def key(item):
        blood, patients = item
        return (-len(patients), blood != organ.blood, SUBLIST_ORDER[blood])
    return key


def choose_patient(mechanism: Mechanism, waiting_list: Iterable[Patient], organ: Organ) -> Patient | None:
    sublists = eligible_sublists(mechanism, waiting_list, organ)
    blood, patients = min(sublists.items(), key=_sublist_key(organ))
    if not patients:
        return None
    return min(patients, key=lambda p: p.arrival_position)


def allocate_organ(mechanism: Mechanism, waiting_list: list[Patient], organ: Organ,
                   config: OrganConfig | None = None, kidney: int = 1) -> MatchRecord | None:
    """Match one kidney and remove the recipient from ``waiting_list`` in place.

    Returns ``None`` when nobody is eligible.
    """
    patient = choose_patient(mechanism, waiting_list, organ)
    if patient is None:
        return None
    waiting_list.remove(patient)
    return MatchRecord(organ, patient, kidney)


def _order(events: Sequence[OrganEvent]) -> list[OrganEvent]:
    # stable: simultaneous events keep their stream order
    return sorted(events, key=lambda e: e.t)


def run_stream(events: Sequence[OrganEvent], config: OrganConfig,
               keep_snapshots: bool = True) -> StreamResult:
    """Process events in timestamp order; a two-kidney organ is matched twice in sequence.

    Patients keep their waiting-list seniority in arrival order. A departure of a
    patient who has already been matched is recorded and otherwise ignored.
    """
    waiting: dict[str, Patient] = {}
    seen: set[str] = set()
    position = 0
    result = StreamResult()
    mechanism = config.mechanism
    for ev in _order(events):
        if isinstance(ev, PatientArrival):
            pid = ev.patient.id
            if pid in seen:
                raise StreamError(f"patient {pid!r} arrives twice")
            seen.add(pid)
            waiting[pid] = Patient(pid, ev.patient.blood, ev.patient.epts, position)
            position += 1
        elif isinstance(ev, PatientDeparture):
            if ev.patient_id in waiting:
                del waiting[ev.patient_id]
            elif ev.patient_id in seen:
                result.ignored_departures.append(ev.patient_id)
            else:
                raise StreamError(f"departure of unknown patient {ev.patient_id!r} at t={ev.t}")
        elif isinstance(ev, OrganArrival):
            organ = ev.organ
            for kidney in range(1, organ.kidneys + 1):
                present = tuple(waiting.values())
                if keep_snapshots:
                    result.snapshots.append(present)
                patient = choose_patient(mechanism, present, organ)
                record = None
                if patient is not None:
                    del waiting[patient.id]
                    record = MatchRecord(organ, patient, kidney)
                    result.records.append(record)
                result.units.append((organ, kidney, record))
        else:
            raise StreamError(f"unknown event {ev!r}")
    result.waiting = list(waiting.values())
    return result


# --- envy -------------------------------------------------------------------

def blood_type_envy_pairs(result: StreamResult) -> list[tuple[str, str, str]]:
    """(envier, recipient, organ) whenever an organ went to a different blood type.

    Enviers are waiting patients who could accept the organ and whose own type
    differs from the recipient's.
    """
    pairs = []
    for (organ, _, record), present in zip(result.units, result.snapshots):
        if record is None or record.exact_blood:
            continue
        recipient = record.patient
        for p in present:
            if p.id != recipient.id and p.blood != recipient.blood and compatible(p.blood, organ.blood):
                pairs.append((p.id, recipient.id, organ.id))
    return pairs


def index_envy(envier_epts, recipient_epts, kdpi, epsilon=DEFAULT_EPSILON) -> Fraction:
    """|q - s| / (|p - s| + epsilon) for envier EPTS p, recipient EPTS q, KDPI s."""
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    p, q, s = Fraction(envier_epts), Fraction(recipient_epts), Fraction(kdpi)
    return abs(q - s) / (abs(p - s) + epsilon)


@dataclass(frozen=True)
class EnvyBoundReport:
    within_bound: bool
    worst: Fraction
    worst_pair: tuple[str, str, str] | None  # (envier, recipient, organ)

    def __bool__(self):
        return self.within_bound


def bounded_index_envy_check(result: StreamResult, bound=1,
                             config: OrganConfig | None = None) -> EnvyBoundReport:
    """Largest index envy any compatible waiting patient holds towards a recipient."""
    epsilon = (config or OrganConfig()).epsilon
    bound = Fraction(bound)
    worst, worst_pair = Fraction(0), None
    for (organ, _, record), present in zip(result.units, result.snapshots):
        if record is None:
            continue
        q = record.patient.epts
        for p in present:
            if p.id == record.patient_id or not compatible(p.blood, organ.blood):
                continue
            envy = index_envy(p.epts, q, organ.kdpi, epsilon)
            if worst_pair is None or envy > worst:
                worst, worst_pair = envy, (p.id, record.patient_id, organ.id)
    return EnvyBoundReport(worst <= bound, worst, worst_pair)


# --- offline audits -----------------------------------------------------------

class AuditBudgetExceeded(RuntimeError):
    def __init__(self, budget: int):
        super().__init__(f"offline search exceeded budget of {budget} nodes")
        self.budget = budget


def presence(events: Sequence[OrganEvent]) -> list[tuple[Organ, int, tuple[Patient, ...]]]:
    """For each kidney, every patient on the list at that moment had nobody been matched."""
    present: dict[str, Patient] = {}
    position = 0
    out = []
    for ev in _order(events):
        if isinstance(ev, PatientArrival):
            present[ev.patient.id] = Patient(ev.patient.id, ev.patient.blood, ev.patient.epts, position)
            position += 1
        elif isinstance(ev, PatientDeparture):
            present.pop(ev.patient_id, None)
        elif isinstance(ev, OrganArrival):
            for kidney in range(1, ev.organ.kidneys + 1):
                out.append((ev.organ, kidney, tuple(present.values())))
    return out


def _blood_rank(patient: Patient, organ: Organ) -> int:
    return 0 if patient.blood == organ.blood else 1


def _gap(patient: Patient, organ: Organ) -> Fraction:
    return abs(patient.epts - organ.kdpi)


def _find_improvement(result: StreamResult, events: Sequence[OrganEvent], quality, budget: int):
    """Offline reassignment of the matched kidneys, each to a distinct compatible
    present patient, that is no worse on every kidney and better on one."""
    windows = presence(events)
    if len(windows) != len(result.units):
        raise StreamError("events do not match the stream result")
    slots = []
    for (organ, kidney, present), (_, _, record) in zip(windows, result.units):
        if record is None:
            continue
        current = quality(record.patient, organ)
        options = sorted(
            (p for p in present if compatible(p.blood, organ.blood) and quality(p, organ) <= current),
            key=lambda p: quality(p, organ),
        )
        slots.append((organ, current, options))
    if not slots:
        return None
    # can_improve[k]: some slot at index >= k has an option strictly better than its current fit
    can_improve = [False] * (len(slots) + 1)
    for k in range(len(slots) - 1, -1, -1):
        organ, current, options = slots[k]
        can_improve[k] = can_improve[k + 1] or any(quality(p, organ) < current for p in options)
    used: set[str] = set()
    chosen: list[Patient] = []
    visited = 0

    def rec(k: int, strict: bool) -> bool:
        nonlocal visited
        visited += 1
        if visited > budget:
            raise AuditBudgetExceeded(budget)
        if k == len(slots):
            return strict
        if not strict and not can_improve[k]:
            return False
        organ, current, options = slots[k]
        for p in options:
            if p.id in used:
                continue
            used.add(p.id)
            chosen.append(p)
            if rec(k + 1, strict or quality(p, organ) < current):
                return True
            chosen.pop()
            used.discard(p.id)
        return False

    if rec(0, False):
        return [(organ.id, p.id) for (organ, _, _), p in zip(slots, chosen)]
    return None


@dataclass(frozen=True)
class EfficiencyAudit:
    blood_type_efficient: bool
    index_efficient: bool
    blood_witness: list[tuple[str, str]] | None = None
    index_witness: list[tuple[str, str]] | None = None

    def to_json(self) -> dict:
        return {
            "blood_type_efficient": self.blood_type_efficient,
            "index_efficient": self.index_efficient,
            "blood_witness": self.blood_witness,
            "index_witness": self.index_witness,
        }


def efficiency_audit(result: StreamResult, events: Sequence[OrganEvent],
                     budget: int = DEFAULT_AUDIT_BUDGET) -> EfficiencyAudit:
    """Search for offline reassignments that improve blood-type fit (or index gap)
    of matched kidneys without making any kidney's fit worse.

    Witnesses are lists of (organ id, patient id) per matched kidney.
    """
    blood = _find_improvement(result, events, _blood_rank, budget)
    index = _find_improvement(result, events, _gap, budget)
    return EfficiencyAudit(blood is None, index is None, blood, index)


def same_type_available(result: StreamResult) -> bool:
    """Every kidney found a patient of its own blood type on the list when it arrived."""
    return all(
        any(p.blood == organ.blood for p in present)
        for (organ, _, _), present in zip(result.units, result.snapshots)
    )


def is_exact_stream(result: StreamResult) -> bool:
    """Every kidney found a compatible patient with EPTS equal to its KDPI."""
    return all(
        any(compatible(p.blood, organ.blood) and p.epts == organ.kdpi for p in present)
        for (organ, _, _), present in zip(result.units, result.snapshots)
    )


def offline_match_count(events: Sequence[OrganEvent], objective: str) -> int:
    """Maximum number of kidneys that can be matched exactly (by blood type or by index)."""
    graph = nx.Graph()
    units = []
    for k, (organ, kidney, present) in enumerate(presence(events)):
        node = ("unit", k)
        units.append(node)
        graph.add_node(node)
        for p in present:
            if not compatible(p.blood, organ.blood):
                continue
            if objective == "blood" and p.blood == organ.blood or objective == "index" and p.epts == organ.kdpi:
                graph.add_edge(node, ("patient", p.id))
    if graph.number_of_edges() == 0:
        return 0
    matching = nx.bipartite.hopcroft_karp_matching(graph, top_nodes=units)
    return sum(1 for node in units if node in matching)


def competitiveness_audit(result: StreamResult, events: Sequence[OrganEvent], objective: str,
                          check_hypothesis: bool = True) -> CompetitiveReport:
    """Offline exact-match count over the online one.

    ``objective`` is ``"blood"`` or ``"index"``. With ``check_hypothesis`` the
    stream must satisfy the matching assumption (a same-type patient for every
    kidney, resp. an exact-index patient), else :class:`StandingHypothesisError`.
    """
    if objective not in ("blood", "index"):
        raise ValueError(f"objective must be 'blood' or 'index', got {objective!r}")
    if check_hypothesis:
        holds = same_type_available(result) if objective == "blood" else is_exact_stream(result)
        if not holds:
            raise StandingHypothesisError(
                "a kidney arrived with no same-type patient waiting" if objective == "blood"
                else "a kidney arrived with no exact-index compatible patient waiting"
            )
    online = sum(1 for r in result.records if (r.exact_blood if objective == "blood" else r.exact_index))
    offline = offline_match_count(events, objective)
    return CompetitiveReport.build(Fraction(offline), Fraction(online))


# --- I/O ----------------------------------------------------------------------

def parse_event(obj: dict, line: int | None = None) -> OrganEvent:
    where = f" (line {line})" if line is not None else ""
    try:
        t = int(obj["t"])
        kind = obj["ev"]
        if kind == "patient":
            return PatientArrival(t, Patient(str(obj["id"]), BloodType(obj["blood"]), obj["epts"]))
        if kind == "depart":
            return PatientDeparture(t, str(obj["id"]))
        if kind == "organ":
            return OrganArrival(t, Organ(str(obj["id"]), BloodType(obj["blood"]), obj["kdpi"],
                                         int(obj.get("kidneys", 1))))
    except (KeyError, TypeError, ValueError) as exc:
        raise StreamError(f"malformed event{where}: {exc}") from exc
    raise StreamError(f"unknown event kind {kind!r}{where}")


def event_to_json(ev: OrganEvent) -> dict:
    if isinstance(ev, PatientArrival):
        p = ev.patient
        return {"t": ev.t, "ev": "patient", "id": p.id, "blood": p.blood.value, "epts": str(format_rational(p.epts))}
    if isinstance(ev, PatientDeparture):
        return {"t": ev.t, "ev": "depart", "id": ev.patient_id}
    o = ev.organ
    return {"t": ev.t, "ev": "organ", "id": o.id, "blood": o.blood.value,
            "kdpi": str(format_rational(o.kdpi)), "kidneys": o.kidneys}


def validate_stream(events: Sequence[OrganEvent]) -> None:
    """Timestamps non-decreasing and departures refer to patients already on the list."""
    arrived: set[str] = set()
    departed: set[str] = set()
    last = None
    for ev in events:
        if last is not None and ev.t < last:
            raise StreamError(f"timestamps decrease at t={ev.t}")
        last = ev.t
        if isinstance(ev, PatientArrival):
            arrived.add(ev.patient.id)
        elif isinstance(ev, PatientDeparture):
            if ev.patient_id not in arrived or ev.patient_id in departed:
                raise StreamError(f"departure of unknown patient {ev.patient_id!r} at t={ev.t}")
            departed.add(ev.patient_id)


def loads_events(text: str) -> list[OrganEvent]:
    events = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise StreamError(f"line {lineno}: parse failure: {exc.msg}") from exc
        events.append(parse_event(obj, lineno))
    validate_stream(events)
    return events


def load_events(path: str | Path) -> list[OrganEvent]:
    return loads_events(Path(path).read_text())


def dumps_events(events: Iterable[OrganEvent]) -> str:
    return "".join(json.dumps(event_to_json(ev)) + "\n" for ev in events)


CSV_COLUMNS = ("organ_id", "patient_id", "gap", "exact_blood", "exact_index")


def records_to_csv(records: Iterable[MatchRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([r.organ_id, r.patient_id, format_rational(r.gap),
                         str(r.exact_blood).lower(), str(r.exact_index).lower()])
    return buf.getvalue()
