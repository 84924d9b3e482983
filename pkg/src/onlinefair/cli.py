"""Command-line entry point.

Exit codes: 0 success, 1 the audit found violations, 2 usage or input error,
3 a search budget ran out before a verdict was reached.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .axioms import (
    egalitarian_competitive_ratio,
    egalitarian_welfare,
    envy_free_ex_post,
    find_dominator,
)
from .core import InstanceError, dumps_instance, ex_post_utilities, format_rational, load_instance
from .generators import DEFAULT_BLOOD_MIX, ProfileSpec, generate_foodbank, generate_organ_stream
from .mechanisms import (
    DEFAULT_BUDGET,
    EnumerationTooLarge,
    MechanismKind,
    ante_probabilities,
    enumerate_distribution,
    expected_utilities,
    sample_allocation,
)
from .organs import (
    AuditBudgetExceeded,
    Mechanism,
    OrganConfig,
    StandingHypothesisError,
    StreamError,
    blood_type_envy_pairs,
    bounded_index_envy_check,
    competitiveness_audit,
    dumps_events,
    efficiency_audit,
    load_events,
    records_to_csv,
    run_stream,
)
from .reductions import (
    ReductionError,
    load_graph,
    load_sat,
    matching_to_instance,
    sat_to_instance,
)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
TOOL = "onlinefair"


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None
    return value


def _config(args) -> dict:
    skip = {"func", "figures", "out", "marked"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, Fraction):
            value = str(format_rational(value))
        out[key] = value
    return out


def _header(args) -> dict:
    return {"tool": TOOL, "version": __version__, "config": _config(args)}


def _dump(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {path}")
    return p


def _figure_dir(args) -> Path | None:
    if not getattr(args, "figures", None):
        return None
    d = Path(args.figures)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _food_mechanism(args) -> MechanismKind:
    try:
        return MechanismKind.parse(args.mechanism)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _organ_mechanism(args) -> Mechanism:
    try:
        return Mechanism.parse(args.mechanism)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _ratio(value: Fraction) -> str:
    return str(format_rational(value))


# --- simulate -------------------------------------------------------------------

def cmd_simulate(args) -> int:
    path = _existing(args.input)
    if args.model == "foodbank":
        instance = load_instance(path)
        kind = _food_mechanism(args)
        alloc = sample_allocation(kind, instance, args.seed)
        report = _header(args)
        report["allocation"] = alloc.to_json(instance)
        report["unallocated"] = [instance.items[j] for j in alloc.unallocated]
        report["utilities"] = {a: format_rational(u) for a, u in zip(instance.agents, ex_post_utilities(instance, alloc))}
        _emit(args, _dump(report))
        return EXIT_OK
    events = load_events(path)
    config = OrganConfig(_organ_mechanism(args), args.epsilon)
    result = run_stream(events, config)
    if args.format == "json":
        report = _header(args)
        report["matches"] = [
            {"organ_id": r.organ_id, "patient_id": r.patient_id, "gap": _ratio(r.gap),
             "exact_blood": r.exact_blood, "exact_index": r.exact_index} for r in result.records
        ]
        report["unmatched"] = [f"{o.id}#{k}" for o, k in result.unmatched]
        report["waiting"] = [p.id for p in result.waiting]
        _emit(args, _dump(report))
    else:
        _emit(args, "# " + json.dumps(_header(args)) + "\n" + records_to_csv(result.records))
    figs = _figure_dir(args)
    if figs:
        from .plotting import plot_blood_mix, plot_match_gaps
        plot_match_gaps(result.records, figs / "match_gaps.png")
        plot_blood_mix(result.records, figs / "blood_mix.png")
    return EXIT_OK


# --- distribution ---------------------------------------------------------------

def cmd_distribution(args) -> int:
    instance = load_instance(_existing(args.input))
    kind = _food_mechanism(args)
    dist = enumerate_distribution(kind, instance, args.budget)
    report = _header(args)
    report["support_size"] = len(dist)
    report["distribution"] = dist.to_json(instance)
    _emit(args, _dump(report))
    figs = _figure_dir(args)
    if figs:
        from .mechanisms import ante_matrix
        from .plotting import plot_ante_matrix
        plot_ante_matrix(ante_matrix(dist, instance), instance, figs / "ante_matrix.png")
    return EXIT_OK


# --- audit ----------------------------------------------------------------------

FOOD_CHECKS = ("ante", "efficiency", "envy", "competitive")
ORGAN_CHECKS = ("envy", "efficiency", "competitive")


def _checks(args, allowed) -> list[str]:
    if not args.checks:
        return list(allowed)
    chosen = [c.strip() for c in args.checks.split(",") if c.strip()]
    bad = [c for c in chosen if c not in allowed]
    if bad:
        raise UsageError(f"unknown checks {bad}; choose from {list(allowed)}")
    return chosen


def _audit_foodbank(args, report: dict) -> tuple[int, list[str]]:
    instance = load_instance(_existing(args.input))
    kind = _food_mechanism(args)
    checks = _checks(args, FOOD_CHECKS)
    violations = []
    lines = []
    figs = _figure_dir(args)

    if "ante" in checks or args.prob:
        ante = ante_probabilities(kind, instance, args.budget)
        expected = expected_utilities(ante, instance)
        report["ante"] = ante.to_json(instance)
        report["expected_utilities"] = {a: format_rational(v) for a, v in zip(instance.agents, expected)}
        report["egalitarian_welfare"] = format_rational(egalitarian_welfare(expected)) if instance.n else None
        probs = {}
        for query in args.prob or []:
            agent, _, item = query.partition(":")
            try:
                p = ante[instance.agent_index(agent), instance.item_index(item)]
            except KeyError as exc:
                raise UsageError(str(exc)) from None
            probs[query] = _ratio(p)
            lines.append(f"P({agent} <- {item}) = {_ratio(p)}")
        if probs:
            report["probabilities"] = probs
        if figs:
            from .plotting import plot_ante_matrix, plot_expected_utilities
            plot_ante_matrix(ante, instance, figs / "ante_matrix.png")
            plot_expected_utilities(expected, instance, figs / "expected_utilities.png")

    if "efficiency" in checks or "envy" in checks:
        dist = enumerate_distribution(kind, instance, args.budget)
        if "efficiency" in checks:
            entry = {"ex_post_efficient": True, "checked": len(dist)}
            for alloc, p in dist:
                witness = find_dominator(instance, alloc, args.budget)
                if witness is not None:
                    entry = {"ex_post_efficient": False, "allocation": alloc.to_json(instance),
                             "probability": _ratio(p), "dominated_by": witness.to_json(instance)}
                    violations.append("ex post efficiency")
                    break
            report["efficiency"] = entry
            lines.append(f"ex post efficient: {entry['ex_post_efficient']}")
        if "envy" in checks:
            free = Fraction(0)
            example = None
            for alloc, p in dist:
                envy = envy_free_ex_post(instance, alloc)
                if envy.envy_free:
                    free += p
                elif example is None:
                    example = {"allocation": alloc.to_json(instance),
                               "pairs": [[instance.agents[i], instance.agents[k]] for i, k in envy.pairs]}
            report["envy"] = {"probability_envy_free": _ratio(free), "example": example}
            lines.append(f"P(envy-free ex post) = {_ratio(free)}")

    if "competitive" in checks:
        comp = egalitarian_competitive_ratio(kind, instance, args.budget)
        report["competitive"] = comp.to_json()
        lines.append(f"egalitarian competitive ratio = {comp.to_json()['ratio']}")
    return (EXIT_VIOLATION if violations else EXIT_OK), lines


def _audit_organs(args, report: dict) -> tuple[int, list[str]]:
    events = load_events(_existing(args.input))
    config = OrganConfig(_organ_mechanism(args), args.epsilon)
    checks = _checks(args, ORGAN_CHECKS)
    result = run_stream(events, config)
    violations, lines = [], []
    report["matches"] = len(result.records)
    if "envy" in checks:
        pairs = blood_type_envy_pairs(result)
        bound = bounded_index_envy_check(result, args.bound, config)
        report["blood_type_envy_pairs"] = [list(p) for p in pairs]
        report["index_envy"] = {"bound": _ratio(args.bound), "max": _ratio(bound.worst),
                                "within_bound": bound.within_bound,
                                "worst_pair": list(bound.worst_pair) if bound.worst_pair else None}
        lines.append(f"blood-type envy pairs: {len(pairs)}")
        lines.append(f"max index envy = {_ratio(bound.worst)} (bound {_ratio(args.bound)})")
        if pairs:
            violations.append("blood type envy")
        if not bound.within_bound:
            violations.append("index envy bound")
    if "efficiency" in checks:
        audit = efficiency_audit(result, events, args.budget)
        report["efficiency"] = audit.to_json()
        lines.append(f"blood type efficient: {audit.blood_type_efficient}; index efficient: {audit.index_efficient}")
        if not audit.blood_type_efficient:
            violations.append("blood type efficiency")
        if not audit.index_efficient:
            violations.append("index efficiency")
    if "competitive" in checks:
        comp = {}
        for objective in ("blood", "index"):
            try:
                rep = competitiveness_audit(result, events, objective)
                comp[objective] = rep.to_json()
                lines.append(f"{objective} competitive ratio = {comp[objective]['ratio']}")
            except StandingHypothesisError as exc:
                comp[objective] = {"status": "hypothesis_failed", "reason": str(exc)}
                lines.append(f"{objective} competitive ratio: not reported ({exc})")
        report["competitive"] = comp
    figs = _figure_dir(args)
    if figs:
        from .plotting import plot_blood_mix, plot_match_gaps
        plot_match_gaps(result.records, figs / "match_gaps.png")
        plot_blood_mix(result.records, figs / "blood_mix.png")
    report["violations"] = violations
    return (EXIT_VIOLATION if violations else EXIT_OK), lines


def cmd_audit(args) -> int:
    report = _header(args)
    try:
        if args.model == "foodbank":
            code, lines = _audit_foodbank(args, report)
        else:
            code, lines = _audit_organs(args, report)
    except (EnumerationTooLarge, AuditBudgetExceeded) as exc:
        report["status"] = "budget_exceeded"
        report["reason"] = str(exc)
        _emit(args, _dump(report))
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    report["status"] = "violations" if code == EXIT_VIOLATION else "ok"
    _emit(args, _dump(report))
    for line in lines:
        print(line, file=sys.stderr if not args.out else sys.stdout)
    return code


# --- reduce ---------------------------------------------------------------------

def cmd_reduce(args) -> int:
    path = _existing(args.input)
    if args.kind == "sat":
        instance, marked = sat_to_instance(load_sat(path))
        _emit(args, dumps_instance(instance))
        marked_path = args.marked or (str(Path(args.out).with_suffix(".marked.json")) if args.out else None)
        if marked_path:
            Path(marked_path).write_text(_dump({"assignment": marked.to_json(instance)}))
    else:
        instance = matching_to_instance(load_graph(path))
        _emit(args, dumps_instance(instance))
    return EXIT_OK


# --- gen ------------------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.target == "foodbank":
        try:
            spec = ProfileSpec(args.profile, args.n, args.m, args.seed, args.p, args.correlation)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        _emit(args, dumps_instance(generate_foodbank(spec)))
    else:
        try:
            events = generate_organ_stream(args.patients, args.organs, args.mix, args.exact_fraction, args.seed,
                                           departure_prob=args.departure_prob, double_prob=args.double_prob)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        _emit(args, dumps_events(events))
    return EXIT_OK


# --- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                        help=f"search/enumeration node budget (default {DEFAULT_BUDGET})")
    common.add_argument("--epsilon", type=_rational, default=Fraction(1, 10**9),
                        help="index-envy denominator guard, exact rational (default 1/1000000000)")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="report format; organ match reports default to csv, everything else is json")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    parser = argparse.ArgumentParser(prog=TOOL, description="Online fair division: mechanisms, audits, reductions.")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a mechanism once")
    p.add_argument("--model", choices=("foodbank", "organs"), required=True)
    p.add_argument("--mechanism", required=True, help="like | balanced-like | hard | soft")
    p.add_argument("--figures", default=None, help="directory for PNG figures (organ runs)")
    p.add_argument("input")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("distribution", parents=[common], help="exact distribution over allocations")
    p.add_argument("--mechanism", required=True, help="like | balanced-like")
    p.add_argument("--figures", default=None, help="directory for PNG figures")
    p.add_argument("input")
    p.set_defaults(func=cmd_distribution)

    p = sub.add_parser("audit", parents=[common], help="check axioms and competitiveness")
    p.add_argument("--model", choices=("foodbank", "organs"), required=True)
    p.add_argument("--mechanism", required=True)
    p.add_argument("--checks", default=None,
                   help=f"comma list; foodbank: {','.join(FOOD_CHECKS)}; organs: {','.join(ORGAN_CHECKS)}")
    p.add_argument("--prob", action="append", metavar="AGENT:ITEM",
                   help="print the ante probability of AGENT receiving ITEM (repeatable)")
    p.add_argument("--bound", type=_rational, default=Fraction(1), help="index envy bound (default 1)")
    p.add_argument("--figures", default=None, help="directory for PNG figures")
    p.add_argument("input")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("reduce", parents=[common], help="build a hardness-construction instance")
    p.add_argument("kind", choices=("sat", "matching"))
    p.add_argument("input")
    p.add_argument("--marked", default=None, help="where to write the empty-interpretation allocation (sat)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("gen", help="generate synthetic inputs")
    gsub = p.add_subparsers(dest="target", required=True)
    g = gsub.add_parser("foodbank", parents=[common])
    g.add_argument("--profile", choices=("uniform", "correlated", "borda"), default="uniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--correlation", type=float, default=0.0)
    g.set_defaults(func=cmd_gen)
    g = gsub.add_parser("organs", parents=[common])
    g.add_argument("--patients", type=int, required=True)
    g.add_argument("--organs", type=int, required=True)
    g.add_argument("--mix", type=float, nargs=4, default=list(DEFAULT_BLOOD_MIX), metavar=("O", "A", "B", "AB"))
    g.add_argument("--exact-fraction", type=float, default=0.0)
    g.add_argument("--departure-prob", type=float, default=0.05)
    g.add_argument("--double-prob", type=float, default=0.5)
    g.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "model", None) == "organs" and args.command == "simulate" and args.format is None:
        args.format = "csv"
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EnumerationTooLarge as exc:
        print(f"{TOOL}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InstanceError, StreamError, ReductionError, ValueError) as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
