"""``qfmea`` command-line interface."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import drivetrain, impact, oracle, report
from .analysis import Scenario, ok_sanity_check, run_analysis
from .composer import SystemStructure
from .errors import OracleCapExceeded, QfmeaError
from .files import data_file, load_effects, load_scenarios, load_structure
from .library import Library, nominal_quiescence, read_library_files

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION, EXIT_CAP = 0, 2, 3, 4

log = logging.getLogger("qfmea")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qfmea", description="Qualitative FMEA over component models.")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--library", action="append", metavar="F",
                        help="model library file (repeatable; later files may use earlier types)")
    common.add_argument("--structure", metavar="F", help="system structure file")
    common.add_argument("--effects", metavar="F", help="effect definitions (hazards or impacts)")
    common.add_argument("--format", choices=report.FORMATS, default="text")
    common.add_argument("--out", metavar="F", help="write output here instead of stdout")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes")
    common.add_argument("--no-eager-projection", action="store_true",
                        help="compose every variable before projecting (slow, for cross-checks)")
    common.add_argument("-v", "--verbose", action="store_true")

    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("--scenarios", metavar="F", help="scenario (driving situation) file")
    scen.add_argument("--scenario", action="append", metavar="NAME",
                      help="only this scenario; matches name, group or label (repeatable)")

    h = sub.add_parser("hazard", parents=[common, scen], help="hazards from component faults")
    h.add_argument("--strict", action="store_true", help="exit 3 if the nominal system shows an effect")

    for name, text in (("impact", "impacts from hazards"),
                       ("impact-from-faults", "impacts from component faults")):
        i = sub.add_parser(name, parents=[common], help=text)
        i.add_argument("--env-conditions", metavar="F", help="environment-condition file")
        i.add_argument("--scenario", action="append", metavar="NAME", help="only this condition (repeatable)")

    sub.add_parser("check", parents=[common, scen], help="validate models and run the nominal check")

    o = sub.add_parser("oracle", parents=[common, scen], help="compare verdicts with brute-force enumeration")
    o.add_argument("--oracle-cap", type=int, default=oracle.DEFAULT_CAP, metavar="N",
                   help="maximum number of search nodes (default %(default)s)")
    return p


def _library(args, default: Library | None = None) -> Library | None:
    if args.library:
        return read_library_files(args.library)
    return default


def _hazard_setup(args) -> tuple[SystemStructure, list[Scenario], list]:
    lib = _library(args)
    if args.structure:
        s = load_structure(args.structure, lib)
    else:
        s = drivetrain.build_drivetrain(lib)
    scenarios = load_scenarios(args.scenarios or data_file(drivetrain.SITUATIONS_FILE), s)
    if args.scenario:
        wanted = set(args.scenario)
        picked = [sc for sc in scenarios if sc.matches(wanted) or sc.label in wanted]
        known = {x for sc in scenarios for x in (sc.name, sc.group, sc.label) if x}
        unknown = sorted(wanted - known)
        if unknown:
            raise QfmeaError(f"unknown scenario {', '.join(unknown)}")
        scenarios = picked
    effects = load_effects(args.effects or data_file(drivetrain.HAZARDS_FILE), s)
    return s, scenarios, effects


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _warn_inconsistent(rows) -> None:
    for r in rows:
        if r.inconsistent:
            log.warning("%s: %s %s leaves no consistent behavior", r.scenario, r.component, r.fault_mode)


def cmd_hazard(args) -> int:
    s, scenarios, effects = _hazard_setup(args)
    violations = ok_sanity_check(s, scenarios, effects)
    for v in violations:
        print(f"warning: {v}", file=sys.stderr)
    rows = run_analysis(s, scenarios, effects, jobs=args.jobs, eager=not args.no_eager_projection)
    _warn_inconsistent(rows)
    _emit(args, report.render_hazards(rows, scenarios, args.format))
    return EXIT_VIOLATION if violations and args.strict else EXIT_OK


def _impact(args, combined: bool) -> int:
    lib = impact.impact_library()
    if args.library:
        lib = read_library_files(args.library)
    default = impact.FREEWAY_FILE if combined else impact.CONDITIONS_FILE
    conditions = impact.environment_conditions(args.env_conditions or data_file(default))
    if args.scenario:
        wanted = set(args.scenario)
        missing = wanted - {c.name for c in conditions}
        if missing:
            raise QfmeaError(f"unknown environment condition {', '.join(sorted(missing))}")
        conditions = [c for c in conditions if c.name in wanted]
    results = []
    for cond in conditions:
        s = (impact.build_combined if combined else impact.build_environment)(cond.configuration, lib)
        effects = (load_effects(args.effects, s) if args.effects else impact.collision_effects(s))
        sc = impact.condition_scenario(cond, s, combined)
        rows = run_analysis(s, [sc], effects, jobs=args.jobs, eager=not args.no_eager_projection)
        _warn_inconsistent(rows)
        results.append(impact.ImpactResult(cond, rows))
    _emit(args, report.render_impacts(results, args.format))
    return EXIT_OK


def cmd_impact(args) -> int:
    return _impact(args, combined=False)


def cmd_impact_from_faults(args) -> int:
    return _impact(args, combined=True)


def cmd_check(args) -> int:
    s, scenarios, effects = _hazard_setup(args)
    problems = []
    seen = set()
    for _, ct in s.comps:
        if ct.name in seen:
            continue
        seen.add(ct.name)
        problems += [f"quiescence: {m}" for m in nominal_quiescence(ct)]
    problems += [f"sanity: {v}" for v in ok_sanity_check(s, scenarios, effects)]
    lines = [f"{len(s.comps)} components, {len(s.connections)} connections, "
             f"{len(scenarios)} scenarios, {len(effects)} effects"]
    lines += problems
    lines.append(f"{len(problems)} violations")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_VIOLATION if problems else EXIT_OK


def cmd_oracle(args) -> int:
    s, scenarios, effects = _hazard_setup(args)
    engine = run_analysis(s, scenarios, effects, jobs=args.jobs, eager=not args.no_eager_projection)
    reference = oracle.oracle_analysis(s, scenarios, effects, cap=args.oracle_cap)
    diffs = oracle.diff_rows(engine, reference)
    lines = diffs + [f"{len(engine)} rows compared, {len(diffs)} differences"]
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_VIOLATION if diffs else EXIT_OK


COMMANDS = {"hazard": cmd_hazard, "impact": cmd_impact, "impact-from-faults": cmd_impact_from_faults,
            "check": cmd_check, "oracle": cmd_oracle}


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except OracleCapExceeded as exc:
        print(f"qfmea: {exc}", file=sys.stderr)
        return EXIT_CAP
    except QfmeaError as exc:
        print(f"qfmea: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"qfmea: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
