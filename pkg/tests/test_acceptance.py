"""End-to-end acceptance checks, one per criterion, each printing PASS or FAIL."""

from __future__ import annotations

import json
import subprocess
import sys
import time

import pytest

import test_relation
import test_signs
from qfmea.analysis import interface_relation, ok_sanity_check, required_software_output, run_analysis, \
    satisfies, sensor_projection
from qfmea.cli import EXIT_OK, main
from qfmea.composer import compose, nominal_assignment
from qfmea.drivetrain import build_drivetrain, driving_situations, hazard_effects
from qfmea.oracle import diff_rows, oracle_analysis
from qfmea.relation import Relation, Verdict

from conftest import GOLDEN, sheet_rows


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return report


def cli(capsys, *argv):
    code = main(list(argv))
    out, _ = capsys.readouterr()
    return code, out


def _sheet_mismatches(out, golden, lead=0):
    got, expected = sheet_rows(out, lead), sheet_rows((GOLDEN / golden).read_text(), lead)
    bad = [i for i, (g, e) in enumerate(zip(got, expected)) if g != e]
    return bad + ([f"length {len(got)} != {len(expected)}"] if len(got) != len(expected) else [])


def _grouped_rows_are_possible(rows):
    # In the published hazard sheets a multi-effect fault is a possible group,
    # every single effect row is definite.
    by_fault = {}
    for r in rows:
        by_fault.setdefault((r.scenario, r.component, r.fault_mode), []).append(r)
    for rs in by_fault.values():
        if rs[0].effect is None:
            continue
        want = Verdict.POSSIBLE if len(rs) > 1 else Verdict.DEFINITE
        if any(r.verdict is not want for r in rs):
            return False
    return True


def _hazard_criterion(capsys, dt, situations, hazards, scenario, golden):
    # Both speeds of a situation must reproduce the same published sheet.
    picked = [sc for sc in situations if sc.matches([scenario])]
    bad = []
    for sc in picked:
        code, out = cli(capsys, "hazard", "--scenario", sc.name)
        bad += [f"{sc.name}: exit {code}"] if code != EXIT_OK else [
            f"{sc.name}: row {m}" for m in _sheet_mismatches(out, golden)]
    return bad, run_analysis(dt, picked, hazards)


def test_criterion_1_fstart_sheet(capsys, verdict, dt, situations, hazards):
    bad, rows = _hazard_criterion(capsys, dt, situations, hazards, "F-start", "fstart.tsv")
    clutch = next(r for r in rows if (r.component, r.fault_mode) == ("Clutch1", "ClutchStuckOpened"))
    ok = (not bad and _grouped_rows_are_possible(rows) and clutch.verdict is Verdict.DEFINITE
          and len({(r.component, r.fault_mode) for r in rows}) == 17)
    verdict(1, ok, f"F-start sheet, {len(rows)} rows, mismatches {bad}")


def test_criterion_2_fbrake_sheet(capsys, verdict, dt, situations, hazards):
    bad, rows = _hazard_criterion(capsys, dt, situations, hazards, "F-brake", "fbrake.tsv")
    reverse = {r.effect: r.verdict for r in rows
               if (r.scenario, r.component, r.fault_mode) == ("F-brake high speed", "GearBox1", "StuckReverse")}
    ok = (not bad and _grouped_rows_are_possible(rows) and reverse == {
        "Reduced_or_no_deceleration": Verdict.POSSIBLE, "Unintended_acceleration": Verdict.POSSIBLE})
    verdict(2, ok, f"F-brake sheets (both speeds), mismatches {bad}")


def test_criterion_3_drive_sheet(capsys, verdict, dt, situations, hazards):
    bad, rows = _hazard_criterion(capsys, dt, situations, hazards, "Drive", "drive.tsv")
    pairs = {("Retarder1", "RetarderStuckEngaged"), ("Brakes1", "StuckEngaged"),
             ("BrakesECU1", "UntimelyCommand"), ("RetarderECU1", "UntimelyCommand")}
    groups = {}
    for r in rows:
        if (r.component, r.fault_mode) in pairs:
            groups.setdefault((r.scenario, r.component, r.fault_mode), set()).add((r.effect, r.verdict))
    want = {("Reduced_or_no_acceleration", Verdict.POSSIBLE), ("Unintended_deceleration", Verdict.POSSIBLE)}
    ok = not bad and _grouped_rows_are_possible(rows) and len(groups) == 8 and all(
        g == want for g in groups.values())
    verdict(3, ok, f"Drive sheets (both speeds), mismatches {bad}")


def test_criterion_4_impacts_of_hazards(capsys, verdict):
    code, out = cli(capsys, "impact")
    bad = _sheet_mismatches(out, "impact_hazards.tsv", lead=4) if code == EXIT_OK else [f"exit {code}"]
    _, csv_out = cli(capsys, "impact", "--format", "csv")
    minus = [line for line in csv_out.splitlines() if ",deltaaminus," in line]
    ok = not bad and len(minus) == 9 and all(">>no system level effects<<" in line for line in minus)
    verdict(4, ok, f"9 conditions x 2 faults, mismatches {bad}")


def test_criterion_5_impacts_of_faults(capsys, verdict):
    code, out = cli(capsys, "impact-from-faults")
    bad = _sheet_mismatches(out, "impact_faults.tsv", lead=4) if code == EXIT_OK else [f"exit {code}"]
    verdict(5, not bad, f"freeway exit, 17 faults, mismatches {bad}")


def test_criterion_6_soundness(capsys, verdict, dt, situations, hazards):
    code, out = cli(capsys, "check")
    started = time.perf_counter()
    engine = run_analysis(dt, situations, hazards)
    reference = oracle_analysis(dt, situations, hazards, cap=None)
    diffs = diff_rows(engine, reference)
    took = time.perf_counter() - started
    ok = code == EXIT_OK and out.endswith("0 violations\n") and not diffs
    verdict(6, ok, f"check: {out.splitlines()[-1]}; oracle: {len(engine)} rows, {len(diffs)} differences "
                   f"in {took:.0f} s")


TIMING = """
import json, time
t0 = time.perf_counter()
from qfmea.drivetrain import build_drivetrain, driving_situations, hazard_effects
from qfmea.analysis import run_analysis
s = build_drivetrain(); sc = driving_situations(s); hz = hazard_effects(s)
t1 = time.perf_counter()
rows = run_analysis(s, sc, hz)
t2 = time.perf_counter()
print(json.dumps({"load": t1 - t0, "analysis": t2 - t1, "rows": len(rows)}))
"""


def test_criterion_7_runtime(verdict):
    # A fresh interpreter, so no compiled mode or join plan is cached.
    runs = [json.loads(subprocess.run([sys.executable, "-c", TIMING], capture_output=True, text=True,
                                      check=True).stdout) for _ in range(3)]
    best = min(runs, key=lambda r: r["analysis"])
    ok = best["analysis"] < 1.0
    verdict(7, ok, f"9 situations x 17 faults x 13 hazards in {best['analysis']:.2f} s "
                   f"(plus {best['load']:.2f} s import and model loading), {best['rows']} rows")


def test_criterion_8_properties(capsys, verdict, dt, situations, hazards):
    failures = []
    for fn in (test_relation.test_join_and_project_match_brute_force,
               test_relation.test_classify_trichotomy,
               test_signs.test_add_is_interval_sum, test_signs.test_add_laws, test_signs.test_mul_laws,
               test_signs.test_add_many_matches_pairwise_fold):
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report every property, not just the first
            failures.append(f"{fn.__name__}: {exc}")
    _, one = cli(capsys, "hazard")
    _, four = cli(capsys, "hazard", "--jobs", "4")
    if one != four:
        failures.append("--jobs output differs")
    da = dt.var("Vehicle1.da")
    for sc in situations:
        if compose(dt, nominal_assignment(dt), sc.relation, keep=[da]).rows() != [("0",)]:
            failures.append(f"nominal deviation in {sc.name}")
    verdict(8, not failures, "relation oracle (1000 cases), sign laws, trichotomy, --jobs, quiescence"
            + (f": {failures}" if failures else ""))


def test_criterion_9_back_propagation(verdict, dt, situation):
    ps = dt.without(["BrakesECU1"])
    physical = compose(ps, nominal_assignment(ps))
    sc = situation("F-brake high speed")
    inputs = [ps.var("Driver1.brake.value")]
    outputs = [ps.var("Brakes1.ctrl.cmd"), ps.var("Brakes1.ctrl.dcmd")]
    required = required_software_output(Relation([ps.var("Vehicle1.da")], [("0",)]), physical, sc, outputs)
    sensed = sensor_projection(physical, sc, inputs)
    shipped_ok = satisfies(interface_relation(dt, "BrakesECU1"), sensed, required)
    untimely = Relation(inputs + outputs, [("0", "1", "+"), ("1", "1", "+")])
    mutated_fails = not satisfies(untimely, sensed, required)
    ok = not required.is_empty() and shipped_ok and mutated_fails
    verdict(9, ok, f"required brake outputs {required.rows()}, shipped ECU ok={shipped_ok}, "
                   f"mutated ECU rejected={mutated_fails}")


def test_shipped_models_are_consistent():
    # Guard for the criteria above: the bundled data loads from scratch.
    s = build_drivetrain()
    assert ok_sanity_check(s, driving_situations(s), hazard_effects(s)) == []
