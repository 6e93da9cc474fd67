from __future__ import annotations

import copy
import json

import pytest

from qfmea.drivetrain import drivetrain_library
from qfmea.errors import ModelError, ParseError
from qfmea.files import data_file
from qfmea.impact import impact_library
from qfmea.library import (OK, TerminalRef, brute_force_mode, compile_mode, connection_relation,
                           load_library, nominal_quiescence)
from qfmea.relation import product_universe, project
from qfmea.signs import sign_add, sign_mul, sign_negate


@pytest.fixture(scope="module")
def lib():
    return drivetrain_library()


@pytest.fixture(scope="module")
def doc():
    return json.loads(data_file("drivetrain_library.json").read_text())


def _records(rel, *names):
    cols = [rel.var((rel.schema[0].owner, n)) for n in names]
    return project(rel, cols).tuples


def test_drivetrain_library_has_fifteen_types(lib):
    assert len(lib) == 15
    assert {"Engine", "Crankshaft", "Clutch", "GearBox", "Retarder", "Wheel", "WheelBrake", "EngineECU",
            "TransmissionECU", "RetarderECU", "BrakeECU", "Load", "Road", "Driver", "Vehicle"} == {
        ct.name for ct in lib}


def test_fault_mode_spellings(lib):
    assert lib["TransmissionECU"].fault_modes == ["MisingClutchCommand"]
    assert lib["GearBox"].fault_modes == ["StuckReverse", "StuckNeutral", "StuckForward"]
    assert lib["Clutch"].fault_modes == ["ClutchStuckOpened", "ClutchStuckClosed"]


@pytest.mark.parametrize("library", [drivetrain_library, impact_library])
def test_compiled_modes_equal_brute_force(library):
    for ct in library():
        for mode in ct.mode_names:
            fast = compile_mode(ct, mode, "X")
            assert fast.tuples <= product_universe(fast.schema).tuples
            assert fast.same_as(brute_force_mode(ct, mode, "X")), (ct.name, mode)


def test_retarder_ok_copies_command_deviation(lib):
    rel = compile_mode(lib["Retarder"], OK, "R")
    assert all(a == b for a, b in _records(rel, "dstate", "ctrl.dcmd"))


def test_retarder_stuck_engaged_deviation_table(lib):
    rel = compile_mode(lib["Retarder"], "RetarderStuckEngaged", "R")
    assert _records(rel, "ctrl.cmd", "ctrl.dcmd", "dstate") == {
        ("1", "0", "0"), ("0", "0", "+"), ("0", "-", "0"), ("1", "+", "+")}


def test_retarder_torque_law(lib):
    # Added braking deviation is -(w * dstate); out torque is read as -right.T.
    rel = compile_mode(lib["Retarder"], OK, "R")
    for dl, w, ds, dr in _records(rel, "left.dT", "left.w", "dstate", "right.dT"):
        assert sign_negate(dr) in sign_add(dl, sign_negate(sign_mul(w, ds)))


def test_open_clutch_passes_no_torque(lib):
    for mode in lib["Clutch"].mode_names:
        rel = compile_mode(lib["Clutch"], mode, "C")
        assert all(t == "0" for s, t in _records(rel, "state", "right.T") if s == "0")


def test_closed_clutch_flips_deviation(lib):
    rel = compile_mode(lib["Clutch"], OK, "C")
    for s, ds, dl, dr in _records(rel, "state", "dstate", "left.dT", "right.dT"):
        if s == "1" and ds == "0":
            assert dr == sign_negate(dl)


def test_worn_brake_law(lib):
    ct = lib["WheelBrake"]
    # Nominally engaged but released: braking reduced, deviation follows the rotation.
    rel = compile_mode(ct, "StuckNotEngaged", "B")
    rows = _records(rel, "nom", "left.w", "left.dT", "right.dT")
    checked = [(w, dr) for nom, w, dl, dr in rows if nom == "1" and w != "0" and dl == "0"]
    assert checked and all(sign_negate(dr) == w for w, dr in checked)
    # Engaged while nominally released: deviation opposes the rotation.
    rel = compile_mode(ct, "StuckEngaged", "B")
    rows = _records(rel, "nom", "left.w", "left.dT", "right.dT")
    checked = [(w, dr) for nom, w, dl, dr in rows if nom == "0" and w != "0" and dl == "0"]
    assert checked and all(dr == w for w, dr in checked)


def test_renaming_only_changes_owners(lib):
    ct = lib["GearBox"]
    a, b = compile_mode(ct, OK, "G1"), compile_mode(ct, OK, "G2")
    assert a.tuples == b.tuples
    assert [v.name for v in a.schema] == [v.name for v in b.schema]
    assert {v.owner for v in b.schema} == {"G2"}


def test_connection_relations(lib):
    shaft = lib["Crankshaft"].terminal("left").type
    cmd = lib["Retarder"].terminal("ctrl").type
    rel = connection_relation(TerminalRef("A", "t", shaft), TerminalRef("B", "t", shaft))
    recs = set(rel.tuples)
    assert len(recs) == 3 * 3 * 3
    for t in recs:
        row = dict(zip((str(v) for v in rel.schema), t))
        assert {row["A.t.T"], row["B.t.T"]} in ({"0"}, {"+", "-"})
        assert row["A.t.w"] == row["B.t.w"]
    sig = connection_relation(TerminalRef("A", "c", cmd), TerminalRef("B", "c", cmd))
    assert project(sig, [sig.var(("A", "c.cmd")), sig.var(("B", "c.cmd"))]).tuples == {("0", "0"), ("1", "1")}
    with pytest.raises(ModelError):
        connection_relation(TerminalRef("A", "t", shaft), TerminalRef("B", "c", cmd))


def test_every_shipped_ok_mode_is_quiescent():
    for library in (drivetrain_library(), impact_library()):
        for ct in library:
            assert nominal_quiescence(ct) == [], ct.name
        assert library.quiescence_violations == []


def test_quiescence_flags_engine_emitting_torque_deviation(doc):
    bad = copy.deepcopy(doc)
    engine = next(c for c in bad["component_types"] if c["name"] == "Engine")
    ok = next(m for m in engine["modes"] if m["name"] == "OK")
    ok["constraints"] = [c for c in ok["constraints"] if "shaft.dT" not in json.dumps(c)]
    ok["constraints"].append({"op": "eq", "args": ["shaft.dT", {"lit": "+"}]})
    lib = load_library(json.dumps(bad))
    assert any("Engine" in m for m in lib.quiescence_violations)


def _minimal(**ct):
    return json.dumps({"domains": [{"name": "Bool", "values": ["0", "1"]}],
                       "component_types": [dict({"name": "T", "vars": [{"name": "s", "domain": "Bool"}]}, **ct)]})


def test_type_error_on_out_of_domain_literal():
    text = _minimal(modes=[{"name": "OK", "constraints": [{"op": "eq", "args": ["s", {"lit": "2"}]}]}])
    with pytest.raises(ModelError, match="not in domain"):
        load_library(text)


def test_ok_mode_required():
    with pytest.raises(ModelError):
        load_library(_minimal(modes=[]))
    with pytest.raises(ModelError):
        load_library(_minimal(modes=[{"name": "Broken"}]))


def test_duplicate_and_unsatisfiable_modes():
    with pytest.raises(ModelError):
        load_library(_minimal(modes=[{"name": "OK"}, {"name": "OK"}]))
    never = {"op": "and", "args": [{"op": "eq", "args": ["s", {"lit": "0"}]},
                                   {"op": "eq", "args": ["s", {"lit": "1"}]}]}
    with pytest.raises(ModelError, match="unsatisfiable"):
        load_library(_minimal(modes=[{"name": "OK"}, {"name": "F", "constraints": [never]}]))


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as err:
        load_library('{\n  "component_types": [\n    {"name": }\n  ]\n}')
    assert err.value.line == 3 and err.value.column > 1


def test_schema_violation_is_reported():
    with pytest.raises(ModelError, match="component_types"):
        load_library(json.dumps({"component_types": [{"name": 3}]}))
