from __future__ import annotations

import json
from pathlib import Path

import pytest

from qfmea.drivetrain import build_drivetrain, driving_situations, hazard_effects
from qfmea.library import load_library
from qfmea.relation import QualDomain, VarRef
from qfmea.signs import SIGN

GOLDEN = Path(__file__).resolve().parent / "golden"

BOOL = QualDomain("Bool", ("0", "1"), (("0", "0"), ("1", "+")))


def var(name: str, domain: QualDomain = SIGN, owner: str = "t") -> VarRef:
    return VarRef(owner, name, domain)


def _effect(cell):
    # The sheets are inconsistent about one or two colons before the marker.
    return cell.lstrip(":")


def sheet_rows(text, lead=0):
    """Cells per line of a result sheet, normalized for quirks of the published ones."""
    rows = []
    for line in text.rstrip("\n").split("\n"):
        cells = line.split("\t")
        # One published row is shifted left and padded with empty cells.
        if lead and cells[0] and all(c == "" for c in cells[3:]):
            cells = [""] * lead + cells[:3]
        rows.append(cells[:-1] + [_effect(cells[-1])])
    return rows


@pytest.fixture(scope="session")
def dt():
    return build_drivetrain()


@pytest.fixture(scope="session")
def situations(dt):
    return driving_situations(dt)


@pytest.fixture(scope="session")
def hazards(dt):
    return hazard_effects(dt)


@pytest.fixture(scope="session")
def situation(situations):
    by_name = {s.name: s for s in situations}
    return by_name.__getitem__


# Two-part toy: a source feeding a sink that records what it sees.
TOY = {
    "domains": [{"name": "Level", "values": ["lo", "mid", "hi"]}],
    "terminal_types": [{"name": "Pipe", "variables": [
        {"name": "lvl", "domain": "Level"}, {"name": "f", "domain": "Sign", "directed": True}]}],
    "component_types": [
        {"name": "Source", "terminals": [{"name": "out", "type": "Pipe", "direction": "out"}],
         "modes": [{"name": "OK", "constraints": [{"op": "eq", "args": ["out.lvl", {"lit": "hi"}]},
                                                 {"op": "eq", "args": ["out.f", {"lit": "-"}]}]},
                   {"name": "Dry", "constraints": [{"op": "eq", "args": ["out.lvl", {"lit": "lo"}]},
                                                  {"op": "eq", "args": ["out.f", {"lit": "0"}]}]}]},
        {"name": "Sink", "terminals": [{"name": "in", "type": "Pipe", "direction": "in"}],
         "vars": [{"name": "seen", "domain": "Level"}],
         "modes": [{"name": "OK", "constraints": [{"op": "eq", "args": ["seen", "in.lvl"]}]}]},
    ],
}


@pytest.fixture(scope="session")
def toy():
    return load_library(json.dumps(TOY))
