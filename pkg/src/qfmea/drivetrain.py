"""The truck drive-train case study: library, structure, driving situations, hazards."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .analysis import EffectDefinition, Scenario
from .composer import SystemStructure
from .files import data_file, load_effects, load_json, load_scenarios, load_structure
from .library import Library, read_library_files

LIBRARY_FILE = "drivetrain_library.json"
STRUCTURE_FILE = "drivetrain_structure.json"
SITUATIONS_FILE = "driving_situations.json"
HAZARDS_FILE = "hazards.json"


@lru_cache(maxsize=8)
def _library(path: Path) -> Library:
    return read_library_files([path])


def drivetrain_library() -> Library:
    return _library(data_file(LIBRARY_FILE))


def build_drivetrain(library: Library | None = None) -> SystemStructure:
    """The bundled drive-train structure (15 instances, acyclic torque chain)."""
    return load_structure(data_file(STRUCTURE_FILE), library or drivetrain_library())


def driving_situations(structure: SystemStructure | None = None) -> list[Scenario]:
    return load_scenarios(data_file(SITUATIONS_FILE), structure or build_drivetrain())


def hazard_effects(structure: SystemStructure | None = None) -> list[EffectDefinition]:
    return load_effects(data_file(HAZARDS_FILE), structure or build_drivetrain())


@dataclass(frozen=True)
class DrivingSituation:
    """One row of the driving-situation table, read back from the data file."""

    name: str
    accelerator: bool
    brake_pedal: bool
    gear: str
    clutch_engaged: bool
    v: str


@dataclass(frozen=True)
class HazardDefinition:
    id: int
    name: str
    driving_situations: tuple[str, ...]
    a: frozenset[str]
    da: str


def situation_table() -> list[DrivingSituation]:
    out = []
    for e in load_json(data_file(SITUATIONS_FILE), "relations.schema.json"):
        a = e["assign"]
        out.append(DrivingSituation(e["name"], a["Driver1.accelerator"] == "1", a["Driver1.brake_pedal"] == "1",
                                    a["Driver1.gear"], a["Driver1.clutch_engaged"] == "1", a["Vehicle1.v"]))
    return out


def hazard_table() -> list[HazardDefinition]:
    out = []
    for e in load_json(data_file(HAZARDS_FILE), "relations.schema.json"):
        a = e["assign"]["Vehicle1.a"]
        out.append(HazardDefinition(e["id"], e["name"], tuple(e["scenarios"]),
                                    frozenset([a] if isinstance(a, str) else a), e["assign"]["Vehicle1.da"]))
    return out
