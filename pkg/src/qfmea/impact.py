"""Impact analysis: a qualitative grid around the vehicle, objects placed on it,
and collision effects between the vehicle's impact range and the objects."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

from .analysis import AnalysisRow, EffectDefinition, Scenario, run_analysis
from .composer import SystemStructure
from .drivetrain import LIBRARY_FILE, build_drivetrain, driving_situations
from .errors import ModelError
from .files import data_file, load_effects, load_json
from .library import OK, ComponentType, Library, read_library_files
from .relation import Relation, join

IMPACT_LIBRARY_FILE = "impact_library.json"
EFFECTS_FILE = "collision_effects.json"
CONDITIONS_FILE = "environment_conditions.json"
FREEWAY_FILE = "freeway_exit_braking.json"

SIGMA = ("far-behind", "medium-behind", "close-behind", "0", "close", "medium", "far")
DELTA = ("far-left-of", "medium-left-of", "left-of", "straight", "right-of", "medium-right-of", "far-right-of")
OBJECT_TYPES = ("persons", "object", "standing-vehicle")


@dataclass(frozen=True, order=True)
class GridCell:
    """A cell of the grid: position along the trajectory and distance from it."""

    sigma: str
    delta: str

    def __post_init__(self) -> None:
        if self.sigma not in SIGMA or self.delta not in DELTA:
            raise ValueError(f"no grid cell ({self.sigma}, {self.delta})")

    @classmethod
    def parse(cls, text: str) -> GridCell:
        sigma, _, delta = text.partition("/")
        return cls(sigma, delta)

    def __str__(self) -> str:
        return f"{self.sigma}/{self.delta}"


VEHICLE_START = GridCell("0", "straight")


@lru_cache(maxsize=8)
def _library(dt: Path, imp: Path) -> Library:
    return read_library_files([dt, imp])


def impact_library() -> Library:
    """Drive-train and impact component types in one library."""
    return _library(data_file(LIBRARY_FILE), data_file(IMPACT_LIBRARY_FILE))


@dataclass(frozen=True)
class SpatialConfiguration:
    name: str
    type_name: str
    cells: frozenset[GridCell]
    object_type: str


def _configuration_types(lib: Library) -> list[ComponentType]:
    return [ct for ct in lib if any(t.type.name == "ObjectIF" for t in ct.terminals)
            and not any(t.name == "vehicle" for t in ct.terminals)]


def spatial_configurations(lib: Library | None = None) -> list[SpatialConfiguration]:
    """Object placements, read off the OK relations of the configuration types."""
    lib = lib or impact_library()
    out = []
    for ct in _configuration_types(lib):
        rel = ct.compiled(OK)
        cells = frozenset(GridCell.parse(c) for c in rel.values_of(rel.var(("_", "env.cell"))))
        types = rel.values_of(rel.var(("_", "env.type")))
        if len(types) != 1:
            raise ModelError(f"configuration {ct.name} must fix exactly one object type")
        out.append(SpatialConfiguration(ct.label or ct.name, ct.name, cells, next(iter(types))))
    return out


def spatial_configuration(name: str, lib: Library | None = None) -> SpatialConfiguration:
    for cfg in spatial_configurations(lib):
        if name in (cfg.name, cfg.type_name):
            return cfg
    raise ModelError(f"unknown spatial configuration {name!r}")


def impact_range(v: str, da: str, dsteer: str = "0", curvature: bool = False,
                 lib: Library | None = None) -> frozenset[GridCell]:
    """Cells the vehicle may reach, as stated by the environment model."""
    lib = lib or impact_library()
    rel = lib["Environment"].compiled(OK)
    sel = rel.select(**{"_.vehicle.v": v, "_.vehicle.da": da, "_.vehicle.dsteer": dsteer,
                        "_.road.curvature": "1" if curvature else "0"})
    return frozenset(GridCell.parse(c) for c in sel.values_of(rel.var(("_", "impact"))))


# ---------------------------------------------------------------- conditions

@dataclass(frozen=True)
class EnvironmentCondition:
    name: str
    driving: str
    curves: bool
    configuration: str
    road_label: str | None = None

    @property
    def braking(self) -> bool:
        return "braking" in self.driving.lower()

    @property
    def speed(self) -> str:
        return "++" if "high" in self.driving.lower() else "+"

    @property
    def road(self) -> str:
        return self.road_label or ("Curves" if self.curves else "No Curves")

    @property
    def situation(self) -> str:
        """The driving situation used when the full drive train is composed in."""
        base = "F-brake" if self.braking else "Drive"
        return f"{base} {'high' if self.speed == '++' else 'low'} speed"


def environment_conditions(path: str | Path | None = None) -> list[EnvironmentCondition]:
    doc = load_json(path or data_file(CONDITIONS_FILE), "conditions.schema.json")
    return [EnvironmentCondition(e["name"], e["driving"], e["road"]["curves"], e["configuration"],
                                 e["road"].get("label")) for e in doc]


def freeway_exit_conditions() -> list[EnvironmentCondition]:
    return environment_conditions(data_file(FREEWAY_FILE))


# ---------------------------------------------------------------- structures

_ENV_LINKS = [("Object.env", "Environment.object")]


def build_environment(config: SpatialConfiguration | str, lib: Library | None = None) -> SystemStructure:
    """Vehicle (faults = acceleration deviations), road, object and environment."""
    lib = lib or impact_library()
    if isinstance(config, str):
        config = spatial_configuration(config, lib)
    comps = [("Vehicle", lib["HazardVehicle"]), ("Road", lib["Road"]),
             ("Object", lib[config.type_name]), ("Environment", lib["Environment"])]
    return SystemStructure(comps, [("Vehicle.env", "Environment.vehicle"),
                                   ("Road.env", "Environment.road")] + _ENV_LINKS)


def build_combined(config: SpatialConfiguration | str, lib: Library | None = None) -> SystemStructure:
    """The drive train wired to the environment through its vehicle and road."""
    lib = lib or impact_library()
    if isinstance(config, str):
        config = spatial_configuration(config, lib)
    dt = build_drivetrain(lib)
    for iid, ct in dt.comps:
        # Acceleration-deviation faults stand for component faults; drop any.
        drop = [m for m in ct.fault_modes if m.startswith("deltaa")]
        if drop:
            dt = dt.replaced(iid, ct.without_modes(drop))
    return dt.extended([("Object", lib[config.type_name]), ("Environment", lib["Environment"])],
                       [("Vehicle1.env", "Environment.vehicle"), ("Road1.env", "Environment.road")]
                       + _ENV_LINKS)


def collision_effects(structure: SystemStructure) -> list[EffectDefinition]:
    return load_effects(data_file(EFFECTS_FILE), structure)


def condition_scenario(cond: EnvironmentCondition, structure: SystemStructure,
                       combined: bool = False) -> Scenario:
    curv = "1" if cond.curves else "0"
    if not combined:
        vars_ = [structure.var(n) for n in ("Vehicle.env.v", "Road.curvature", "Road.friction", "Road.slope")]
        rel = Relation(vars_, [(cond.speed, curv, "+", "0")])
        return Scenario(cond.name, rel)
    situations = {s.name: s for s in driving_situations(build_drivetrain(structure_library(structure)))}
    base = situations[cond.situation]
    rel = join(base.relation, Relation([structure.var("Road1.curvature")], [(curv,)]))
    return Scenario(cond.name, rel)


def structure_library(structure: SystemStructure) -> Library:
    lib = Library()
    for _, ct in structure.comps:
        if ct.name not in lib:
            lib.add_component_type(ct)
    return lib


@dataclass(frozen=True)
class ImpactResult:
    condition: EnvironmentCondition
    rows: list[AnalysisRow]


def run_impact_analysis(conditions: Sequence[EnvironmentCondition], combined: bool = False,
                        jobs: int = 1, eager: bool = True,
                        lib: Library | None = None) -> list[ImpactResult]:
    """Impacts from hazards (``combined=False``) or directly from component faults."""
    lib = lib or impact_library()
    out = []
    for cond in conditions:
        s = (build_combined if combined else build_environment)(cond.configuration, lib)
        sc = condition_scenario(cond, s, combined)
        out.append(ImpactResult(cond, run_analysis(s, [sc], collision_effects(s), jobs=jobs, eager=eager)))
    return out
