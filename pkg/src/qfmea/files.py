"""Locating and loading the JSON inputs: libraries, structures, scenarios, effects."""

from __future__ import annotations

import os
from importlib import resources
from pathlib import Path
from typing import Sequence

from .analysis import EffectDefinition, Scenario, effect_from_spec, scenario_from_spec
from .composer import SystemStructure
from .errors import ModelError
from .library import Library, parse_json, read_library_files, validate_json

DATA_ENV = "QFMEA_DATA_DIR"


def data_dir() -> Path:
    """Bundled data directory, unless overridden by ``QFMEA_DATA_DIR``."""
    override = os.environ.get(DATA_ENV)
    if override:
        return Path(override)
    return Path(str(resources.files("qfmea.data")))


def data_file(name: str) -> Path:
    return data_dir() / name


def read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelError(f"cannot read {path}: {exc.strerror or exc}") from None


def load_json(path: str | Path, schema: str) -> object:
    doc = parse_json(read_text(path), str(path))
    validate_json(doc, schema, str(path))
    return doc


def load_structure(path: str | Path, library: Library | None = None) -> SystemStructure:
    """Read a structure file; its ``library`` field is resolved relative to the file."""
    path = Path(path)
    doc = load_json(path, "structure.schema.json")
    if library is None:
        libs = doc.get("library")
        if libs is None:
            raise ModelError(f"{path}: no library given")
        if isinstance(libs, str):
            libs = [libs]
        library = read_library_files([path.parent / p for p in libs])
    return structure_from_doc(doc, library, str(path))


def structure_from_doc(doc: dict, library: Library, what: str = "structure") -> SystemStructure:
    comps = []
    for inst in doc["instances"]:
        if inst["type"] not in library:
            raise ModelError(f"{what}: instance {inst['id']!r} has unknown component type {inst['type']!r}")
        ct = library[inst["type"]]
        if inst.get("drop_modes"):
            ct = ct.without_modes(inst["drop_modes"])
        comps.append((inst["id"], ct))
    try:
        return SystemStructure(comps, [tuple(c) for c in doc.get("connections", [])])
    except ModelError as exc:
        raise ModelError(f"{what}: {exc}") from None


def load_scenarios(path: str | Path, structure: SystemStructure) -> list[Scenario]:
    doc = load_json(path, "relations.schema.json")
    scope = structure.scope()
    return [scenario_from_spec(e, scope) for e in doc]


def load_effects(path: str | Path, structure: SystemStructure) -> list[EffectDefinition]:
    doc = load_json(path, "relations.schema.json")
    scope = structure.scope()
    return [effect_from_spec(e, scope) for e in doc]


def load_library(paths: Sequence[str | Path]) -> Library:
    return read_library_files(paths)
