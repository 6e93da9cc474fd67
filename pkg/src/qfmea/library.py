"""Reusable component types and the loader for model-library files.

A library file declares domains, terminal types and component types.  Each
component type owns terminals, local variables and behavior modes; a mode is
a list of constraints that is compiled, on first use, into an extensional
relation over the type's variables.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

import jsonschema

from .constraints import Constraint, TypeCheckError, check, parse_constraint
from .errors import ModelError, ParseError
from .relation import VAR_KINDS, QualDomain, Relation, VarRef, join, product_universe
from .signs import SIGN, SIGNS, sign_negate

log = logging.getLogger(__name__)

OK = "OK"
_PLACEHOLDER = "_"


@dataclass(frozen=True)
class TerminalVar:
    name: str
    domain: QualDomain
    directed: bool = False
    deviation: bool = False


@dataclass(frozen=True)
class TerminalType:
    name: str
    variables: tuple[TerminalVar, ...]


@dataclass(frozen=True)
class Terminal:
    name: str
    type: TerminalType
    direction: str = "none"  # "in" | "out" | "none"; used by the quiescence check


@dataclass(frozen=True)
class LocalVar:
    name: str
    domain: QualDomain
    kind: str = "state"


@dataclass(frozen=True)
class BehaviorMode:
    name: str
    constraints: tuple[Constraint, ...]


@dataclass(eq=False)
class ComponentType:
    """A reusable component model: terminals, variables and behavior modes."""

    name: str
    terminals: tuple[Terminal, ...]
    local_vars: tuple[LocalVar, ...]
    modes: tuple[BehaviorMode, ...]
    common: tuple[Constraint, ...] = ()
    label: str | None = None
    _cache: dict[str, Relation] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._validate()

    def _validate(self) -> None:
        names = [m.name for m in self.modes]
        if not names:
            raise ModelError(f"component type {self.name}: no behavior modes (an OK mode is required)")
        if len(set(names)) != len(names):
            raise ModelError(f"component type {self.name}: duplicate mode names")
        if names.count(OK) != 1:
            raise ModelError(f"component type {self.name}: exactly one mode must be named OK")
        tnames = [t.name for t in self.terminals]
        if len(set(tnames)) != len(tnames):
            raise ModelError(f"component type {self.name}: duplicate terminal names")
        vnames = [v[0] for v in self.var_specs()]
        if len(set(vnames)) != len(vnames):
            raise ModelError(f"component type {self.name}: duplicate variable names")
        for v in self.local_vars:
            if "." in v.name:
                raise ModelError(f"component type {self.name}: local variable {v.name!r} contains '.'")
            if v.kind not in VAR_KINDS:
                raise ModelError(f"component type {self.name}: unknown variable kind {v.kind!r}")
        scope = self.scope()
        check(self.common, scope, f"{self.name} (common)")
        for mode in self.modes:
            check(mode.constraints, scope, f"{self.name}/{mode.name}")

    def var_specs(self) -> list[tuple[str, QualDomain, str]]:
        """(name, domain, kind) of every variable: locals first, then terminal variables."""
        out = [(v.name, v.domain, v.kind) for v in self.local_vars]
        for t in self.terminals:
            for tv in t.type.variables:
                out.append((f"{t.name}.{tv.name}", tv.domain,
                            "deviation" if tv.deviation else "terminal-variable"))
        return out

    def scope(self) -> dict[str, QualDomain]:
        return {name: dom for name, dom, _ in self.var_specs()}

    def variables(self, instance: str) -> list[VarRef]:
        return [VarRef(instance, name, dom, kind) for name, dom, kind in self.var_specs()]

    def mode(self, name: str) -> BehaviorMode:
        for m in self.modes:
            if m.name == name:
                return m
        raise ModelError(f"component type {self.name} has no mode {name!r}")

    @property
    def mode_names(self) -> list[str]:
        return [m.name for m in self.modes]

    @property
    def fault_modes(self) -> list[str]:
        return [m.name for m in self.modes if m.name != OK]

    def terminal(self, name: str) -> Terminal:
        for t in self.terminals:
            if t.name == name:
                return t
        raise ModelError(f"component type {self.name} has no terminal {name!r}")

    def constraints_of(self, mode: str) -> tuple[Constraint, ...]:
        return self.common + self.mode(mode).constraints

    def without_modes(self, drop: Iterable[str]) -> ComponentType:
        drop = set(drop)
        if OK in drop:
            raise ModelError("the OK mode cannot be removed")
        return ComponentType(self.name, self.terminals, self.local_vars,
                             tuple(m for m in self.modes if m.name not in drop),
                             self.common, self.label)

    def with_mode(self, mode: BehaviorMode) -> ComponentType:
        """Copy with ``mode`` replacing the mode of the same name (or appended)."""
        modes = [mode if m.name == mode.name else m for m in self.modes]
        if mode.name not in self.mode_names:
            modes.append(mode)
        return ComponentType(self.name, self.terminals, self.local_vars, tuple(modes),
                             self.common, self.label)

    def compiled(self, mode: str) -> Relation:
        rel = self._cache.get(mode)
        if rel is None:
            rel = _compile(self, mode)
            self._cache[mode] = rel
        return rel

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = dict(self._cache)
        return state

    def __repr__(self) -> str:
        return f"ComponentType({self.name}, modes={self.mode_names})"


def _constraint_relation(c: Constraint, fn, variables: Sequence[VarRef]) -> Relation:
    names = [v.name for v in variables]
    rows = []
    for values in itertools.product(*(v.domain.values for v in variables)):
        if fn(dict(zip(names, values))):
            rows.append(values)
    return Relation._raw(tuple(variables), frozenset(rows))


def _compile(ct: ComponentType, mode: str) -> Relation:
    all_vars = ct.variables(_PLACEHOLDER)
    by_name = {v.name: v for v in all_vars}
    order = {v.name: i for i, v in enumerate(all_vars)}
    constraints = ct.constraints_of(mode)
    fns = check(constraints, ct.scope(), f"{ct.name}/{mode}")
    pending = []
    for c, fn in zip(constraints, fns):
        vs = sorted(c.variables(), key=order.__getitem__)
        if not vs:
            if not fn({}):
                return Relation._raw(tuple(all_vars), frozenset())
            continue
        pending.append(_constraint_relation(c, fn, [by_name[n] for n in vs]))
    mentioned = {v.key for r in pending for v in r.schema}
    for v in all_vars:
        if v.key not in mentioned:
            pending.append(product_universe([v]))
    # Smallest first, then greedily whichever shares most variables with the result.
    pending.sort(key=len)
    acc = pending.pop(0)
    while pending:
        best = max(range(len(pending)),
                   key=lambda i: (len(set(acc.positions) & set(pending[i].positions)), -len(pending[i])))
        acc = join(acc, pending.pop(best))
        if acc.is_empty():
            break
    if acc.is_empty():
        return Relation._raw(tuple(all_vars), frozenset())
    return acc.reorder(all_vars)


def compile_mode(ct: ComponentType, mode: str, instance: str) -> Relation:
    """Tuples over the instance's variables that satisfy every constraint of ``mode``."""
    ct.mode(mode)
    return ct.compiled(mode).rename_owner(instance)


def brute_force_mode(ct: ComponentType, mode: str, instance: str) -> Relation:
    """Reference implementation: filter the full product of the type's variables."""
    variables = ct.variables(instance)
    names = [v.name for v in variables]
    fns = check(ct.constraints_of(mode), ct.scope(), f"{ct.name}/{mode}")
    rows = []
    for values in itertools.product(*(v.domain.values for v in variables)):
        env = dict(zip(names, values))
        if all(f(env) for f in fns):
            rows.append(values)
    return Relation(variables, rows)


# ---------------------------------------------------------------- connections

@dataclass(frozen=True)
class TerminalRef:
    instance: str
    terminal: str
    type: TerminalType

    def var(self, tv: TerminalVar) -> VarRef:
        return VarRef(self.instance, f"{self.terminal}.{tv.name}", tv.domain,
                      "deviation" if tv.deviation else "terminal-variable")

    def __str__(self) -> str:
        return f"{self.instance}.{self.terminal}"


def connection_relations(a: TerminalRef, b: TerminalRef) -> list[Relation]:
    """One binary relation per variable pair of two connected terminals.

    Undirected variables are equal across the connection; directed ones
    (torque and its deviation) change sign.
    """
    if a.type != b.type:
        raise ModelError(f"cannot connect {a} ({a.type.name}) with {b} ({b.type.name})")
    out = []
    for tv in a.type.variables:
        va, vb = a.var(tv), b.var(tv)
        if tv.directed:
            rows = [(x, sign_negate(x)) for x in SIGNS]
        else:
            rows = [(x, x) for x in tv.domain.values]
        out.append(Relation._raw((va, vb), frozenset(rows)))
    return out


def connection_relation(a: TerminalRef, b: TerminalRef) -> Relation:
    rels = connection_relations(a, b)
    acc = rels[0]
    for r in rels[1:]:
        acc = join(acc, r)
    return acc


# ---------------------------------------------------------------- library

class Library:
    """Domains, terminal types and component types loaded from one or more files."""

    def __init__(self) -> None:
        self.domains: dict[str, QualDomain] = {"Sign": SIGN}
        self.terminal_types: dict[str, TerminalType] = {}
        self.component_types: dict[str, ComponentType] = {}
        self.quiescence_violations: list[str] = []

    def __len__(self) -> int:
        return len(self.component_types)

    def __iter__(self) -> Iterator[ComponentType]:
        return iter(self.component_types.values())

    def __getitem__(self, name: str) -> ComponentType:
        try:
            return self.component_types[name]
        except KeyError:
            raise ModelError(f"unknown component type {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.component_types

    def add_domain(self, dom: QualDomain) -> None:
        old = self.domains.get(dom.name)
        if old is not None and old != dom:
            raise ModelError(f"domain {dom.name} declared twice with different values")
        self.domains[dom.name] = dom

    def add_terminal_type(self, tt: TerminalType) -> None:
        old = self.terminal_types.get(tt.name)
        if old is not None and old != tt:
            raise ModelError(f"terminal type {tt.name} declared twice differently")
        self.terminal_types[tt.name] = tt

    def add_component_type(self, ct: ComponentType) -> None:
        if ct.name in self.component_types:
            raise ModelError(f"duplicate component type {ct.name}")
        self.component_types[ct.name] = ct

    def merged(self, other: Library) -> Library:
        lib = Library()
        for src in (self, other):
            for d in src.domains.values():
                lib.add_domain(d)
            for t in src.terminal_types.values():
                lib.add_terminal_type(t)
            for c in src.component_types.values():
                lib.add_component_type(c)
            lib.quiescence_violations += src.quiescence_violations
        return lib

    def domain(self, name: str) -> QualDomain:
        try:
            return self.domains[name]
        except KeyError:
            raise ModelError(f"unknown domain {name!r}") from None


@lru_cache(maxsize=None)
def _schema(name: str) -> dict:
    return json.loads(resources.files("qfmea.schemas").joinpath(name).read_text())


def validate_json(doc: Any, schema_name: str, what: str) -> None:
    validator = jsonschema.Draft202012Validator(_schema(schema_name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ModelError(f"{what}: {where}: {err.message}")


def parse_json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: {exc.msg}", exc.lineno, exc.colno) from None


def load_library(text: str, base: Library | None = None, what: str = "library") -> Library:
    """Parse, validate and compile a model-library document.

    ``base`` supplies domains and terminal types declared by another file.
    """
    doc = parse_json(text, what)
    validate_json(doc, "library.schema.json", what)
    lib = Library()
    if base is not None:
        for d in base.domains.values():
            lib.add_domain(d)
        for t in base.terminal_types.values():
            lib.add_terminal_type(t)
    for d in doc.get("domains", []):
        try:
            dom = QualDomain(d["name"], tuple(str(v) for v in d["values"]),
                             tuple((str(k), str(v)) for k, v in d.get("embed", {}).items()))
        except ValueError as exc:
            raise ModelError(f"{what}: {exc}") from None
        if dom.sign_of:
            for s in dom.sign_of.values():
                if s not in SIGNS:
                    raise ModelError(f"{what}: domain {dom.name} embeds into non-sign {s!r}")
        if dom.name == "Sign" and dom.values != SIGNS:
            raise ModelError(f"{what}: domain Sign must be exactly {list(SIGNS)}")
        lib.add_domain(dom)
    for t in doc.get("terminal_types", []):
        tvs = []
        for v in t["variables"]:
            dom = lib.domain(v["domain"])
            if v.get("directed") and dom.values != SIGNS:
                raise ModelError(f"{what}: directed variable {t['name']}.{v['name']} must be sign-valued")
            tvs.append(TerminalVar(v["name"], dom, bool(v.get("directed", False)),
                                   bool(v.get("deviation", False))))
        if len({v.name for v in tvs}) != len(tvs):
            raise ModelError(f"{what}: terminal type {t['name']} repeats a variable name")
        lib.add_terminal_type(TerminalType(t["name"], tuple(tvs)))
    for c in doc.get("component_types", []):
        lib.add_component_type(_component_type(c, lib, what))
    for ct in lib:
        for mode in ct.mode_names:
            if ct.compiled(mode).is_empty():
                raise ModelError(f"{what}: mode {ct.name}/{mode} is unsatisfiable")
        lib.quiescence_violations.extend(nominal_quiescence(ct))
    for msg in lib.quiescence_violations:
        log.warning("nominal quiescence violated: %s", msg)
    return lib


def _component_type(c: dict, lib: Library, what: str) -> ComponentType:
    name = c["name"]
    terminals = []
    for t in c.get("terminals", []):
        if t["type"] not in lib.terminal_types:
            raise ModelError(f"{what}: {name}: unknown terminal type {t['type']!r}")
        terminals.append(Terminal(t["name"], lib.terminal_types[t["type"]], t.get("direction", "none")))
    local_vars = [LocalVar(v["name"], lib.domain(v["domain"]), v.get("kind", "state"))
                  for v in c.get("vars", [])]
    common = tuple(parse_constraint(x, f"{name}/common/{i}") for i, x in enumerate(c.get("common", [])))
    modes = tuple(BehaviorMode(m["name"], tuple(parse_constraint(x, f"{name}/{m['name']}/{i}")
                                                for i, x in enumerate(m.get("constraints", []))))
                  for m in c.get("modes", []))
    try:
        return ComponentType(name, tuple(terminals), tuple(local_vars), modes, common, c.get("label"))
    except TypeCheckError as exc:
        raise ModelError(f"{what}: type error in {exc}") from None
    except ModelError as exc:
        raise ModelError(f"{what}: {exc}") from None


def nominal_quiescence(ct: ComponentType) -> list[str]:
    """OK-mode tuples whose input deviations are all 0 but some other deviation is not."""
    rel = ct.compiled(OK)
    inputs, others = [], []
    in_terms = {t.name for t in ct.terminals if t.direction == "in"}
    for i, (name, _, kind) in enumerate(ct.var_specs()):
        if kind != "deviation":
            continue
        (inputs if name.split(".")[0] in in_terms and "." in name else others).append(i)
    bad = []
    for t in rel.tuples:
        if all(t[i] == "0" for i in inputs) and any(t[i] != "0" for i in others):
            bad.append(t)
    if not bad:
        return []
    names = [name for name, _, _ in ct.var_specs()]
    sample = min(bad)
    devs = {names[i]: sample[i] for i in others if sample[i] != "0"}
    return [f"{ct.name}/OK emits deviations {devs} with all input deviations 0"]


def read_library_files(paths: Sequence[str | Path]) -> Library:
    lib: Library | None = None
    for p in paths:
        p = Path(p)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ModelError(f"cannot read library {p}: {exc}") from None
        part = load_library(text, base=lib, what=str(p))
        lib = part if lib is None else lib.merged(part)
    if lib is None:
        raise ModelError("no library files given")
    return lib
