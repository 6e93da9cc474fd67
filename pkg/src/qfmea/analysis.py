"""Effect prediction for single faults, the nominal sanity check and
requirement back-propagation from desired behavior to software outputs."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .composer import ModeAssignment, SystemStructure, compose, nominal_assignment, single_fault_assignments
from .constraints import TypeCheckError, check, parse_constraint
from .errors import ModelError, UnrealizableRequirement
from .library import compile_mode, connection_relations
from .relation import Classification, Relation, VarRef, Verdict, classify, join, project

NO_EFFECT = ">>no system level effects<<"


@dataclass(frozen=True)
class Scenario:
    """A named relation over exogenous and state variables.

    ``group`` names the family a scenario belongs to (``Drive`` for both
    speeds); ``label`` is what result tables print in the scenario column.
    """

    name: str
    relation: Relation
    group: str | None = None
    label: str | None = None

    def __post_init__(self) -> None:
        if self.relation.is_empty():
            raise ModelError(f"scenario {self.name!r} admits no tuple")

    @property
    def display(self) -> str:
        return self.label or self.name

    def matches(self, names: Iterable[str]) -> bool:
        names = set(names)
        return self.name in names or (self.group is not None and self.group in names)


@dataclass(frozen=True)
class EffectDefinition:
    name: str
    relation: Relation
    applicable_scenarios: frozenset[str] | None = None

    def __post_init__(self) -> None:
        if self.relation.is_empty():
            raise ModelError(f"effect {self.name!r} admits no tuple")
        size = 1
        for v in self.relation.schema:
            size *= len(v.domain)
        if len(self.relation) == size:
            raise ModelError(f"effect {self.name!r} holds for every value combination")

    def applies_to(self, scenario: Scenario) -> bool:
        return self.applicable_scenarios is None or scenario.matches(self.applicable_scenarios)


@dataclass(frozen=True)
class AnalysisRow:
    """One cell of a result table; ``effect`` is None for "no effect" rows."""

    scenario: str
    component: str
    fault_mode: str
    effect: str | None
    verdict: Verdict | None
    inconsistent: bool = False

    @property
    def is_no_effect(self) -> bool:
        return self.effect is None


@dataclass(frozen=True)
class Violation:
    scenario: str
    effect: str | None
    verdict: Verdict | None
    message: str

    def __str__(self) -> str:
        return self.message


# ---------------------------------------------------------------- building relations

def relation_from_spec(entry: Mapping[str, Any], scope: Mapping[str, VarRef], what: str) -> Relation:
    """Build a relation from ``vars``/``assign``/``rows``/``constraints`` fields.

    ``assign`` maps a variable to a value or a list of allowed values;
    ``rows`` lists explicit tuples over ``vars``; ``constraints`` use the
    model-library constraint language over dotted variable names.  The
    schema is ``vars`` if given, otherwise every mentioned variable in order
    of first mention.
    """
    names: list[str] = list(entry.get("vars", []))
    assign = entry.get("assign", {})
    constraints = [parse_constraint(c, f"{what}/constraints/{i}")
                   for i, c in enumerate(entry.get("constraints", []))]
    mentioned = list(assign)
    for c in constraints:
        mentioned.extend(sorted(c.variables()))
    for n in mentioned:
        if n not in names:
            if "vars" in entry:
                raise ModelError(f"{what}: {n!r} is used but not listed in vars")
            names.append(n)
    if not names:
        raise ModelError(f"{what}: no variables")
    unknown = [n for n in names if n not in scope]
    if unknown:
        raise ModelError(f"{what}: unknown variables {unknown}")
    variables = [scope[n] for n in names]
    allowed: list[Sequence[str]] = []
    for n, v in zip(names, variables):
        spec = assign.get(n)
        if spec is None:
            allowed.append(v.domain.values)
            continue
        values = [spec] if isinstance(spec, str) else list(spec)
        for x in values:
            if x not in v.domain:
                raise ModelError(f"{what}: value {x!r} not in domain {v.domain.name} of {n}")
        allowed.append([x for x in v.domain.values if x in values])
    try:
        fns = check(constraints, {n: v.domain for n, v in zip(names, variables)}, what)
    except TypeCheckError as exc:
        raise ModelError(str(exc)) from None
    rows = None
    if "rows" in entry:
        if "vars" not in entry:
            raise ModelError(f"{what}: rows need an explicit vars list")
        rows = set()
        for row in entry["rows"]:
            if len(row) != len(names):
                raise ModelError(f"{what}: row {row} does not match vars {names}")
            rows.add(tuple(row))
    out = []
    for values in itertools.product(*allowed):
        if rows is not None and values not in rows:
            continue
        env = dict(zip(names, values))
        if all(f(env) for f in fns):
            out.append(values)
    return Relation(variables, out)


def scenario_from_spec(entry: Mapping[str, Any], scope: Mapping[str, VarRef]) -> Scenario:
    name = entry["name"]
    return Scenario(name, relation_from_spec(entry, scope, f"scenario {name!r}"),
                    entry.get("group"), entry.get("label"))


def effect_from_spec(entry: Mapping[str, Any], scope: Mapping[str, VarRef]) -> EffectDefinition:
    name = entry["name"]
    scen = entry.get("scenarios")
    return EffectDefinition(name, relation_from_spec(entry, scope, f"effect {name!r}"),
                            frozenset(scen) if scen is not None else None)


# ---------------------------------------------------------------- prediction

def _merged_schema(effects: Sequence[EffectDefinition]) -> list[VarRef]:
    seen: dict[tuple[str, str], VarRef] = {}
    for e in effects:
        for v in e.relation.schema:
            seen.setdefault(v.key, v)
    return list(seen.values())


def _behavior(s: SystemStructure, ma: ModeAssignment, sc: Scenario,
              keep: Sequence[VarRef], eager: bool) -> Relation:
    if eager:
        return compose(s, ma, sc.relation, keep=keep)
    return project(compose(s, ma, sc.relation), keep)


def classify_effect(s: SystemStructure, ma: ModeAssignment, sc: Scenario, e: EffectDefinition,
                    eager: bool = True) -> Classification:
    """Compare the projected faulty behavior under ``sc`` with the effect."""
    candidate = _behavior(s, ma, sc, e.relation.schema, eager)
    return classify(candidate, e.relation)


def _rows_for(s: SystemStructure, iid: str, mode: str, ma: ModeAssignment, sc: Scenario,
              effects: Sequence[EffectDefinition], eager: bool) -> list[AnalysisRow]:
    applicable = [e for e in effects if e.applies_to(sc)]
    behavior = _behavior(s, ma, sc, _merged_schema(applicable), eager)
    if behavior.is_empty():
        return [AnalysisRow(sc.name, iid, mode, None, None, inconsistent=True)]
    rows = []
    for e in applicable:
        c = classify(project(behavior, e.relation.schema), e.relation)
        if c.verdict is not Verdict.ABSENT:
            rows.append(AnalysisRow(sc.name, iid, mode, e.name, c.verdict))
    return rows or [AnalysisRow(sc.name, iid, mode, None, None)]


def _scenario_rows(args) -> list[AnalysisRow]:
    s, sc, effects, eager = args
    out = []
    for iid, mode, ma in single_fault_assignments(s):
        out.extend(_rows_for(s, iid, mode, ma, sc, effects, eager))
    return out


def run_analysis(s: SystemStructure, scenarios: Sequence[Scenario],
                 effects: Sequence[EffectDefinition], jobs: int = 1,
                 eager: bool = True) -> list[AnalysisRow]:
    """Every single fault under every scenario against every applicable effect.

    Rows come in scenario order, then fault order (instance, then mode
    declaration order), then effect order.  A fault with no effect yields one
    row with ``effect=None``.
    """
    tasks = [(s, sc, list(effects), eager) for sc in scenarios]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_scenario_rows, tasks))
    else:
        parts = [_scenario_rows(t) for t in tasks]
    return [row for part in parts for row in part]


def ok_sanity_check(s: SystemStructure, scenarios: Sequence[Scenario],
                    effects: Sequence[EffectDefinition]) -> list[Violation]:
    """Scenario/effect pairs where the all-OK system is not clear of the effect."""
    ma = nominal_assignment(s)
    out = []
    for sc in scenarios:
        applicable = [e for e in effects if e.applies_to(sc)]
        behavior = compose(s, ma, sc.relation, keep=_merged_schema(applicable))
        if behavior.is_empty():
            out.append(Violation(sc.name, None, None,
                                 f"{sc.name}: the nominal system is inconsistent with the scenario"))
            continue
        for e in applicable:
            c = classify(project(behavior, e.relation.schema), e.relation)
            if c.verdict is not Verdict.ABSENT:
                out.append(Violation(sc.name, e.name, c.verdict,
                                     f"{sc.name}: nominal behavior {c.verdict.value}ly shows {e.name}"))
    return out


# ---------------------------------------------------------------- requirements

def sensor_projection(physical: Relation, scenario: Scenario, input_vars: Sequence[VarRef]) -> Relation:
    """Software inputs the physical model admits under the scenario."""
    return project(join(physical, scenario.relation), input_vars)


def required_software_output(revised_behavior: Relation, physical: Relation, scenario: Scenario,
                             output_vars: Sequence[VarRef]) -> Relation:
    """Actuator values compatible with the desired behavior under the scenario."""
    if revised_behavior.is_empty():
        raise ModelError("the desired behavior admits no tuple")
    out = project(join(join(revised_behavior, physical), scenario.relation), output_vars)
    if out.is_empty():
        raise UnrealizableRequirement(
            f"no value of {[str(v) for v in output_vars]} yields the desired behavior "
            f"in scenario {scenario.name!r}")
    return out


def satisfies(software: Relation, sensor_inputs: Relation, required: Relation) -> bool:
    """Whether every output the software produces on the given inputs is allowed."""
    produced = project(join(software, sensor_inputs), required.schema)
    return produced.tuples <= required.tuples


def interface_relation(s: SystemStructure, iid: str, mode: str = "OK") -> Relation:
    """Behavior of one instance expressed over the variables of its neighbours.

    Joins the instance's mode relation with the relations of its connections
    and projects onto the far side, which is how the rest of the structure
    sees the component.
    """
    ct = s[iid]
    rels = [compile_mode(ct, mode, iid)]
    far: list[VarRef] = []
    for ta, tb in s.connections:
        if iid not in (ta.instance, tb.instance):
            continue
        rels.extend(connection_relations(ta, tb))
        other = tb if ta.instance == iid else ta
        far.extend(other.var(tv) for tv in other.type.variables)
    acc = rels[0]
    for r in rels[1:]:
        acc = join(acc, r)
    seen: dict[tuple[str, str], VarRef] = {}
    for v in far:
        seen.setdefault(v.key, v)
    return project(acc, list(seen.values()))
