"""Brute-force reference for the analysis engine.

Solutions are enumerated straight from the constraint predicates and the
connection laws, without compiled relations, joins or projections.  The
search fixes variables in a static order and rejects a partial assignment as
soon as some constraint has all its variables bound, so it visits exactly the
prefixes of the full variable product that no constraint has ruled out yet.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

from .analysis import AnalysisRow, EffectDefinition, Scenario, _merged_schema
from .composer import ModeAssignment, SystemStructure, _check_assignment, single_fault_assignments
from .constraints import check
from .errors import OracleCapExceeded
from .relation import VarRef, Verdict
from .signs import sign_negate

DEFAULT_CAP = 50_000_000


class _Budget:
    def __init__(self, cap: int | None):
        self.cap = cap
        self.used = 0

    def spend(self) -> None:
        self.used += 1
        if self.cap is not None and self.used > self.cap:
            raise OracleCapExceeded(f"enumeration exceeded {self.cap} search nodes")


@dataclass
class _Check:
    slots: tuple[int, ...]
    test: Callable[[tuple[str, ...]], bool]


def _problem(s: SystemStructure, ma: ModeAssignment, scenario: Scenario | None):
    """Variables (by key) and predicate checks over positions in that list."""
    _check_assignment(s, ma)
    variables: dict[tuple[str, str], VarRef] = {}
    for v in s.variables():
        variables.setdefault(v.key, v)
    if scenario is not None:
        for v in scenario.relation.schema:
            variables.setdefault(v.key, v)
    index = {k: i for i, k in enumerate(variables)}
    checks: list[_Check] = []
    for iid, ct in s.comps:
        mode = ma[iid]
        constraints = ct.constraints_of(mode)
        for c, fn in zip(constraints, check(constraints, ct.scope(), f"{ct.name}/{mode}")):
            names = sorted(c.variables())
            slots = tuple(index[(iid, n)] for n in names)

            def test(vals, fn=fn, names=names):
                return fn(dict(zip(names, vals)))
            checks.append(_Check(slots, test))
    for ta, tb in s.connections:
        for tv in ta.type.variables:
            slots = (index[ta.var(tv).key], index[tb.var(tv).key])
            if tv.directed:
                checks.append(_Check(slots, lambda p: p[1] == sign_negate(p[0])))
            else:
                checks.append(_Check(slots, lambda p: p[0] == p[1]))
    if scenario is not None:
        allowed = scenario.relation.tuples
        slots = tuple(index[v.key] for v in scenario.relation.schema)
        checks.append(_Check(slots, lambda p, allowed=allowed: tuple(p) in allowed))
    return list(variables.values()), checks


def _order(n: int, first: Sequence[int], checks: Sequence[_Check]) -> list[int]:
    """Static order: ``first`` as given, then whichever variable closes most checks."""
    order = list(dict.fromkeys(first))
    placed = set(order)
    touching: list[list[int]] = [[] for _ in range(n)]
    for ci, c in enumerate(checks):
        for x in set(c.slots):
            touching[x].append(ci)
    missing = [len(set(c.slots) - placed) for c in checks]
    while len(order) < n:
        best, best_score = None, None
        for x in range(n):
            if x in placed:
                continue
            closes = sum(1 for ci in touching[x] if missing[ci] == 1)
            links = sum(1 for ci in touching[x] if missing[ci] < len(set(checks[ci].slots)))
            score = (closes, links, -x)
            if best_score is None or score > best_score:
                best, best_score = x, score
        order.append(best)
        placed.add(best)
        for ci in touching[best]:
            missing[ci] -= 1
    return order


def projected_solutions(s: SystemStructure, ma: ModeAssignment, scenario: Scenario | None,
                        keep: Sequence[VarRef], cap: int | None = DEFAULT_CAP,
                        budget: _Budget | None = None) -> set[tuple[str, ...]]:
    """Values of ``keep`` that extend to a full assignment satisfying everything."""
    variables, checks = _problem(s, ma, scenario)
    budget = budget or _Budget(cap)
    pos = {v.key: i for i, v in enumerate(variables)}
    keep_slots = [pos[v.key] for v in keep]
    order = _order(len(variables), keep_slots, checks)
    depth_of = {x: d for d, x in enumerate(order)}
    due: list[list[_Check]] = [[] for _ in order]
    for c in checks:
        if not c.slots:
            if not c.test(()):
                return set()
            continue
        due[max(depth_of[x] for x in c.slots)].append(c)
    domains = [variables[x].domain.values for x in order]
    values: list[str | None] = [None] * len(variables)
    n_keep = len(dict.fromkeys(keep_slots))
    found: set[tuple[str, ...]] = set()

    def consistent(d: int) -> bool:
        return all(c.test(tuple(values[x] for x in c.slots)) for c in due[d])

    def complete(d: int) -> bool:
        if d == len(order):
            return True
        x = order[d]
        for val in domains[d]:
            budget.spend()
            values[x] = val
            if consistent(d) and complete(d + 1):
                return True
        values[x] = None
        return False

    def prefixes(d: int) -> None:
        if d == n_keep:
            if complete(d):
                found.add(tuple(values[x] for x in keep_slots))
            return
        x = order[d]
        for val in domains[d]:
            budget.spend()
            values[x] = val
            if consistent(d):
                prefixes(d + 1)
        values[x] = None

    prefixes(0)
    return found


def _verdict(candidate: set[tuple[str, ...]], effect: set[tuple[str, ...]]) -> Verdict:
    hits = candidate & effect
    if not hits:
        return Verdict.ABSENT
    return Verdict.DEFINITE if hits == candidate else Verdict.POSSIBLE


def oracle_analysis(s: SystemStructure, scenarios: Sequence[Scenario],
                    effects: Sequence[EffectDefinition],
                    cap: int | None = DEFAULT_CAP) -> list[AnalysisRow]:
    """Same rows as :func:`run_analysis`, recomputed by enumeration.

    ``cap`` bounds the total number of search nodes over the whole run.
    """
    budget = _Budget(cap)
    rows = []
    for sc in scenarios:
        applicable = [e for e in effects if e.applies_to(sc)]
        keep = _merged_schema(applicable)
        for iid, mode, ma in single_fault_assignments(s):
            sols = projected_solutions(s, ma, sc, keep, budget=budget)
            if not sols:
                rows.append(AnalysisRow(sc.name, iid, mode, None, None, inconsistent=True))
                continue
            at = {v.key: i for i, v in enumerate(keep)}
            out = []
            for e in applicable:
                idx = [at[v.key] for v in e.relation.schema]
                cand = {tuple(t[i] for i in idx) for t in sols}
                verdict = _verdict(cand, set(e.relation.tuples))
                if verdict is not Verdict.ABSENT:
                    out.append(AnalysisRow(sc.name, iid, mode, e.name, verdict))
            rows.extend(out or [AnalysisRow(sc.name, iid, mode, None, None)])
    return rows


def diff_rows(engine: Sequence[AnalysisRow], oracle: Sequence[AnalysisRow]) -> list[str]:
    """Human-readable differences; empty when both agree row for row."""
    out = []
    for a, b in itertools.zip_longest(engine, oracle):
        if a != b:
            out.append(f"engine {a} != oracle {b}")
    return out
