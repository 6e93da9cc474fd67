"""System structures, mode assignments and composition of the system relation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import ModelError
from .library import OK, ComponentType, TerminalRef, compile_mode, connection_relations
from .relation import Relation, VarRef, join, project

ModeAssignment = Mapping[str, str]


@dataclass(frozen=True)
class FaultAssignment:
    instance: str
    mode: str
    assignment: Mapping[str, str] = field(compare=False)

    def __iter__(self):
        # Allows ``for inst, mode, ma in single_fault_assignments(s)``.
        return iter((self.instance, self.mode, self.assignment))


class SystemStructure:
    """Component instances plus the connections between their terminals."""

    def __init__(self, comps: Sequence[tuple[str, ComponentType]],
                 connections: Sequence[tuple[str, str]] = ()):
        self.comps: list[tuple[str, ComponentType]] = list(comps)
        self._by_id: dict[str, ComponentType] = {}
        for iid, ct in self.comps:
            if iid in self._by_id:
                raise ModelError(f"duplicate instance id {iid!r}")
            if "." in iid:
                raise ModelError(f"instance id {iid!r} must not contain '.'")
            self._by_id[iid] = ct
        self.connections: list[tuple[TerminalRef, TerminalRef]] = [
            self._connection(a, b) for a, b in connections]
        self._check_torque_chain()

    def _terminal(self, ref: str) -> TerminalRef:
        iid, _, term = ref.partition(".")
        if iid not in self._by_id:
            raise ModelError(f"connection {ref!r}: unknown instance {iid!r}")
        ct = self._by_id[iid]
        return TerminalRef(iid, term, ct.terminal(term).type)

    def _connection(self, a: str | TerminalRef, b: str | TerminalRef) -> tuple[TerminalRef, TerminalRef]:
        ta = a if isinstance(a, TerminalRef) else self._terminal(a)
        tb = b if isinstance(b, TerminalRef) else self._terminal(b)
        if ta.instance == tb.instance:
            raise ModelError(f"connection {ta} - {tb} joins a component to itself")
        if ta.type != tb.type:
            raise ModelError(f"connection {ta} - {tb}: terminal types {ta.type.name} and {tb.type.name} differ")
        return ta, tb

    def _check_torque_chain(self) -> None:
        # Connections carrying directed quantities must not close a loop.
        parent: dict[str, str] = {}

        def find(x: str) -> str:
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for ta, tb in self.connections:
            if not any(v.directed for v in ta.type.variables):
                continue
            ra, rb = find(ta.instance), find(tb.instance)
            if ra == rb:
                raise ModelError(f"connection {ta} - {tb} closes a cycle among mechanical components")
            parent[ra] = rb

    @property
    def ids(self) -> list[str]:
        return [iid for iid, _ in self.comps]

    def __getitem__(self, iid: str) -> ComponentType:
        try:
            return self._by_id[iid]
        except KeyError:
            raise ModelError(f"unknown instance {iid!r}") from None

    def __contains__(self, iid: str) -> bool:
        return iid in self._by_id

    def variables(self) -> list[VarRef]:
        return [v for iid, ct in self.comps for v in ct.variables(iid)]

    def scope(self) -> dict[str, VarRef]:
        """Every variable by its dotted name ``instance.var``."""
        return {str(v): v for v in self.variables()}

    def var(self, dotted: str) -> VarRef:
        iid, _, name = dotted.partition(".")
        for v in self[iid].variables(iid):
            if v.name == name:
                return v
        raise ModelError(f"{iid} ({self[iid].name}) has no variable {name!r}")

    def replaced(self, iid: str, ct: ComponentType) -> SystemStructure:
        """Copy with instance ``iid`` re-typed to ``ct``."""
        self[iid]
        return SystemStructure([(i, ct if i == iid else c) for i, c in self.comps],
                               [(str(a), str(b)) for a, b in self.connections])

    def without(self, iids: Iterable[str]) -> SystemStructure:
        """Copy without the given instances and their connections."""
        drop = set(iids)
        return SystemStructure([(i, c) for i, c in self.comps if i not in drop],
                               [(str(a), str(b)) for a, b in self.connections
                                if a.instance not in drop and b.instance not in drop])

    def extended(self, comps: Sequence[tuple[str, ComponentType]],
                 connections: Sequence[tuple[str, str]]) -> SystemStructure:
        return SystemStructure(self.comps + list(comps),
                               [(str(a), str(b)) for a, b in self.connections] + list(connections))

    def __repr__(self) -> str:
        return f"SystemStructure({len(self.comps)} components, {len(self.connections)} connections)"


def nominal_assignment(s: SystemStructure) -> dict[str, str]:
    return {iid: OK for iid, _ in s.comps}


def single_fault_assignments(s: SystemStructure) -> list[FaultAssignment]:
    """One assignment per (instance, fault mode), in declaration order."""
    out = []
    base = nominal_assignment(s)
    for iid, ct in s.comps:
        for mode in ct.fault_modes:
            out.append(FaultAssignment(iid, mode, {**base, iid: mode}))
    return out


def _check_assignment(s: SystemStructure, ma: ModeAssignment) -> None:
    missing = [iid for iid in s.ids if iid not in ma]
    if missing:
        raise ModelError(f"mode assignment lacks instances {missing}")
    for iid, mode in ma.items():
        if iid not in s:
            raise ModelError(f"mode assignment names unknown instance {iid!r}")
        if mode not in s[iid].mode_names:
            raise ModelError(f"{iid} ({s[iid].name}) has no mode {mode!r}")


def system_relations(s: SystemStructure, ma: ModeAssignment) -> list[Relation]:
    """The relations whose join is the system model: modes first, then connections."""
    _check_assignment(s, ma)
    rels = [compile_mode(ct, ma[iid], iid) for iid, ct in s.comps]
    for ta, tb in s.connections:
        rels.extend(connection_relations(ta, tb))
    return rels


def _plan(schemas: tuple[tuple[tuple[str, str], ...], ...], sizes: Sequence[int],
          seed: tuple | None, keep: frozenset | None) -> list[tuple[int, tuple | None]]:
    """Join order and post-join projections for a fold.

    Greedy: next is the relation sharing most variables with the result so
    far, preferring fewer new variables, then fewer tuples.
    """
    keysets = [frozenset(ks) for ks in schemas]
    refcount: dict[tuple[str, str], int] = {}
    for ks in keysets:
        for k in ks:
            refcount[k] = refcount.get(k, 0) + 1
    remaining = list(range(len(schemas)))
    if seed is None:
        first = remaining.pop(min(range(len(remaining)), key=lambda p: sizes[remaining[p]]))
        acc = list(schemas[first])
        for k in keysets[first]:
            refcount[k] -= 1
        steps = [(first, None)]
    else:
        acc = list(seed)
        steps = []
    acc_keys = set(acc)
    while remaining:
        best, best_score = 0, None
        for pos, i in enumerate(remaining):
            ks = keysets[i]
            shared = len(ks & acc_keys)
            sc = (shared > 0, shared, shared - len(ks), -sizes[i])
            if best_score is None or sc > best_score:
                best, best_score = pos, sc
        i = remaining.pop(best)
        for k in keysets[i]:
            refcount[k] -= 1
        acc += [k for k in schemas[i] if k not in acc_keys]
        proj = None
        if keep is not None:
            live = [k for k in acc if k in keep or refcount[k] > 0]
            if len(live) < len(acc):
                acc, proj = live, tuple(live)
        acc_keys = set(acc)
        steps.append((i, proj))
    return steps


_PLANS: dict[tuple, list[tuple[int, tuple | None]]] = {}


def fold(relations: Sequence[Relation], seed: Relation | None = None,
         keep: Iterable[VarRef] | None = None) -> Relation:
    """Join ``relations`` (and ``seed``), optionally projecting onto ``keep``.

    With ``keep`` given, variables that are neither kept nor mentioned by a
    relation still to be joined are projected away right after each join;
    this never changes the final projection onto ``keep``.
    """
    relations = list(relations)
    if seed is None and not relations:
        return Relation._raw((), frozenset({()}))
    keep = None if keep is None else list(keep)
    schemas = tuple(tuple(v.key for v in r.schema) for r in relations)
    seed_keys = None if seed is None else tuple(v.key for v in seed.schema)
    keep_keys = None if keep is None else frozenset(v.key for v in keep)
    cache_key = (schemas, seed_keys, keep_keys)
    steps = _PLANS.get(cache_key)
    if steps is None:
        # Sizes only steer efficiency, so a plan is reused for other modes
        # with the same schemas.
        steps = _plan(schemas, [len(r) for r in relations], seed_keys, keep_keys)
        if len(_PLANS) > 4096:
            _PLANS.clear()
        _PLANS[cache_key] = steps

    acc = seed
    for i, proj in steps:
        acc = relations[i] if acc is None else join(acc, relations[i])
        if proj is not None:
            pos = acc.positions
            acc = project(acc, [acc.schema[pos[k]] for k in proj])

    if keep is not None:
        if acc.is_empty():
            by_key = {v.key: v for r in relations for v in r.schema}
            if seed is not None:
                by_key.update({v.key: v for v in seed.schema})
            return Relation._raw(tuple(by_key.get(v.key, v) for v in keep), frozenset())
        return project(acc, keep)
    return acc


def compose(s: SystemStructure, ma: ModeAssignment, scenario: Relation | None = None,
            keep: Sequence[VarRef] | None = None) -> Relation:
    """The system relation for ``ma``, optionally joined with a scenario.

    Without ``keep`` the result spans every variable of the structure (plus
    the scenario's).  With ``keep`` it is the projection onto those
    variables, computed with early elimination of everything else.
    """
    rels = system_relations(s, ma)
    if keep is not None:
        known = {v.key for r in rels for v in r.schema}
        if scenario is not None:
            known |= {v.key for v in scenario.schema}
        unknown = [str(v) for v in keep if v.key not in known]
        if unknown:
            raise ModelError(f"variables {unknown} do not occur in the structure")
    return fold(rels, seed=scenario, keep=keep)
