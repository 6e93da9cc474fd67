"""Finite-domain variables and extensional relations.

Everything the engine reasons about (component behavior, connections,
scenarios, effects) is a :class:`Relation`: an ordered schema of variables
plus a set of value tuples.  The operations here are plain relational
algebra; no indexes are kept between calls because relations stay small.
"""

from __future__ import annotations

import enum
import itertools
import operator
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .errors import SchemaError

VAR_KINDS = ("parameter", "state", "terminal-variable", "deviation")
EXOGENOUS = "exogenous"


@dataclass(frozen=True)
class QualDomain:
    """A named, ordered, finite set of symbolic values.

    ``embed`` optionally maps each value onto a sign so that sign arithmetic
    can be applied (Bool 1 -> +, gear R -> -, speed ++ -> +).
    """

    name: str
    values: tuple[str, ...]
    embed: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError(f"domain {self.name!r} has no values")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"domain {self.name!r} has duplicate values")
        if self.embed and {v for v, _ in self.embed} != set(self.values):
            raise ValueError(f"domain {self.name!r}: embedding must cover every value")

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.values)}

    @cached_property
    def sign_of(self) -> dict[str, str] | None:
        if self.name == "Sign":
            return {v: v for v in self.values}
        return dict(self.embed) if self.embed else None

    def __contains__(self, value: object) -> bool:
        return value in self.index

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class VarRef:
    """A variable of one composed model, identified by ``owner`` and ``name``.

    Only owner and name take part in equality; the domain travels along so
    that joins can detect type clashes.
    """

    owner: str
    name: str
    domain: QualDomain = field(compare=False)
    kind: str = field(default="state", compare=False)
    key: tuple[str, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "key", (self.owner, self.name))

    def renamed(self, owner: str) -> VarRef:
        return VarRef(owner, self.name, self.domain, self.kind)

    def __str__(self) -> str:
        return f"{self.owner}.{self.name}"

    def __repr__(self) -> str:
        return f"VarRef({self.owner}.{self.name}:{self.domain.name})"


class Verdict(str, enum.Enum):
    DEFINITE = "definite"
    POSSIBLE = "possible"
    ABSENT = "absent"


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    inconsistent: bool = False


class Relation:
    """An immutable set of tuples over an ordered schema of :class:`VarRef`."""

    __slots__ = ("schema", "tuples", "_positions")

    def __init__(self, schema: Sequence[VarRef], tuples: Iterable[Sequence[str]] = ()):
        schema = tuple(schema)
        if len({v.key for v in schema}) != len(schema):
            raise SchemaError(f"duplicate variable in schema {[str(v) for v in schema]}")
        rows = set()
        for row in tuples:
            row = tuple(row)
            if len(row) != len(schema):
                raise SchemaError(f"tuple {row} does not match schema of width {len(schema)}")
            for var, value in zip(schema, row):
                if value not in var.domain:
                    raise SchemaError(f"value {value!r} not in domain {var.domain.name} of {var}")
            rows.add(row)
        self._init(schema, frozenset(rows))

    def _init(self, schema: tuple[VarRef, ...], tuples: frozenset) -> None:
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "tuples", tuples)
        object.__setattr__(self, "_positions", None)

    @classmethod
    def _raw(cls, schema: tuple[VarRef, ...], tuples: Iterable[tuple]) -> Relation:
        # Internal constructor: callers guarantee well-typed tuples.
        rel = cls.__new__(cls)
        rel._init(schema, tuples if isinstance(tuples, frozenset) else frozenset(tuples))
        return rel

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("Relation is immutable")

    def __reduce__(self):
        return (Relation._raw, (self.schema, self.tuples))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return self.schema == other.schema and self.tuples == other.tuples

    def __hash__(self) -> int:
        return hash((self.schema, self.tuples))

    @property
    def positions(self) -> dict[tuple[str, str], int]:
        if self._positions is None:
            object.__setattr__(self, "_positions", {v.key: i for i, v in enumerate(self.schema)})
        return self._positions

    def var(self, key: tuple[str, str] | VarRef) -> VarRef:
        if isinstance(key, VarRef):
            key = key.key
        return self.schema[self.positions[key]]

    def __contains__(self, var: object) -> bool:
        return isinstance(var, VarRef) and var.key in self.positions

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[tuple[str, ...]]:
        return iter(self.rows())

    def __bool__(self) -> bool:
        return bool(self.tuples)

    def is_empty(self) -> bool:
        return not self.tuples

    def rows(self) -> list[tuple[str, ...]]:
        """Tuples in canonical order: lexicographic by schema, domain order per column."""
        idx = [v.domain.index for v in self.schema]
        return sorted(self.tuples, key=lambda t: tuple(ix[x] for ix, x in zip(idx, t)))

    def records(self) -> list[dict[str, str]]:
        names = [str(v) for v in self.schema]
        return [dict(zip(names, row)) for row in self.rows()]

    def values_of(self, var: VarRef) -> set[str]:
        i = self.positions[var.key]
        return {t[i] for t in self.tuples}

    def reorder(self, schema: Sequence[VarRef]) -> Relation:
        """Same relation with columns permuted to ``schema`` (same variable set)."""
        schema = tuple(schema)
        if {v.key for v in schema} != set(self.positions) or len(schema) != len(self.schema):
            raise SchemaError("reorder requires the same variable set")
        if tuple(v.key for v in schema) == tuple(v.key for v in self.schema):
            return self
        perm = [self.positions[v.key] for v in schema]
        return Relation._raw(tuple(self.schema[i] for i in perm),
                             frozenset(tuple(t[i] for i in perm) for t in self.tuples))

    def canonical(self) -> Relation:
        """Columns sorted by (owner, name) so that equal relations compare equal."""
        return self.reorder(sorted(self.schema, key=lambda v: v.key))

    def same_as(self, other: Relation) -> bool:
        if set(self.positions) != set(other.positions):
            return False
        return self.tuples == other.reorder(self.schema).tuples

    def rename_owner(self, owner: str) -> Relation:
        return Relation._raw(tuple(v.renamed(owner) for v in self.schema), self.tuples)

    def select(self, **assignment: str) -> Relation:
        """Rows whose named variables take the given values; names are ``owner.name``."""
        checks = []
        for name, value in assignment.items():
            owner, _, var = name.partition(".")
            checks.append((self.positions[(owner, var)], value))
        return Relation._raw(self.schema, frozenset(t for t in self.tuples
                                                    if all(t[i] == v for i, v in checks)))

    def __repr__(self) -> str:
        return f"Relation([{', '.join(map(str, self.schema))}], {len(self.tuples)} tuples)"


def _check_shared(a: Relation, b: Relation) -> list[tuple[int, int]]:
    shared = []
    for j, var in enumerate(b.schema):
        i = a.positions.get(var.key)
        if i is None:
            continue
        if a.schema[i].domain != var.domain:
            raise SchemaError(f"{var} has domain {a.schema[i].domain.name} on one side "
                              f"and {var.domain.name} on the other")
        shared.append((i, j))
    return shared


def join(a: Relation, b: Relation) -> Relation:
    """Natural join: combinations of tuples that agree on shared variables."""
    shared = _check_shared(a, b)
    b_only = [j for j in range(len(b.schema)) if j not in {j for _, j in shared}]
    schema = a.schema + tuple(b.schema[j] for j in b_only)
    if not a.tuples or not b.tuples:
        return Relation._raw(schema, frozenset())
    a_key = _getter([i for i, _ in shared])
    b_key = _getter([j for _, j in shared])
    b_rest = _getter(b_only)
    index: dict[tuple, list[tuple]] = {}
    for t in b.tuples:
        index.setdefault(b_key(t), []).append(b_rest(t))
    out = set()
    for t in a.tuples:
        for rest in index.get(a_key(t), ()):
            out.add(t + rest)
    return Relation._raw(schema, frozenset(out))


def _getter(idx: Sequence[int]):
    """Like ``operator.itemgetter`` but always returning a tuple."""
    if not idx:
        return lambda t: ()
    if len(idx) == 1:
        i = idx[0]
        return lambda t: (t[i],)
    return operator.itemgetter(*idx)


def join_all(relations: Iterable[Relation]) -> Relation:
    result = None
    for rel in relations:
        result = rel if result is None else join(result, rel)
    if result is None:
        return Relation._raw((), frozenset({()}))
    return result


def project(r: Relation, variables: Sequence[VarRef]) -> Relation:
    """Restrict ``r`` to ``variables`` (in that order), collapsing duplicates."""
    try:
        idx = [r.positions[v.key] for v in variables]
    except KeyError as exc:
        raise SchemaError(f"projection onto unknown variable {exc.args[0]}") from None
    schema = tuple(r.schema[i] for i in idx)
    if len(set(idx)) != len(idx):
        raise SchemaError("projection list repeats a variable")
    if idx == list(range(len(r.schema))):
        return r
    get = _getter(idx)
    return Relation._raw(schema, frozenset(map(get, r.tuples)))


def product_universe(variables: Sequence[VarRef]) -> Relation:
    """The full Cartesian product of the variables' domains."""
    if not variables:
        raise ValueError("product_universe needs at least one variable")
    schema = tuple(variables)
    if len({v.key for v in schema}) != len(schema):
        raise SchemaError("duplicate variable in universe")
    return Relation._raw(schema, frozenset(itertools.product(*(v.domain.values for v in schema))))


def complement(r: Relation) -> Relation:
    universe = product_universe(r.schema)
    return Relation._raw(r.schema, universe.tuples - r.tuples)


def union(a: Relation, b: Relation) -> Relation:
    return Relation._raw(a.schema, a.tuples | b.reorder(a.schema).tuples)


def classify(candidate: Relation, effect: Relation) -> Classification:
    """Three-way comparison of a (projected) behavior with an effect.

    definite: candidate is non-empty and contained in the effect;
    absent: no common tuple; possible: anything else.  An empty candidate
    means the fault and scenario contradict each other; it is reported as
    absent with the ``inconsistent`` flag raised.
    """
    if not candidate.schema or not effect.schema:
        raise SchemaError("classify needs non-degenerate schemas")
    if set(candidate.positions) != set(effect.positions):
        raise SchemaError(f"candidate schema {[str(v) for v in candidate.schema]} differs from "
                          f"effect schema {[str(v) for v in effect.schema]}")
    _check_shared(candidate, effect)
    cand = candidate.reorder(effect.schema).tuples
    if not cand:
        return Classification(Verdict.ABSENT, inconsistent=True)
    if cand <= effect.tuples:
        return Classification(Verdict.DEFINITE)
    if cand.isdisjoint(effect.tuples):
        return Classification(Verdict.ABSENT)
    return Classification(Verdict.POSSIBLE)
