"""Constraint expressions used to state behavior modes, scenarios and effects.

Expressions arrive as nested JSON.  A *term* is a variable name (a plain
string), a literal ``{"lit": v}``, or a sign-valued function of terms
(``{"neg": t}``, ``{"mul": [t, t]}``, ``{"sign": t}``).  A *constraint* is a
dict with an ``op`` key; see :func:`parse_constraint` for the forms.

Constraints are type-checked against a scope (name -> domain) and compiled
into plain Python predicates over an assignment dict.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

from .errors import ModelError
from .relation import QualDomain
from .signs import SIGN, sign_add_many, sign_mul, sign_negate

Env = Mapping[str, str]
Scope = Mapping[str, QualDomain]


class TypeCheckError(ModelError):
    pass


# ---------------------------------------------------------------- terms

class Term:
    def variables(self) -> set[str]:
        raise NotImplementedError

    def domain(self, scope: Scope) -> QualDomain | None:
        raise NotImplementedError

    def compile(self, scope: Scope, expected: QualDomain | None = None) -> Callable[[Env], str]:
        raise NotImplementedError

    def sign_fn(self, scope: Scope, where: str) -> Callable[[Env], str]:
        """Compile this term to a function returning a sign."""
        dom = self.domain(scope)
        if dom is None:
            return self.compile(scope, SIGN)
        conv = dom.sign_of
        if conv is None:
            raise TypeCheckError(f"{where}: {self} of domain {dom.name} has no sign embedding")
        fn = self.compile(scope)
        if dom.name == "Sign":
            return fn
        return lambda env: conv[fn(env)]


@dataclass(frozen=True)
class Var(Term):
    name: str

    def variables(self) -> set[str]:
        return {self.name}

    def domain(self, scope: Scope) -> QualDomain:
        try:
            return scope[self.name]
        except KeyError:
            raise TypeCheckError(f"unknown variable {self.name!r}") from None

    def compile(self, scope, expected=None):
        self.domain(scope)
        name = self.name
        return lambda env: env[name]

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Lit(Term):
    value: str

    def variables(self) -> set[str]:
        return set()

    def domain(self, scope):
        return None

    def compile(self, scope, expected=None):
        if expected is not None and self.value not in expected:
            raise TypeCheckError(f"literal {self.value!r} is not in domain {expected.name}")
        value = self.value
        return lambda env: value

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Neg(Term):
    arg: Term

    def variables(self):
        return self.arg.variables()

    def domain(self, scope):
        return SIGN

    def compile(self, scope, expected=None):
        fn = self.arg.sign_fn(scope, "neg")
        return lambda env: sign_negate(fn(env))

    def __str__(self) -> str:
        return f"-({self.arg})"


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term

    def variables(self):
        return self.left.variables() | self.right.variables()

    def domain(self, scope):
        return SIGN

    def compile(self, scope, expected=None):
        f, g = self.left.sign_fn(scope, "mul"), self.right.sign_fn(scope, "mul")
        return lambda env: sign_mul(f(env), g(env))

    def __str__(self) -> str:
        return f"({self.left} * {self.right})"


@dataclass(frozen=True)
class SignOf(Term):
    arg: Term

    def variables(self):
        return self.arg.variables()

    def domain(self, scope):
        return SIGN

    def compile(self, scope, expected=None):
        return self.arg.sign_fn(scope, "sign")

    def __str__(self) -> str:
        return f"sign({self.arg})"


def _pair(a: Term, b: Term, scope: Scope, where: str):
    da, db = a.domain(scope), b.domain(scope)
    if da is None and db is None:
        raise TypeCheckError(f"{where}: comparison between two literals")
    if da is not None and db is not None and da != db:
        raise TypeCheckError(f"{where}: {a} is {da.name} but {b} is {db.name}")
    dom = da or db
    return a.compile(scope, dom), b.compile(scope, dom)


# ---------------------------------------------------------------- constraints

class Constraint:
    def variables(self) -> set[str]:
        raise NotImplementedError

    def compile(self, scope: Scope) -> Callable[[Env], bool]:
        raise NotImplementedError


@dataclass(frozen=True)
class Eq(Constraint):
    left: Term
    right: Term

    def variables(self):
        return self.left.variables() | self.right.variables()

    def compile(self, scope):
        f, g = _pair(self.left, self.right, scope, "eq")
        return lambda env: f(env) == g(env)


@dataclass(frozen=True)
class Neq(Constraint):
    left: Term
    right: Term

    def variables(self):
        return self.left.variables() | self.right.variables()

    def compile(self, scope):
        f, g = _pair(self.left, self.right, scope, "neq")
        return lambda env: f(env) != g(env)


@dataclass(frozen=True)
class In(Constraint):
    arg: Term
    values: tuple[str, ...]

    def variables(self):
        return self.arg.variables()

    def compile(self, scope):
        dom = self.arg.domain(scope)
        if dom is None:
            raise TypeCheckError("in: the tested term must not be a literal")
        for v in self.values:
            if v not in dom:
                raise TypeCheckError(f"in: value {v!r} is not in domain {dom.name}")
        fn, allowed = self.arg.compile(scope), frozenset(self.values)
        return lambda env: fn(env) in allowed


@dataclass(frozen=True)
class Imply(Constraint):
    guard: Constraint
    body: Constraint

    def variables(self):
        return self.guard.variables() | self.body.variables()

    def compile(self, scope):
        g, b = self.guard.compile(scope), self.body.compile(scope)
        return lambda env: not g(env) or b(env)


@dataclass(frozen=True)
class And(Constraint):
    args: tuple[Constraint, ...]

    def variables(self):
        return set().union(*(c.variables() for c in self.args))

    def compile(self, scope):
        fns = [c.compile(scope) for c in self.args]
        return lambda env: all(f(env) for f in fns)


@dataclass(frozen=True)
class Or(Constraint):
    args: tuple[Constraint, ...]

    def variables(self):
        return set().union(*(c.variables() for c in self.args))

    def compile(self, scope):
        fns = [c.compile(scope) for c in self.args]
        return lambda env: any(f(env) for f in fns)


@dataclass(frozen=True)
class Add(Constraint):
    """``eq`` lies in the (set-valued) sign sum of ``args``."""

    args: tuple[Term, ...]
    eq: Term

    def variables(self):
        return set().union(self.eq.variables(), *(t.variables() for t in self.args))

    def compile(self, scope):
        fns = [t.sign_fn(scope, "add") for t in self.args]
        out = self.eq.sign_fn(scope, "add")
        return lambda env: out(env) in sign_add_many(f(env) for f in fns)


@dataclass(frozen=True)
class MulC(Constraint):
    args: tuple[Term, Term]
    eq: Term

    def variables(self):
        return set().union(self.eq.variables(), *(t.variables() for t in self.args))

    def compile(self, scope):
        f, g = (t.sign_fn(scope, "mul") for t in self.args)
        out = self.eq.sign_fn(scope, "mul")
        return lambda env: out(env) == sign_mul(f(env), g(env))


@dataclass(frozen=True)
class NegC(Constraint):
    arg: Term
    eq: Term

    def variables(self):
        return self.arg.variables() | self.eq.variables()

    def compile(self, scope):
        f, out = self.arg.sign_fn(scope, "neg"), self.eq.sign_fn(scope, "neg")
        return lambda env: out(env) == sign_negate(f(env))


@dataclass(frozen=True)
class Table(Constraint):
    """Extensional constraint; a list in a row cell means any of those values."""

    vars: tuple[str, ...]
    rows: tuple[tuple[Any, ...], ...]

    def variables(self):
        return set(self.vars)

    def expanded(self, scope: Scope | None = None) -> frozenset[tuple[str, ...]]:
        out = set()
        for row in self.rows:
            if len(row) != len(self.vars):
                raise TypeCheckError(f"table row {list(row)} does not match {list(self.vars)}")
            cells = [cell if isinstance(cell, (list, tuple)) else (cell,) for cell in row]
            if scope is not None:
                for name, cell in zip(self.vars, cells):
                    dom = Var(name).domain(scope)
                    for value in cell:
                        if value not in dom:
                            raise TypeCheckError(
                                f"table: value {value!r} is not in domain {dom.name} of {name}")
            out.update(itertools.product(*cells))
        return frozenset(out)

    def compile(self, scope):
        allowed = self.expanded(scope)
        names = self.vars
        return lambda env: tuple(env[n] for n in names) in allowed


# ---------------------------------------------------------------- parsing

def parse_term(obj: Any, path: str = "") -> Term:
    if isinstance(obj, str):
        return Var(obj)
    if isinstance(obj, dict) and len(obj) == 1:
        (key, val), = obj.items()
        if key == "lit":
            return Lit(str(val))
        if key == "neg":
            return Neg(parse_term(val, path))
        if key == "sign":
            return SignOf(parse_term(val, path))
        if key == "mul" and isinstance(val, list) and len(val) == 2:
            return Mul(parse_term(val[0], path), parse_term(val[1], path))
    raise ModelError(f"{path}: malformed term {obj!r}")


def _terms(obj: Any, path: str) -> tuple[Term, ...]:
    if not isinstance(obj, list):
        raise ModelError(f"{path}: expected a list of terms")
    return tuple(parse_term(t, path) for t in obj)


def parse_constraint(obj: Any, path: str = "") -> Constraint:
    """Build a constraint from its JSON form.

    ``{"op": "eq"|"neq", "args": [t, t]}``, ``{"op": "in", "arg": t, "values": [...]}``,
    ``{"op": "imply", "if": c, "then": c}``, ``{"op": "and"|"or", "args": [c, ...]}``,
    ``{"op": "add", "args": [t, ...], "eq": t}``, ``{"op": "mul", "args": [t, t], "eq": t}``,
    ``{"op": "neg", "arg": t, "eq": t}``, ``{"op": "table", "vars": [...], "rows": [[...]]}``.
    """
    if not isinstance(obj, dict) or "op" not in obj:
        raise ModelError(f"{path}: constraint must be an object with an 'op' field")
    op = obj["op"]
    try:
        if op in ("eq", "neq"):
            left, right = _terms(obj["args"], path)
            return (Eq if op == "eq" else Neq)(left, right)
        if op == "in":
            return In(parse_term(obj["arg"], path), tuple(str(v) for v in obj["values"]))
        if op == "imply":
            return Imply(parse_constraint(obj["if"], path + "/if"),
                         parse_constraint(obj["then"], path + "/then"))
        if op in ("and", "or"):
            args = tuple(parse_constraint(c, f"{path}/{i}") for i, c in enumerate(obj["args"]))
            return (And if op == "and" else Or)(args)
        if op == "add":
            return Add(_terms(obj["args"], path), parse_term(obj["eq"], path))
        if op == "mul":
            left, right = _terms(obj["args"], path)
            return MulC((left, right), parse_term(obj["eq"], path))
        if op == "neg":
            return NegC(parse_term(obj["arg"], path), parse_term(obj["eq"], path))
        if op == "table":
            rows = tuple(tuple(tuple(str(x) for x in c) if isinstance(c, list) else str(c)
                               for c in row) for row in obj["rows"])
            return Table(tuple(obj["vars"]), rows)
    except (KeyError, ValueError, TypeError) as exc:
        raise ModelError(f"{path}: malformed {op!r} constraint ({exc})") from None
    raise ModelError(f"{path}: unknown constraint op {op!r}")


def check(constraints: Sequence[Constraint], scope: Scope, where: str) -> list[Callable[[Env], bool]]:
    """Type-check and compile, prefixing errors with ``where``."""
    out = []
    for i, c in enumerate(constraints):
        try:
            out.append(c.compile(scope))
        except TypeCheckError as exc:
            raise TypeCheckError(f"{where}, constraint {i}: {exc}") from None
    return out
