"""Interval arithmetic on signs, as functions and as relations.

A sign stands for an interval: ``-`` is (-inf, 0), ``0`` is [0, 0] and
``+`` is (0, inf).  Addition is set-valued because the sum of a positive and
a negative number can land anywhere.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .relation import QualDomain, Relation, VarRef

SIGNS = ("-", "0", "+")
SIGN = QualDomain("Sign", SIGNS)

_NEG = {"-": "+", "0": "0", "+": "-"}
_ALL = frozenset(SIGNS)


def sign_add(a: str, b: str) -> frozenset[str]:
    if a == "0":
        return frozenset({b})
    if b == "0" or a == b:
        return frozenset({a})
    return _ALL


def sign_add_many(signs: Iterable[str]) -> frozenset[str]:
    """Fold :func:`sign_add` over any number of operands (empty sum is 0)."""
    acc = frozenset({"0"})
    for s in signs:
        acc = frozenset().union(*(sign_add(x, s) for x in acc))
        if acc == _ALL:
            return acc
    return acc


def sign_mul(a: str, b: str) -> str:
    if a == "0" or b == "0":
        return "0"
    return "+" if a == b else "-"


def sign_negate(a: str) -> str:
    return _NEG[a]


def sign_of_number(x: Fraction | int | float) -> str:
    return "+" if x > 0 else "-" if x < 0 else "0"


def deviation(actual: Fraction | int | float | bool, nominal: Fraction | int | float | bool) -> str:
    """Qualitative deviation: the sign of actual minus nominal.

    Booleans are embedded as 0/1, so an actual ``False`` where ``True`` was
    expected deviates negatively.
    """
    return sign_of_number(Fraction(int(actual) if isinstance(actual, bool) else actual)
                          - Fraction(int(nominal) if isinstance(nominal, bool) else nominal))


def as_relation(op: str, variables: Sequence[VarRef]) -> Relation:
    """The extensional relation of a sign operator over (inputs..., output).

    ``add`` and ``mul`` take two inputs, ``negate`` one.  Subtraction is
    ``add`` with a negated operand and has no operator of its own.
    """
    for v in variables:
        if v.domain.values != SIGNS:
            raise ValueError(f"{v} is not sign-valued")
    if op == "add":
        a, b, c = variables
        rows = [(x, y, z) for x in SIGNS for y in SIGNS for z in sign_add(x, y)]
    elif op == "mul":
        a, b, c = variables
        rows = [(x, y, sign_mul(x, y)) for x in SIGNS for y in SIGNS]
    elif op in ("negate", "neg"):
        a, c = variables
        rows = [(x, sign_negate(x)) for x in SIGNS]
    else:
        raise ValueError(f"unknown sign operator {op!r}")
    return Relation(variables, rows)
