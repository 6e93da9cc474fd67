from __future__ import annotations

import itertools

import pytest

from qfmea.constraints import Table, TypeCheckError, check, parse_constraint
from qfmea.errors import ModelError
from qfmea.signs import SIGN, SIGNS, sign_add_many, sign_mul

from conftest import BOOL

SCOPE = {"a": SIGN, "b": SIGN, "c": SIGN, "s": BOOL}


def satisfying(obj, names=("a", "b", "c")):
    fn, = check([parse_constraint(obj)], SCOPE, "test")
    doms = [SCOPE[n].values for n in names]
    return {vals for vals in itertools.product(*doms) if fn(dict(zip(names, vals)))}


def test_add_constraint_is_sign_sum():
    got = satisfying({"op": "add", "args": ["a", "b"], "eq": "c"})
    assert got == {(a, b, c) for a in SIGNS for b in SIGNS for c in sign_add_many([a, b])}


def test_mul_and_neg_constraints():
    assert satisfying({"op": "mul", "args": ["a", "b"], "eq": "c"}) == {
        (a, b, sign_mul(a, b)) for a in SIGNS for b in SIGNS}
    assert satisfying({"op": "neg", "arg": "a", "eq": "b"}, ("a", "b")) == {("-", "+"), ("0", "0"), ("+", "-")}


def test_boolean_embeds_into_signs():
    # s=1 counts as +, s=0 as 0.
    got = satisfying({"op": "mul", "args": ["s", "a"], "eq": "b"}, ("s", "a", "b"))
    assert ("1", "-", "-") in got and ("0", "-", "0") in got and ("1", "-", "0") not in got


def test_implication_is_material():
    got = satisfying({"op": "imply", "if": {"op": "eq", "args": ["s", {"lit": "1"}]},
                      "then": {"op": "eq", "args": ["a", "b"]}}, ("s", "a", "b"))
    assert len(got) == 9 + 3


def test_table_cells_may_list_alternatives():
    t = parse_constraint({"op": "table", "vars": ["a", "s"], "rows": [[["-", "+"], "1"], ["0", "0"]]})
    assert isinstance(t, Table)
    assert t.expanded(SCOPE) == {("-", "1"), ("+", "1"), ("0", "0")}


@pytest.mark.parametrize("obj", [
    {"op": "eq", "args": ["s", {"lit": "2"}]},
    {"op": "eq", "args": ["s", "a"]},
    {"op": "in", "arg": "a", "values": ["++"]},
    {"op": "eq", "args": ["nope", {"lit": "0"}]},
    {"op": "table", "vars": ["a"], "rows": [["x"]]},
])
def test_type_errors(obj):
    with pytest.raises(TypeCheckError):
        check([parse_constraint(obj)], SCOPE, "test")


@pytest.mark.parametrize("obj", [
    {"args": ["a", "b"]},
    {"op": "frobnicate"},
    {"op": "eq", "args": ["a"]},
    {"op": "mul", "args": [{"mul": ["a"]}, "b"], "eq": "c"},
])
def test_malformed_constraints(obj):
    with pytest.raises(ModelError):
        parse_constraint(obj)
