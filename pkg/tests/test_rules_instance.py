import json
from fractions import Fraction

import pytest

from hodgelocus.instance import (
    InstanceError,
    dumps,
    fixture_names,
    fixture_path,
    from_json,
    load,
    load_fixture,
    loads,
)
from hodgelocus.rules import Rule, RuleError, VectorRule, as_callable

# --- rules -------------------------------------------------------------------


def test_rules_stay_exact():
    assert Rule("m**2 + 1/2").exact(3) == Fraction(19, 2)
    assert Rule("floor(m/3)").exact(10) == 3
    assert VectorRule(["m", "2*m", "-1"]).integral(4) == (4, 8, -1)
    assert VectorRule(["m/2"]).integral(3) is None


def test_rules_float_and_complex():
    assert Rule("exp(-m)")(0) == 1.0
    assert Rule("cos(pi*m)")(1) == pytest.approx(-1)
    assert VectorRule(["I*m", "1"])(2)[0] == 2j
    assert Rule(3)(7) == 3.0
    assert as_callable(["m"])(5)[0] == 5


@pytest.mark.parametrize(
    "src",
    ["__import__('os')", "m.real", "[m]", "lambda: 1", "open('x')", "m if m else 1", "exp(m, 2)", "x + 1", "'a'"],
)
def test_unsafe_or_unknown_syntax_rejected(src):
    with pytest.raises(RuleError):
        Rule(src)


def test_rule_errors_are_reported():
    with pytest.raises(RuleError, match="divides by zero"):
        Rule("1/(m-2)").exact(2)
    with pytest.raises(RuleError, match="cannot parse"):
        Rule("m +")
    with pytest.raises(RuleError):
        VectorRule("m")


# --- instances ---------------------------------------------------------------


def test_fixture_catalogue():
    assert fixture_names() == ["i_2var", "i_cy5", "i_k3", "i_triv", "odp"]
    assert fixture_path("nope") is None
    with pytest.raises(InstanceError):
        load_fixture("nope")


@pytest.mark.parametrize("name", ["i_triv", "i_k3", "i_cy5", "i_2var", "odp"])
def test_round_trip_is_canonical(name):
    inst = load_fixture(name)
    text = inst.dumps()
    again = loads(text)
    assert again.dumps() == text
    assert again.period().rank == inst.period().rank


def test_load_from_path(tmp_path):
    path = tmp_path / "k3.json"
    path.write_text(load_fixture("i_k3").dumps())
    assert load(path).name == "i_k3"
    assert load(str(path)).rank == 3


def base_doc():
    return json.loads(load_fixture("i_k3").dumps())


@pytest.mark.parametrize(
    "edit,where",
    [
        (lambda d: d.update(Q=[[0, 0, 1.0], [0, -1, 0], [1, 0, 0]]), "Q"),
        (lambda d: d.update(rank=0), "rank"),
        (lambda d: d.pop("N"), "N"),
        (lambda d: d.update(bogus=1), "bogus"),
        (lambda d: d.update(schema=2), "schema"),
        (lambda d: d["N"][0][0].__setitem__(0, "1/2"), "N[0]"),
        (lambda d: d.update(Gamma=[{"exponent": [0], "coeff": d["N"][0]}]), "Gamma[0].exponent"),
        (lambda d: d.update(Gamma=[{"exponent": [1]}]), "Gamma[0]"),
        (lambda d: d["sequences"][0].update(h_rule=["0", "1"]), "sequences[0]"),
    ],
)
def test_field_precise_errors(edit, where):
    doc = base_doc()
    edit(doc)
    with pytest.raises(InstanceError) as info:
        from_json(doc)
    assert info.value.where.startswith(where), info.value


def test_malformed_text():
    with pytest.raises(InstanceError):
        loads("{not json")
    with pytest.raises(InstanceError):
        loads("[]")


def test_dumps_is_deterministic():
    doc = {"b": [1, 2], "a": {"z": 1, "y": "1/2"}}
    assert dumps(doc) == dumps(json.loads(dumps(doc)))
    assert dumps(doc).index('"a"') < dumps(doc).index('"b"')
