import pytest

from cotsynth.errors import MissingKey, ParseError
from cotsynth.outputs import FirstPerson, MultiLine, parse_model_json, validate_style


def test_strict():
    assert parse_model_json('{"synopsis":"abc"}', "synopsis") == ("abc", False)


def test_chatter_repaired():
    out = parse_model_json('Sure! {"sentiment":"sad"} Hope this helps.', "sentiment")
    assert out.value == "sad" and out.repaired


def test_not_json():
    with pytest.raises(ParseError):
        parse_model_json("not json at all", "synopsis")
    with pytest.raises(ParseError):
        parse_model_json("   ", "synopsis")


def test_missing_key():
    with pytest.raises(MissingKey):
        parse_model_json('{"other":"x"}', "synopsis")
    with pytest.raises(MissingKey):
        parse_model_json('ok {"other":"x"} done', "synopsis")


def test_strict_non_object():
    with pytest.raises(ParseError):
        parse_model_json('["synopsis"]', "synopsis")


def test_aliases_and_key_normalisation():
    assert parse_model_json('{"synthetic synopsis":"v"}', "synopsis", ("synthetic synopsis",)).value == "v"
    assert parse_model_json('{"Synthetic_Synopsis":"v"}', "synopsis", ("synthetic synopsis",)).value == "v"
    assert parse_model_json('{"SYNOPSIS":"v"}', "synopsis").value == "v"


def test_braces_inside_strings():
    out = parse_model_json('note: {"synopsis":"uses } and { inside"} end', "synopsis")
    assert out.value == "uses } and { inside"


def test_fences_and_trailing_comma():
    raw = '```json\n{"synopsis":"x",}\n```'
    assert parse_model_json(raw, "synopsis") == ("x", True)


def test_non_string_value_rejected():
    with pytest.raises(ParseError):
        parse_model_json('{"synopsis": 3}', "synopsis")


def test_style():
    assert validate_style("The participant reports sadness.") == []
    assert validate_style("I am sad.") == [FirstPerson("I")]
    assert validate_style("line1\nline2") == [MultiLine()]
    assert validate_style("Mine and our plans, we said.") == [FirstPerson("Mine"), FirstPerson("our"), FirstPerson("we")]
    assert validate_style("Immediate timing is mild.") == []


def test_list_wrapped_object_is_repaired():
    assert parse_model_json('[{"synopsis":"x"}]', "synopsis") == ("x", True)
