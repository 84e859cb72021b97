"""Checks on raw model output: the compact-JSON contract and the style rules."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Union

from .errors import MissingKey, ParseError

FIRST_PERSON = ("i", "me", "my", "mine", "we", "our")
_FIRST_PERSON_RE = re.compile(r"\b(" + "|".join(FIRST_PERSON) + r")\b", re.IGNORECASE)
_FENCE_RE = re.compile(r"```(?:json|JSON)?")
_TRAILING_COMMA_RE = re.compile(r",\s*([}\]])")


class ParsedOutput(NamedTuple):
    value: str
    repaired: bool


@dataclass(frozen=True)
class FirstPerson:
    token: str

    def describe(self) -> str:
        return f"uses the first-person pronoun {self.token!r}"


@dataclass(frozen=True)
class MultiLine:
    def describe(self) -> str:
        return "spans more than one line"


Violation = Union[FirstPerson, MultiLine]


def _norm_key(key: str) -> str:
    return re.sub(r"[\s_\-]+", " ", key.strip().lower())


def _lookup(obj: dict, keys: Iterable[str]):
    wanted = {_norm_key(k) for k in keys}
    for k, v in obj.items():
        if isinstance(k, str) and _norm_key(k) in wanted:
            return v
    raise MissingKey(f"JSON object has none of the keys {sorted(wanted)}")


def _value(obj, keys) -> str:
    if not isinstance(obj, dict):
        raise ParseError("output is JSON but not an object")
    value = _lookup(obj, keys)
    if not isinstance(value, str) or not value.strip():
        raise ParseError("value is not a non-empty string")
    return value


def _balanced_spans(text: str):
    """Yield every ``{...}`` span whose braces balance, outermost first."""
    for start, ch in enumerate(text):
        if ch != "{":
            continue
        depth = 0
        in_str = escaped = False
        for end in range(start, len(text)):
            c = text[end]
            if in_str:
                if escaped:
                    escaped = False
                elif c == "\\":
                    escaped = True
                elif c == '"':
                    in_str = False
            elif c == '"':
                in_str = True
            elif c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    yield text[start : end + 1]
                    break


def parse_model_json(raw: str, key: str, aliases: Iterable[str] = ()) -> ParsedOutput:
    """Extract ``key`` from a model's JSON answer.

    The strict path requires ``raw`` to be exactly one JSON object.  Failing
    that, chatter and code fences around the object are dropped and the
    first balanced ``{...}`` span holding the key is used; such results come
    back with ``repaired=True``.
    """
    if not raw or not raw.strip():
        raise ParseError("empty output")
    keys = (key, *aliases)
    try:
        obj = json.loads(raw)
    except ValueError:
        pass
    else:
        if isinstance(obj, dict):
            return ParsedOutput(_value(obj, keys), False)
        # valid JSON of another shape (say a list wrapping the object): try repair

    text = _FENCE_RE.sub(" ", raw)
    missing: MissingKey | None = None
    for span in _balanced_spans(text):
        for candidate in (span, _TRAILING_COMMA_RE.sub(r"\1", span)):
            try:
                obj = json.loads(candidate)
            except ValueError:
                continue
            try:
                return ParsedOutput(_value(obj, keys), True)
            except MissingKey as exc:
                missing = missing or exc
            except ParseError:
                pass
            break
    if missing is not None:
        raise missing
    raise ParseError("no JSON object could be recovered from the output")


def validate_style(text: str) -> list[Violation]:
    violations: list[Violation] = [FirstPerson(m.group(0)) for m in _FIRST_PERSON_RE.finditer(text)]
    if "\n" in text or "\r" in text:
        violations.append(MultiLine())
    return violations
