"""Deterministic in-process stand-ins for the chat and embeddings endpoints.

The template behaviours write summaries whose emotional vocabulary tracks a
PHQ-8 score: synthesis outputs carry ``score`` severity markers drawn from
the score's band and ``24 - score`` positive markers, and summary outputs
copy whatever markers appear in the transcript.  That is enough signal for
desk-scale utility experiments with the hashing embedder.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass, field
from typing import Sequence

import httpx

from .corpus import PHQ8_MAX

# one row per severity band, lowest first
BAND_MARKERS = (
    ("wistful", "pensive", "bored", "unsettled"),
    ("tired", "uneasy", "restless", "distracted"),
    ("sad", "withdrawn", "anxious", "irritable"),
    ("hopeless", "exhausted", "worthless", "isolated"),
    ("despairing", "numb", "overwhelmed", "anguished"),
)
POSITIVE_MARKERS = ("cheerful", "engaged", "motivated", "relaxed")
HIGH_SEVERITY_MARKERS = BAND_MARKERS[-1]
MARKER_VOCABULARY = frozenset(POSITIVE_MARKERS).union(*BAND_MARKERS)

ROLES = ("nurse", "mechanic", "teacher", "chef", "student", "driver", "painter", "clerk")
SETTINGS = (
    "a coastal town", "a mountain village", "a busy city",
    "a farming county", "a university campus", "a river port",
)

GARBAGE_TEXT = "Sorry about that, here is the output you wanted: synopsis = participant seems fine"

_SCORE_RE = re.compile(r"depression/PHQ8 score of (\d+)")
_OG_ITEM_RE = re.compile(r"^(synopsis|sentiment): ", re.MULTILINE)
_SUMMARY_ITEM_RE = re.compile(r"tasked with generating a (synopsis|sentiment) based")
_TRANSCRIPT_RE = re.compile(r"^Transcript: (.*?)\nInstructions:", re.MULTILINE | re.DOTALL)


class MockTransportFailure(Exception):
    """Raised by a behaviour to simulate a connection failure."""


def _digest(text: str) -> bytes:
    return hashlib.sha256(text.encode("utf-8")).digest()


def _storyline(text: str) -> tuple[str, str]:
    h = _digest(text)
    return ROLES[h[0] % len(ROLES)], SETTINGS[h[1] % len(SETTINGS)]


def band_index(score: int) -> int:
    return min(score // 5, len(BAND_MARKERS) - 1)


def marker_words(score: int) -> list[str]:
    """Emotional tokens for a score: severity markers then positive markers."""
    severe = BAND_MARKERS[band_index(score)]
    words = [severe[i % len(severe)] for i in range(score)]
    words += [POSITIVE_MARKERS[i % len(POSITIVE_MARKERS)] for i in range(PHQ8_MAX - score)]
    return words


def compact_json(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def synthetic_text(item: str, score: int, seed_text: str) -> str:
    role, setting = _storyline(seed_text)
    words = " ".join(marker_words(score))
    if item == "synopsis":
        return f"The participant is a {role} living in {setting} who describes recent weeks and reports feeling {words}."
    return f"The participant expresses {words} while talking about life as a {role}."


def summary_text(item: str, transcript: str) -> str:
    role, setting = _storyline(transcript)
    found = [w for w in re.findall(r"[a-z]+", transcript.lower()) if w in MARKER_VOCABULARY]
    words = " ".join(found) if found else "little emotion"
    if item == "synopsis":
        return f"The participant talks about work as a {role} in {setting} and reports feeling {words}."
    return f"The participant conveys {words} across the interview."


class MockBehavior:
    def respond(self, request: dict) -> str:
        raise NotImplementedError


def _user_text(request: dict) -> str:
    for msg in request.get("messages", []):
        if msg.get("role") == "user":
            return msg.get("content", "")
    return ""


class Echo(MockBehavior):
    def respond(self, request):
        return _user_text(request)


class TemplateSummary(MockBehavior):
    def respond(self, request):
        prompt = _user_text(request)
        m_item = _SUMMARY_ITEM_RE.search(prompt)
        m_tx = _TRANSCRIPT_RE.search(prompt)
        if not (m_item and m_tx):
            return GARBAGE_TEXT
        item = m_item.group(1)
        return compact_json({item: summary_text(item, m_tx.group(1))})


class TemplateSynthesis(MockBehavior):
    def respond(self, request):
        prompt = _user_text(request)
        m_score = _SCORE_RE.search(prompt)
        m_item = _OG_ITEM_RE.search(prompt)
        if not (m_score and m_item):
            return GARBAGE_TEXT
        score = min(int(m_score.group(1)), PHQ8_MAX)
        item = m_item.group(1)
        return compact_json({item: synthetic_text(item, score, prompt)})


class Template(MockBehavior):
    """Routes summary prompts and synthesis prompts to their template mocks."""

    def __init__(self):
        self._summary = TemplateSummary()
        self._synthesis = TemplateSynthesis()

    def respond(self, request):
        if _SCORE_RE.search(_user_text(request)):
            return self._synthesis.respond(request)
        return self._summary.respond(request)


class Garbage(MockBehavior):
    def respond(self, request):
        return GARBAGE_TEXT


@dataclass
class FailNTimes(MockBehavior):
    """Fail the first ``n`` calls, then defer to ``then``.

    With ``status`` unset the failure is a dropped connection; otherwise the
    server answers with that HTTP status.
    """

    n: int
    then: MockBehavior = field(default_factory=Echo)
    status: int | None = None
    calls: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def respond(self, request):
        with self._lock:
            self.calls += 1
            failing = self.calls <= self.n
        if failing:
            if self.status is None:
                raise MockTransportFailure(f"scripted failure {self.calls}/{self.n}")
            raise _HTTPStatus(self.status)
        return self.then.respond(request)


class Scripted(MockBehavior):
    """Return the given responses in order, repeating the last one."""

    def __init__(self, responses: Sequence[str]):
        if not responses:
            raise ValueError("responses must be non-empty")
        self.responses = list(responses)
        self.calls = 0
        self._lock = threading.Lock()

    def respond(self, request):
        with self._lock:
            i = min(self.calls, len(self.responses) - 1)
            self.calls += 1
        return self.responses[i]


class MissingChoices(MockBehavior):
    """Marker behaviour: the server replies with a body lacking ``choices``."""

    def respond(self, request):
        return ""


class _HTTPStatus(Exception):
    def __init__(self, status: int):
        self.status = status


BEHAVIORS = {"echo": Echo, "template": Template, "garbage": Garbage}


def behavior_from_name(name: str) -> MockBehavior:
    try:
        return BEHAVIORS[name]()
    except KeyError:
        raise ValueError(f"unknown mock behaviour {name!r}; choose from {sorted(BEHAVIORS)}") from None


def mock_complete(behavior: MockBehavior, request: dict) -> dict:
    """Chat-completions response body for ``request``.

    Raises :class:`MockTransportFailure` when the behaviour models a dropped
    connection.
    """
    if isinstance(behavior, MissingChoices):
        return {"id": "mock", "object": "chat.completion"}
    content = behavior.respond(request)
    return {
        "id": "mock-" + hashlib.sha256(compact_json(request).encode()).hexdigest()[:16],
        "object": "chat.completion",
        "model": request.get("model", "mock"),
        "choices": [
            {"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}
        ],
    }


class MockChatServer:
    """httpx handler serving ``/v1/chat/completions`` from a behaviour.

    Every request is recorded (headers and decoded body) for inspection.
    With ``reject_extensions`` the server answers 400 to bodies carrying
    ``repetition_penalty``, like strict OpenAI-compatible servers do.
    """

    def __init__(self, behavior: MockBehavior, *, reject_extensions: bool = False):
        self.behavior = behavior
        self.reject_extensions = reject_extensions
        self.requests: list[tuple[dict, dict]] = []
        self._lock = threading.Lock()

    def __call__(self, request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content.decode("utf-8"))
        with self._lock:
            self.requests.append((dict(request.headers), body))
        if not request.url.path.endswith("/v1/chat/completions"):
            return httpx.Response(404, json={"error": "not found"})
        if self.reject_extensions and "repetition_penalty" in body:
            return httpx.Response(400, json={"error": "unknown field repetition_penalty"})
        try:
            payload = mock_complete(self.behavior, body)
        except MockTransportFailure as exc:
            raise httpx.ConnectError(str(exc), request=request) from None
        except _HTTPStatus as exc:
            return httpx.Response(exc.status, json={"error": "scripted status"})
        return httpx.Response(200, content=compact_json(payload).encode("utf-8"),
                              headers={"Content-Type": "application/json"})

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self)


class MockEmbeddingServer:
    """httpx handler serving ``/v1/embeddings``.

    Vectors are derived from a hash of each input string.  ``dims`` lists
    the dimension to use for successive requests (the last one repeats), so
    a test can make the server change dimension mid-run.
    """

    def __init__(self, dims: Sequence[int] = (8,)):
        self.dims = list(dims)
        self.calls = 0
        self.inputs: list[list[str]] = []
        self._lock = threading.Lock()

    @staticmethod
    def vector(text: str, dim: int) -> list[float]:
        out = []
        counter = 0
        while len(out) < dim:
            h = hashlib.sha256(f"{counter}:{text}".encode("utf-8")).digest()
            out.extend((b - 127.5) / 127.5 for b in h)
            counter += 1
        return out[:dim]

    def __call__(self, request: httpx.Request) -> httpx.Response:
        if not request.url.path.endswith("/v1/embeddings"):
            return httpx.Response(404, json={"error": "not found"})
        body = json.loads(request.content.decode("utf-8"))
        with self._lock:
            dim = self.dims[min(self.calls, len(self.dims) - 1)]
            self.calls += 1
            self.inputs.append(list(body["input"]))
        data = [
            {"object": "embedding", "index": i, "embedding": self.vector(text, dim)}
            for i, text in enumerate(body["input"])
        ]
        return httpx.Response(200, json={"object": "list", "data": data, "model": body.get("model")})

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self)
