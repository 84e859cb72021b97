"""Interview transcripts, PHQ-8 labels and split manifests.

Transcript files are tab-separated with the header
``start_time<TAB>stop_time<TAB>speaker<TAB>value``; the interviewer is
recorded as ``Ellie``.  Labels are ``session_id,phq8_score`` and splits are
``session_id,split``.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    DataError,
    DuplicateSession,
    EmptyCorpus,
    EmptyTranscript,
    MalformedRow,
    ScoreOutOfRange,
    UnknownSpeaker,
)

PHQ8_MIN = 0
PHQ8_MAX = 24
N_SCORES = PHQ8_MAX - PHQ8_MIN + 1
DEPRESSION_CUTOFF = 10

TRANSCRIPT_HEADER = ("start_time", "stop_time", "speaker", "value")
TRANSCRIPT_SUFFIXES = ("_TRANSCRIPT.tsv", "_TRANSCRIPT.csv")


class Speaker(enum.Enum):
    INTERVIEWER = "Ellie"
    PARTICIPANT = "Participant"

    @classmethod
    def parse(cls, raw: str) -> "Speaker":
        key = raw.strip().lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(raw)


class Split(enum.Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"

    @classmethod
    def parse(cls, raw: str) -> "Split":
        return cls(raw.strip().lower())


@dataclass(frozen=True)
class Turn:
    start_s: float
    stop_s: float
    speaker: Speaker
    text: str

    def __post_init__(self):
        if not (math.isfinite(self.start_s) and math.isfinite(self.stop_s)):
            raise ValueError("turn times must be finite")
        if self.start_s < 0:
            raise ValueError("start_s must be non-negative")
        if self.stop_s < self.start_s:
            raise ValueError("stop_s precedes start_s")
        if not self.text.strip():
            raise ValueError("turn text is empty")


@dataclass(frozen=True)
class InterviewTranscript:
    session_id: str
    turns: tuple[Turn, ...]
    phq8: int | None = None
    split: Split | None = None

    def __post_init__(self):
        if self.phq8 is not None:
            check_score(self.phq8, context=self.session_id)
        if not any(t.speaker is Speaker.PARTICIPANT for t in self.turns):
            raise EmptyTranscript(f"{self.session_id}: no Participant turns")
        for prev, cur in zip(self.turns, self.turns[1:]):
            if cur.start_s < prev.start_s:
                raise ValueError(f"{self.session_id}: turns out of order")

    def with_label(self, phq8: int, split: Split | None = None) -> "InterviewTranscript":
        return InterviewTranscript(self.session_id, self.turns, phq8, split)

    @property
    def depressed(self) -> bool:
        if self.phq8 is None:
            raise DataError(f"{self.session_id} is unlabeled")
        return self.phq8 >= DEPRESSION_CUTOFF


@dataclass(frozen=True)
class ScoreDistribution:
    """Per-split PHQ-8 histograms over the 25 integer scores."""

    bins: Mapping[str, tuple[int, ...]] = field(default_factory=dict)
    depressed_count: int = 0
    total: int = 0

    @property
    def total_bins(self) -> tuple[int, ...]:
        out = [0] * N_SCORES
        for counts in self.bins.values():
            for i, c in enumerate(counts):
                out[i] += c
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "bins": {k: list(v) for k, v in self.bins.items()},
            "depressed_count": self.depressed_count,
            "total": self.total,
        }


def check_score(score, context: str = "") -> int:
    if isinstance(score, bool) or not isinstance(score, int):
        raise ScoreOutOfRange(score, context)
    if not PHQ8_MIN <= score <= PHQ8_MAX:
        raise ScoreOutOfRange(score, context)
    return score


def parse_transcript(raw: str, session_id: str, source: str | None = None) -> InterviewTranscript:
    """Parse one tab-separated transcript into an unlabeled transcript."""
    source = source or session_id
    lines = raw.splitlines()
    if not lines:
        raise EmptyTranscript(f"{source}: file is empty")
    header = tuple(c.strip().lower() for c in lines[0].lstrip("﻿").split("\t"))
    if header != TRANSCRIPT_HEADER:
        raise MalformedRow(1, f"expected header {'<TAB>'.join(TRANSCRIPT_HEADER)}", source)

    turns = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise MalformedRow(lineno, f"expected 4 columns, found {len(cols)}", source)
        start, stop, speaker, text = cols
        try:
            start_s, stop_s = float(start), float(stop)
        except ValueError:
            raise MalformedRow(lineno, "non-numeric time", source) from None
        try:
            who = Speaker.parse(speaker)
        except ValueError:
            raise UnknownSpeaker(lineno, speaker, source) from None
        try:
            turn = Turn(start_s, stop_s, who, text.strip())
        except ValueError as exc:
            raise MalformedRow(lineno, str(exc), source) from None
        if turns and turn.start_s < turns[-1].start_s:
            raise MalformedRow(lineno, "start_time decreases", source)
        turns.append(turn)

    if not any(t.speaker is Speaker.PARTICIPANT for t in turns):
        raise EmptyTranscript(f"{source}: no Participant turns")
    return InterviewTranscript(session_id, tuple(turns))


def serialize_transcript(t: InterviewTranscript) -> str:
    out = ["\t".join(TRANSCRIPT_HEADER)]
    for turn in t.turns:
        out.append(f"{turn.start_s!r}\t{turn.stop_s!r}\t{turn.speaker.value}\t{turn.text}")
    return "\n".join(out) + "\n"


def _read_csv(raw: str, header: tuple[str, ...], source: str) -> Iterable[tuple[int, list[str]]]:
    reader = csv.reader(io.StringIO(raw.lstrip("﻿")))
    rows = list(reader)
    if not rows or tuple(c.strip().lower() for c in rows[0]) != header:
        raise MalformedRow(1, f"expected header {','.join(header)}", source)
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not any(c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise MalformedRow(lineno, f"expected {len(header)} columns, found {len(row)}", source)
        yield lineno, [c.strip() for c in row]


def load_labels(raw: str, source: str = "labels.csv") -> dict[str, int]:
    labels: dict[str, int] = {}
    for lineno, (sid, score) in _read_csv(raw, ("session_id", "phq8_score"), source):
        if not sid:
            raise MalformedRow(lineno, "empty session_id", source)
        try:
            value = int(score)
        except ValueError:
            raise MalformedRow(lineno, f"score {score!r} is not an integer", source) from None
        check_score(value, context=f"{source}:{lineno}")
        if sid in labels:
            raise DuplicateSession(f"{source}:{lineno}: duplicate session {sid!r}")
        labels[sid] = value
    return labels


def load_splits(raw: str, source: str = "splits.csv") -> dict[str, Split]:
    splits: dict[str, Split] = {}
    for lineno, (sid, name) in _read_csv(raw, ("session_id", "split"), source):
        try:
            split = Split.parse(name)
        except ValueError:
            raise MalformedRow(lineno, f"unknown split {name!r}", source) from None
        if sid in splits:
            raise DuplicateSession(f"{source}:{lineno}: duplicate session {sid!r}")
        splits[sid] = split
    return splits


def load_corpus(corpus_dir, labels_path, splits_path) -> list[InterviewTranscript]:
    """Read every transcript in ``corpus_dir`` and attach labels and splits.

    Sessions are returned sorted by id.  Every transcript must have a label
    and a split assignment, and every labelled session must have a file.
    """
    corpus_dir = Path(corpus_dir)
    labels = load_labels(Path(labels_path).read_text(encoding="utf-8"), str(labels_path))
    splits = load_splits(Path(splits_path).read_text(encoding="utf-8"), str(splits_path))

    files: dict[str, Path] = {}
    for path in sorted(corpus_dir.iterdir()):
        for suffix in TRANSCRIPT_SUFFIXES:
            if path.name.endswith(suffix):
                sid = path.name[: -len(suffix)]
                if sid in files:
                    raise DuplicateSession(f"two transcript files for session {sid!r}")
                files[sid] = path

    missing = sorted(set(labels) - set(files))
    if missing:
        raise DataError(f"labelled sessions without transcript files: {', '.join(missing)}")

    corpus = []
    for sid, path in sorted(files.items()):
        if sid not in labels:
            raise DataError(f"{path}: session {sid!r} has no label")
        if sid not in splits:
            raise DataError(f"{path}: session {sid!r} missing from split manifest")
        t = parse_transcript(path.read_text(encoding="utf-8"), sid, source=str(path))
        corpus.append(t.with_label(labels[sid], splits[sid]))
    return corpus


def select_split(corpus: Iterable[InterviewTranscript], split: Split) -> list[InterviewTranscript]:
    return [t for t in corpus if t.split is split]


def participant_text(t: InterviewTranscript) -> str:
    return " ".join(turn.text for turn in t.turns if turn.speaker is Speaker.PARTICIPANT)


def word_count(text: str) -> int:
    return len(text.split())


def score_distribution(corpus: Iterable[InterviewTranscript]) -> ScoreDistribution:
    bins: dict[str, list[int]] = {}
    depressed = total = 0
    for t in corpus:
        if t.phq8 is None:
            raise DataError(f"{t.session_id} is unlabeled")
        key = t.split.value if t.split is not None else "unassigned"
        bins.setdefault(key, [0] * N_SCORES)[t.phq8] += 1
        depressed += t.phq8 >= DEPRESSION_CUTOFF
        total += 1
    return ScoreDistribution({k: tuple(v) for k, v in bins.items()}, depressed, total)


def corpus_stats(corpus: Iterable[InterviewTranscript]) -> dict:
    counts = [word_count(participant_text(t)) for t in corpus]
    if not counts:
        raise EmptyCorpus("corpus_stats needs at least one transcript")
    return {"avg_words": sum(counts) / len(counts), "max_words": max(counts)}


def transcript_to_dict(t: InterviewTranscript) -> dict:
    return {
        "session_id": t.session_id,
        "phq8": t.phq8,
        "split": t.split.value if t.split else None,
        "turns": [[turn.start_s, turn.stop_s, turn.speaker.value, turn.text] for turn in t.turns],
    }


def transcript_from_dict(d: Mapping) -> InterviewTranscript:
    turns = tuple(Turn(float(a), float(b), Speaker.parse(s), txt) for a, b, s, txt in d["turns"])
    split = Split.parse(d["split"]) if d.get("split") else None
    return InterviewTranscript(d["session_id"], turns, d.get("phq8"), split)
