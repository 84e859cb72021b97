"""Fabricated interview corpora for offline runs and tests.

Participant answers mention emotional marker words (the mock server's
vocabulary) in proportion to a noisy copy of the session's PHQ-8 score, so
summaries produced by the template mock carry a learnable but imperfect
signal.  Nothing here resembles real interview content.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping

from .corpus import PHQ8_MAX, Split
from .mock_server import BAND_MARKERS, POSITIVE_MARKERS, band_index
from .rng import SplitMix64

QUESTIONS = (
    "how are you doing today",
    "where are you from originally",
    "what do you do for work",
    "how have you been sleeping lately",
    "tell me about your family",
    "what do you do to relax",
    "how have you been feeling recently",
    "is there anything you regret",
)
FILLERS = (
    "um well it depends on the day",
    "i work at a shop near the station",
    "my brother calls on sundays",
    "i like walking the dog in the morning",
    "uh the commute is long",
    "we moved here a few years ago",
    "i cook most evenings",
    "i watch football with friends sometimes",
)
DEFAULT_NOISE_SD = 3.0


def _gauss(rng: SplitMix64) -> float:
    u1 = max(rng.random(), 1e-300)
    u2 = rng.random()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def observed_score(score: int, rng: SplitMix64, noise_sd: float) -> int:
    return min(PHQ8_MAX, max(0, round(score + noise_sd * _gauss(rng))))


def participant_words(score: int, rng: SplitMix64, noise_sd: float = DEFAULT_NOISE_SD) -> list[str]:
    """Marker words for one session, shuffled."""
    seen = observed_score(score, rng, noise_sd)
    band = band_index(seen)
    words = []
    for _ in range(seen):
        b = band
        if rng.random() < 0.3:
            b = min(len(BAND_MARKERS) - 1, max(0, band + (1 if rng.random() < 0.5 else -1)))
        row = BAND_MARKERS[b]
        words.append(row[rng.randbelow(len(row))])
    words += [POSITIVE_MARKERS[rng.randbelow(len(POSITIVE_MARKERS))] for _ in range(PHQ8_MAX - seen)]
    for i in range(len(words) - 1, 0, -1):
        j = rng.randbelow(i + 1)
        words[i], words[j] = words[j], words[i]
    return words


def transcript_tsv(score: int, rng: SplitMix64, noise_sd: float = DEFAULT_NOISE_SD) -> str:
    words = participant_words(score, rng, noise_sd)
    chunks = [words[i::len(QUESTIONS)] for i in range(len(QUESTIONS))]
    lines = ["start_time\tstop_time\tspeaker\tvalue"]
    t = 10.0
    for question, chunk in zip(QUESTIONS, chunks):
        lines.append(f"{t:.3f}\t{t + 2.5:.3f}\tEllie\t{question}")
        t += 3.0
        filler = FILLERS[rng.randbelow(len(FILLERS))]
        answer = filler + (" and i feel " + " ".join(chunk) if chunk else "")
        lines.append(f"{t:.3f}\t{t + 6.0:.3f}\tParticipant\t{answer}")
        t += 7.0
    return "\n".join(lines) + "\n"


def write_corpus(out_dir, sessions: Mapping[str, tuple[int, Split]], seed: int = 7,
                 noise_sd: float = DEFAULT_NOISE_SD) -> dict[str, Path]:
    """Write transcripts, ``labels.csv`` and ``splits.csv`` for ``sessions``.

    Returns the paths under keys ``corpus_dir``, ``labels`` and ``splits``.
    """
    out = Path(out_dir)
    corpus_dir = out / "transcripts"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    rng = SplitMix64(seed)
    labels = ["session_id,phq8_score"]
    splits = ["session_id,split"]
    for i, (sid, (score, split)) in enumerate(sorted(sessions.items())):
        text = transcript_tsv(score, rng.spawn(i), noise_sd)
        (corpus_dir / f"{sid}_TRANSCRIPT.tsv").write_text(text, encoding="utf-8", newline="\n")
        labels.append(f"{sid},{score}")
        splits.append(f"{sid},{split.value}")
    (out / "labels.csv").write_text("\n".join(labels) + "\n", encoding="utf-8", newline="\n")
    (out / "splits.csv").write_text("\n".join(splits) + "\n", encoding="utf-8", newline="\n")
    return {"corpus_dir": corpus_dir, "labels": out / "labels.csv", "splits": out / "splits.csv"}


FIVE_SESSION_SCORES = (2, 9, 10, 15, 24)


def five_session_sessions() -> dict[str, tuple[int, Split]]:
    return {f"s{i + 1}": (score, Split.TRAIN) for i, score in enumerate(FIVE_SESSION_SCORES)}


def imbalanced_sessions(n_low: int = 40, n_high: int = 5, test_per_score: int = 2,
                        dev_per_band: int = 2, seed: int = 7) -> dict[str, tuple[int, Split]]:
    """Train split skewed to low scores, test split uniform over 0..24.

    Low scores are drawn from 0..9 and high from 10..24; the dev split holds
    ``dev_per_band`` sessions per severity band.
    """
    rng = SplitMix64(seed ^ 0x5EED)
    sessions: dict[str, tuple[int, Split]] = {}
    for i in range(n_low):
        sessions[f"tr{i:03d}"] = (rng.randbelow(10), Split.TRAIN)
    for i in range(n_high):
        sessions[f"tr{n_low + i:03d}"] = (10 + rng.randbelow(15), Split.TRAIN)
    k = 0
    for score in range(PHQ8_MAX + 1):
        for _ in range(test_per_score):
            sessions[f"te{k:03d}"] = (score, Split.TEST)
            k += 1
    k = 0
    for band in range(5):
        for _ in range(dev_per_band):
            sessions[f"dv{k:03d}"] = (band * 5 + rng.randbelow(5), Split.DEV)
            k += 1
    return sessions
