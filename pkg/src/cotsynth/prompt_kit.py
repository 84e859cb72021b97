"""Prompt rendering, PHQ-8 severity bands and target-score sampling."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .corpus import N_SCORES, PHQ8_MIN, ScoreDistribution, check_score
from .errors import ConfigError, EmptySourceItem, EmptyTranscriptText, MissingDistribution
from .rng import SplitMix64

PLACEHOLDERS = ("item", "Transcript", "og_item", "og_item_value", "PHQ8_Score", "dep")
_PLACEHOLDER_RE = re.compile(r"\{(" + "|".join(PLACEHOLDERS) + r")\}")


class ItemKind(enum.Enum):
    SYNOPSIS = "synopsis"
    SENTIMENT = "sentiment"

    @property
    def synthetic_name(self) -> str:
        return f"synthetic {self.value}"


@dataclass(frozen=True)
class SeverityBand:
    lo: int
    hi: int
    description: str

    def __contains__(self, score: int) -> bool:
        return self.lo <= score <= self.hi


SEVERITY_BANDS = (
    SeverityBand(0, 4, "minimal or no depressive symptoms"),
    SeverityBand(5, 9, "mild depressive symptoms"),
    SeverityBand(10, 14, "moderate depression"),
    SeverityBand(15, 19, "moderately severe depression"),
    SeverityBand(20, 24, "severe depression"),
)


def severity_band(score: int) -> SeverityBand:
    check_score(score)
    for band in SEVERITY_BANDS:
        if score in band:
            return band
    raise AssertionError("bands do not cover the score range")  # pragma: no cover


def severity_description(score: int) -> str:
    return severity_band(score).description


@lru_cache(maxsize=None)
def _asset(name: str) -> str:
    return resources.files("cotsynth.templates").joinpath(name).read_text(encoding="utf-8")


def template_text(name: str) -> str:
    """Raw template asset (``summary``, ``synthesis`` or ``persona``)."""
    return _asset(f"{name}.txt")


def example_output(item: ItemKind) -> str:
    return _asset(f"example_{item.value}.json").strip()


def persona_text() -> str:
    return template_text("persona").strip()


def _render(template: str, values: dict[str, str]) -> str:
    # single pass, so substituted values are never re-expanded
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)


def _with_example(body: str, item: ItemKind) -> str:
    return f"{body.rstrip()}\nExample output: {example_output(item)}\n"


def render_summary_prompt(item: ItemKind, transcript_text: str) -> str:
    if not transcript_text or not transcript_text.strip():
        raise EmptyTranscriptText("transcript text is empty")
    body = _render(template_text("summary"), {"item": item.value, "Transcript": transcript_text})
    return _with_example(body, item)


def render_synthesis_prompt(item: ItemKind, og_value: str, target_score: int) -> str:
    if not og_value or not og_value.strip():
        raise EmptySourceItem(f"source {item.value} is empty")
    dep = severity_description(target_score)
    body = _render(
        template_text("synthesis"),
        {
            "item": item.synthetic_name,
            "og_item": item.value,
            "og_item_value": og_value,
            "PHQ8_Score": str(target_score),
            "dep": dep,
        },
    )
    return _with_example(body, item)


class SamplingMode(enum.Enum):
    UNIFORM = "uniform"
    INVERSE_FREQUENCY = "inverse_frequency"


@dataclass(frozen=True)
class SamplingStrategy:
    mode: SamplingMode = SamplingMode.UNIFORM
    seed: int = 0


def score_probabilities(
    strategy: SamplingStrategy, observed: ScoreDistribution | None = None
) -> list[float]:
    """Probability of drawing each score 0..24 under ``strategy``."""
    if strategy.mode is SamplingMode.UNIFORM:
        return [1.0 / N_SCORES] * N_SCORES
    if observed is None:
        raise MissingDistribution("inverse-frequency sampling needs an observed distribution")
    weights = [1.0 / (1 + c) for c in observed.total_bins]
    total = sum(weights)
    return [w / total for w in weights]


def sample_target_scores(
    n: int, strategy: SamplingStrategy, observed: ScoreDistribution | None = None
) -> list[int]:
    if n < 1:
        raise ConfigError("n must be at least 1")
    rng = SplitMix64(strategy.seed)
    if strategy.mode is SamplingMode.UNIFORM:
        return [PHQ8_MIN + rng.randbelow(N_SCORES) for _ in range(n)]
    weights = score_probabilities(strategy, observed)
    return [PHQ8_MIN + rng.choice_weighted(weights) for _ in range(n)]


def chi_square_uniform(scores: Sequence[int]) -> float:
    """Pearson statistic of ``scores`` against the uniform law on 0..24."""
    counts = [0] * N_SCORES
    for s in scores:
        counts[s - PHQ8_MIN] += 1
    expected = len(scores) / N_SCORES
    return sum((c - expected) ** 2 / expected for c in counts)

