"""PHQ-8 score histograms for comparing real, synthetic and combined sets."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..corpus import DEPRESSION_CUTOFF, N_SCORES, check_score


@dataclass(frozen=True)
class HistogramReport:
    counts: dict[str, tuple[int, ...]]

    def depressed_fraction(self, name: str) -> float | None:
        c = self.counts[name]
        n = sum(c)
        return sum(c[DEPRESSION_CUTOFF:]) / n if n else None

    def max_min_ratio(self, name: str) -> float:
        return max_min_ratio(self.counts[name])

    def to_dict(self) -> dict:
        return {
            name: {
                "counts": list(c),
                "n": sum(c),
                "depressed_fraction": self.depressed_fraction(name),
                "max_min_ratio": _json_ratio(max_min_ratio(c)),
            }
            for name, c in self.counts.items()
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["score", "dataset", "count"])
        for name, c in self.counts.items():
            for score, count in enumerate(c):
                w.writerow([score, name, count])
        return buf.getvalue()


def _json_ratio(r: float):
    return None if math.isinf(r) or math.isnan(r) else r


def max_min_ratio(counts: Sequence[int]) -> float:
    """Largest bin over smallest bin; ``inf`` when some bin is empty."""
    hi, lo = max(counts), min(counts)
    if hi == 0:
        return math.nan
    return math.inf if lo == 0 else hi / lo


def score_counts(scores: Sequence[int]) -> tuple[int, ...]:
    counts = [0] * N_SCORES
    for s in scores:
        if isinstance(s, np.integer):
            s = int(s)
        counts[check_score(s)] += 1
    return tuple(counts)


def histogram_report(datasets: Mapping[str, Sequence[int]]) -> HistogramReport:
    return HistogramReport({name: score_counts(scores) for name, scores in datasets.items()})
