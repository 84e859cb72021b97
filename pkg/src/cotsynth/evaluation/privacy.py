"""Nearest-neighbour distance statistics between embedding sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigError, DataError, DimensionMismatch, EmptySet

METRICS = ("l2", "cosine")


@dataclass(frozen=True)
class PrivacyReport:
    pairing: str
    min_dist: float
    avg_min_dist: float
    metric: str = "l2"
    n_base: int = 0
    n_query: int = 0

    def to_dict(self) -> dict:
        return {
            "pairing": self.pairing,
            "min_dist": self.min_dist,
            "avg_min_dist": self.avg_min_dist,
            "metric": self.metric,
            "n_base": self.n_base,
            "n_query": self.n_query,
        }


def _as_rows(points, name: str) -> np.ndarray:
    if len(points) == 0:
        raise EmptySet(f"{name} is empty")
    rows = [np.asarray(getattr(p, "values", p), dtype=np.float64) for p in points]
    dims = {r.shape for r in rows}
    if len(dims) > 1 or rows[0].ndim != 1:
        raise DimensionMismatch(f"{name} vectors have inconsistent dimensions")
    return np.vstack(rows)


def nearest_distances(base, query, exclude_self: bool = False, metric: str = "l2") -> list[float]:
    """Distance from each query point to its nearest base point.

    Every pair is evaluated (an O(n·m) double loop) and each squared-term
    sum goes through ``math.fsum``, so results are independent of summation
    order.  With ``exclude_self`` the base point sharing the query's index
    is skipped, for comparing a set against itself.
    """
    if metric not in METRICS:
        raise ConfigError(f"unknown metric {metric!r}; choose from {METRICS}")
    B = _as_rows(base, "base")
    Q = _as_rows(query, "query")
    if B.shape[1] != Q.shape[1]:
        raise DimensionMismatch(f"base dim {B.shape[1]} != query dim {Q.shape[1]}")
    if exclude_self:
        if len(B) != len(Q):
            raise ConfigError("exclude_self needs base and query to be the same collection")
        if len(B) < 2:
            raise EmptySet("self-excluded comparison needs at least two points")

    if metric == "cosine":
        b_norms = [math.sqrt(math.fsum(r)) for r in (B * B).tolist()]
        if min(b_norms) == 0.0:
            raise DataError("cosine distance is undefined for zero vectors")

    out = []
    for i, q in enumerate(Q):
        if metric == "l2":
            diff = B - q
            terms = (diff * diff).tolist()
        else:
            terms = (B * q).tolist()
            q_norm = math.sqrt(math.fsum((q * q).tolist()))
            if q_norm == 0.0:
                raise DataError("cosine distance is undefined for zero vectors")
        best = math.inf
        for j, row in enumerate(terms):
            if exclude_self and j == i:
                continue
            if metric == "l2":
                d = math.sqrt(math.fsum(row))
            else:
                d = 1.0 - math.fsum(row) / (b_norms[j] * q_norm)
            if d < best:
                best = d
        out.append(best)
    return out


def min_distance_report(base, query, exclude_self: bool = False, metric: str = "l2",
                        pairing: str | None = None) -> PrivacyReport:
    """Minimum and mean nearest-neighbour distance from ``query`` to ``base``."""
    d = nearest_distances(base, query, exclude_self, metric)
    if pairing is None:
        pairing = "real_vs_real" if exclude_self else "real_vs_synthetic"
    lo = min(d)
    # the rounded mean of identical values can land an ulp below them
    avg = max(math.fsum(d) / len(d), lo)
    return PrivacyReport(pairing, lo, avg, metric, len(base), len(query))


def privacy_reports(real: Sequence, synthetic: Sequence, metric: str = "l2") -> list[PrivacyReport]:
    """The two standard pairings: real against itself and synthetic against real."""
    return [
        min_distance_report(real, real, exclude_self=True, metric=metric, pairing="real_vs_real"),
        min_distance_report(real, synthetic, metric=metric, pairing="real_vs_synthetic"),
    ]
