"""The three-training-set utility experiment.

A ridge regressor on frozen text embeddings is trained on real data only,
on synthetic data only and on both, then scored on the same labelled test
set.  Predictions are clamped to the PHQ-8 range before RMSE/MAE.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..corpus import PHQ8_MAX, PHQ8_MIN
from ..cot_pipeline import SummaryPair, SyntheticRecord, concat_input
from ..embedding_store import EmbeddingStore, stack
from ..errors import DataError, EmptyInput
from .metrics import mae, rmse
from .ridge import RidgeRegressor

REAL_ONLY = "real_only"
SYNTHETIC_ONLY = "synthetic_only"
COMBINED = "combined"
DEFAULT_LAMBDA = 1.0
LAMBDA_GRID = (0.01, 0.1, 1.0, 10.0)


@dataclass(frozen=True)
class LabeledText:
    id: str
    text: str
    score: int


@dataclass(frozen=True)
class UtilityRow:
    config: str
    rmse: float
    mae: float
    n_train: int
    n_test: int
    lam: float

    def to_dict(self) -> dict:
        return {"config": self.config, "rmse": self.rmse, "mae": self.mae,
                "n_train": self.n_train, "n_test": self.n_test, "lambda": self.lam}


@dataclass(frozen=True)
class UtilityReport:
    rows: tuple[UtilityRow, ...]

    def row(self, config: str) -> UtilityRow | None:
        return next((r for r in self.rows if r.config == config), None)

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}


def item_text(synopsis: str, sentiment: str, source: str = "concat") -> str:
    if source == "concat":
        return concat_input(synopsis, sentiment)
    if source == "synopsis":
        return synopsis
    if source == "sentiment":
        return sentiment
    raise DataError(f"unknown text source {source!r}")


def labeled_summaries(pairs: Sequence[SummaryPair], labels: Mapping[str, int],
                      source: str = "concat") -> list[LabeledText]:
    out = []
    for p in pairs:
        if p.session_id not in labels:
            raise DataError(f"no label for session {p.session_id!r}")
        out.append(LabeledText(p.session_id, item_text(p.synopsis, p.sentiment, source), labels[p.session_id]))
    return out


def labeled_records(records: Sequence[SyntheticRecord], source: str = "concat") -> list[LabeledText]:
    return [LabeledText(r.record_id, item_text(r.synopsis, r.sentiment, source), r.target_phq8)
            for r in records]


def _design(store: EmbeddingStore, items: Sequence[LabeledText]):
    X = stack(store.embed([(it.id, it.text) for it in items]))
    y = np.array([it.score for it in items], dtype=float)
    return X, y


def _score(model: RidgeRegressor, X, y) -> tuple[float, float]:
    pred = np.clip(model.predict(X), PHQ8_MIN, PHQ8_MAX)
    return rmse(pred, y), mae(pred, y)


def select_lambda(store: EmbeddingStore, train: Sequence[LabeledText], dev: Sequence[LabeledText],
                  grid: Sequence[float] = LAMBDA_GRID) -> float:
    """Grid value with the lowest dev RMSE (first wins on ties)."""
    X, y = _design(store, train)
    Xd, yd = _design(store, dev)
    best, best_rmse = None, np.inf
    for lam in grid:
        err, _ = _score(RidgeRegressor(alpha=lam).fit(X, y), Xd, yd)
        if err < best_rmse:
            best, best_rmse = lam, err
    return best


def utility_experiment(
    real_train: Sequence[LabeledText],
    synthetic: Sequence[LabeledText],
    test: Sequence[LabeledText],
    store: EmbeddingStore,
    lam: float | None = DEFAULT_LAMBDA,
    *,
    dev: Sequence[LabeledText] | None = None,
    lambda_grid: Sequence[float] = LAMBDA_GRID,
) -> UtilityReport:
    """Fit one ridge model per training configuration and score it on ``test``.

    ``lam=None`` selects the penalty per configuration on ``dev`` from
    ``lambda_grid``.  Configurations with no training data are skipped.
    """
    if not test:
        raise EmptyInput("utility experiment needs a labelled test set")
    if lam is None and not dev:
        raise EmptyInput("lambda selection needs a dev set")
    configs = []
    if real_train:
        configs.append((REAL_ONLY, list(real_train)))
    if synthetic:
        configs.append((SYNTHETIC_ONLY, list(synthetic)))
    if real_train:
        configs.append((COMBINED, list(real_train) + list(synthetic)))
    if not configs:
        raise EmptyInput("no training data for any configuration")

    X_test, y_test = _design(store, test)
    rows = []
    for name, train in configs:
        chosen = select_lambda(store, train, dev, lambda_grid) if lam is None else lam
        X, y = _design(store, train)
        model = RidgeRegressor(alpha=chosen).fit(X, y)
        err_rmse, err_mae = _score(model, X_test, y_test)
        rows.append(UtilityRow(name, err_rmse, err_mae, len(train), len(test), chosen))
    return UtilityReport(tuple(rows))
