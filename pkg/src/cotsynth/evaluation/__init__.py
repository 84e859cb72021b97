"""Utility, fidelity and privacy evaluation of a synthetic corpus."""

from .histogram import HistogramReport, histogram_report, max_min_ratio
from .metrics import mae, rmse
from .pca import PCA2D, FidelityReport, jacobi_eigh, pca_2d
from .privacy import PrivacyReport, min_distance_report, nearest_distances, privacy_reports
from .ridge import RidgeRegressor, fit_ridge
from .utility import (
    COMBINED,
    REAL_ONLY,
    SYNTHETIC_ONLY,
    LabeledText,
    UtilityReport,
    UtilityRow,
    labeled_records,
    labeled_summaries,
    select_lambda,
    utility_experiment,
)

__all__ = [
    "COMBINED", "REAL_ONLY", "SYNTHETIC_ONLY",
    "FidelityReport", "HistogramReport", "LabeledText", "PCA2D", "PrivacyReport",
    "RidgeRegressor", "UtilityReport", "UtilityRow",
    "fit_ridge", "histogram_report", "jacobi_eigh", "labeled_records", "labeled_summaries",
    "mae", "max_min_ratio", "min_distance_report", "nearest_distances", "pca_2d",
    "privacy_reports", "rmse", "select_lambda", "utility_experiment",
]
