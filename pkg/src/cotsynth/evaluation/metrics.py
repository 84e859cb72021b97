"""Regression error metrics."""

from __future__ import annotations

import math
from typing import Sequence

from .._validation import check_same_length
from ..errors import EmptyInput


def _errors(pred: Sequence[float], truth: Sequence[float]) -> list[float]:
    check_same_length(pred, truth, ("pred", "truth"))
    if len(pred) == 0:
        raise EmptyInput("metrics need at least one prediction")
    return [float(p) - float(t) for p, t in zip(pred, truth)]


def _positive_if_any(value: float, errs: list[float]) -> float:
    # tiny nonzero errors must not round to an exact zero
    if value == 0.0 and any(errs):
        return math.ulp(0.0)
    return value


def rmse(pred: Sequence[float], truth: Sequence[float]) -> float:
    """Square root of the mean squared error.

    Order of operations: exact (``math.fsum``) sum of squared errors, then
    division by n, then the square root.  When squaring under- or overflows,
    errors are first scaled by the largest magnitude.
    """
    errs = _errors(pred, truth)
    n = len(errs)
    sq = math.fsum(e * e for e in errs)
    if (sq == 0.0 and any(errs)) or math.isinf(sq):
        m = max(abs(e) for e in errs)
        return _positive_if_any(m * math.sqrt(math.fsum((e / m) ** 2 for e in errs) / n), errs)
    return math.sqrt(sq / n)


def mae(pred: Sequence[float], truth: Sequence[float]) -> float:
    errs = _errors(pred, truth)
    return _positive_if_any(math.fsum(abs(e) for e in errs) / len(errs), errs)
