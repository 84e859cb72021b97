"""Two-component PCA with a hand-rolled symmetric eigensolver.

Data are mean-centred, never variance-scaled.  Eigenpairs come from the
smaller of the sample covariance (d×d) and the Gram matrix (n×n); both
share their non-zero spectrum.  Matrices up to ``JACOBI_MAX_DIM`` use cyclic
Jacobi, larger ones power iteration with deflation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import as_matrix
from ..errors import ConfigError, DegenerateData, DimensionMismatch
from ..rng import SplitMix64

JACOBI_MAX_DIM = 512
JACOBI_TOL = 1e-12
POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000


def jacobi_eigh(S: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(values, vectors)`` with eigenvectors in the columns, in the
    diagonal order the sweeps leave them (unsorted).  Sweeps stop once the
    off-diagonal Frobenius norm falls below ``tol`` times the full norm.
    """
    A = np.array(S, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("jacobi_eigh needs a square matrix")
    m = A.shape[0]
    V = np.eye(m)
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(m), V
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if abs(apq) <= 1e-300 * scale:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(apq) * 1e18 < abs(diff):
                    t = apq / diff  # tau**2 would overflow
                else:
                    tau = diff / (2.0 * apq)
                    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                v_p, v_q = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q
    return np.diag(A).copy(), V


def power_top_k(S: np.ndarray, k: int = 2, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER, seed: int = 0):
    """Leading ``k`` eigenpairs of a PSD matrix by power iteration with deflation."""
    A = np.array(S, dtype=np.float64, copy=True)
    m = A.shape[0]
    rng = SplitMix64(seed)
    values, vectors = [], []
    for _ in range(k):
        v = np.array([rng.random() - 0.5 for _ in range(m)])
        for u in vectors:
            v -= (u @ v) * u
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            w = A @ v
            for u in vectors:
                w -= (u @ w) * u
            norm = np.linalg.norm(w)
            if norm == 0.0:
                break
            w /= norm
            new_lam = float(w @ A @ w)
            done = np.linalg.norm(w - v) < tol or abs(new_lam - lam) <= tol * max(1.0, abs(new_lam))
            v, lam = w, new_lam
            if done:
                break
        values.append(lam)
        vectors.append(v)
        A = A - lam * np.outer(v, v)
    return np.array(values), np.column_stack(vectors)


def _sorted_desc(values: np.ndarray) -> list[int]:
    # ties keep index order
    return sorted(range(len(values)), key=lambda i: (-values[i], i))


def orient(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its largest-magnitude entry (first on ties) is positive."""
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _complete_basis(first: np.ndarray) -> np.ndarray:
    """A unit vector orthogonal to ``first``, from the lowest-index axis that works."""
    for i in range(first.shape[0]):
        e = np.zeros_like(first)
        e[i] = 1.0
        e -= (first @ e) * first
        norm = np.linalg.norm(e)
        if norm > 1e-8:
            return e / norm
    raise DegenerateData("cannot build a second component in one dimension")


class PCA2D(TransformerMixin, BaseEstimator):
    """Project onto the two leading principal axes.

    Parameters
    ----------
    solver : {"auto", "jacobi", "power"}
        ``auto`` picks Jacobi up to 512×512 and power iteration beyond.
    tol : float
        Convergence tolerance of the Jacobi sweeps.
    """

    def __init__(self, solver: str = "auto", tol: float = JACOBI_TOL):
        self.solver = solver
        self.tol = tol

    def _eigen(self, M: np.ndarray):
        solver = self.solver
        if solver == "auto":
            solver = "jacobi" if M.shape[0] <= JACOBI_MAX_DIM else "power"
        if solver == "jacobi":
            vals, vecs = jacobi_eigh(M, self.tol)
            order = _sorted_desc(vals)[:2]
            return vals[order], vecs[:, order]
        if solver == "power":
            return power_top_k(M, k=min(2, M.shape[0]))
        raise ConfigError(f"unknown solver {self.solver!r}")

    def fit(self, X, y=None):
        X = as_matrix(X, min_samples=3)
        n, d = X.shape
        if d < 2:
            raise DimensionMismatch("need at least two features for a 2-D projection")
        mean = X.mean(axis=0)
        Xc = X - mean
        total = math.fsum((Xc * Xc).ravel()) / (n - 1)
        if total == 0.0:
            raise DegenerateData("all points coincide; total variance is zero")

        if d <= n:
            vals, vecs = self._eigen(Xc.T @ Xc / (n - 1))
            comps = [vecs[:, 0], vecs[:, 1]]
        else:
            vals, U = self._eigen(Xc @ Xc.T / (n - 1))
            comps = []
            for j in range(2):
                v = Xc.T @ U[:, j]
                norm = np.linalg.norm(v)
                comps.append(v / norm if norm > 1e-12 * math.sqrt(total) else None)
            if comps[0] is None:
                raise DegenerateData("leading component has zero variance")
            if comps[1] is None:
                comps[1] = _complete_basis(comps[0])
        vals = np.clip(vals, 0.0, None)
        comps = [orient(c / np.linalg.norm(c)) for c in comps]

        self.mean_ = mean
        self.components_ = np.vstack(comps)
        self.explained_variance_ = vals
        self.explained_variance_ratio_ = np.clip(vals / total, 0.0, 1.0)
        self.n_features_in_ = d
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = as_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatch(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return (X - self.mean_) @ self.components_.T


@dataclass(frozen=True)
class FidelityReport:
    points: list[tuple[str, str, float, float]]
    explained_variance_ratio: tuple[float, float]
    component_basis: np.ndarray
    fit_on: str = "joint"

    def to_dict(self) -> dict:
        return {
            "explained_variance_ratio": list(self.explained_variance_ratio),
            "component_basis": self.component_basis.tolist(),
            "fit_on": self.fit_on,
            "n_points": len(self.points),
            "n_by_source": {
                s: sum(1 for p in self.points if p[1] == s) for s in sorted({p[1] for p in self.points})
            },
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "source", "x", "y"])
        for pid, source, x, y in self.points:
            w.writerow([pid, source, repr(x), repr(y)])
        return buf.getvalue()


def pca_2d(vectors: Sequence, labels: Sequence[str], fit_mask: Sequence[bool] | None = None,
           solver: str = "auto") -> FidelityReport:
    """PCA of embedding vectors to two dimensions.

    ``labels`` tags each vector's source (``"real"``/``"synthetic"``).  By
    default the axes are fitted on every vector; pass ``fit_mask`` to fit on
    a subset (for example real only) and project everything onto it.
    """
    if len(vectors) != len(labels):
        raise DimensionMismatch("one label per vector is required")
    if len(vectors) < 3:
        raise DegenerateData(f"PCA needs at least 3 vectors, got {len(vectors)}")
    dims = {len(v.values) for v in vectors}
    if len(dims) > 1:
        raise DimensionMismatch(f"inconsistent dimensions {sorted(dims)}")
    X = np.vstack([v.values for v in vectors])
    fit_X = X if fit_mask is None else X[np.asarray(fit_mask, dtype=bool)]
    model = PCA2D(solver=solver).fit(fit_X)
    Z = model.transform(X)
    points = [(v.owner_id, lab, float(z[0]), float(z[1])) for v, lab, z in zip(vectors, labels, Z)]
    ratio = model.explained_variance_ratio_
    return FidelityReport(points, (float(ratio[0]), float(ratio[1])), model.components_,
                          "joint" if fit_mask is None else "subset")
