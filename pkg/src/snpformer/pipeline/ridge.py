"""Closed-form ridge baseline on per-locus one-hot features.

A locus is either a single letter (``features="letter"``, 5 levels) or a
k-mer token slot (``features="kmer"``, ``5**k`` levels). The design matrix
is sparse; the solve runs in the n x n kernel form, which gives the same
coefficients as the normal equations when features outnumber samples.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from ..errors import ConfigError
from .cv import FoldReport, five_fold_split
from .data import Dataset
from .metrics import metric_name, task_metric

FEATURES = ("kmer", "letter")


def locus_one_hot(values: np.ndarray, n_levels: int) -> sparse.csr_matrix:
    """``(N, L)`` integer levels to an ``(N, L * n_levels)`` indicator matrix."""
    values = np.asarray(values, dtype=np.int64)
    n, length = values.shape
    cols = (np.arange(length, dtype=np.int64) * n_levels + values).ravel()
    rows = np.repeat(np.arange(n), length)
    data = np.ones(n * length, dtype=np.float64)
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, length * n_levels))


def ridge_fit(X, Y, l2: float) -> tuple[np.ndarray, np.ndarray]:
    """Primal solution of ``(Xc^T Xc + l2 I) W = Xc^T Yc`` with unpenalised intercept."""
    if not l2 > 0:
        raise ConfigError("ridge needs l2 > 0; the unregularised system is singular when p > n")
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    x_mean, y_mean = X.mean(axis=0), Y.mean(axis=0)
    Xc = X - x_mean
    W = np.linalg.solve(Xc.T @ Xc + l2 * np.eye(X.shape[1]), Xc.T @ (Y - y_mean))
    return W, y_mean - x_mean @ W


class RidgeModel:
    """Ridge regression, or one-vs-rest ridge classification with +/-1 targets.

    Fitting solves ``(H K H + l2 I) a = Yc`` where ``K = X X^T`` and ``H``
    centres the training rows; this equals the primal ridge solution with
    an unpenalised intercept.
    """

    def __init__(self, l2: float = 1.0, task: str = "regression", n_classes: int = 1):
        if not l2 > 0:
            raise ConfigError("ridge needs l2 > 0; the unregularised system is singular when p > n")
        self.l2 = l2
        self.task = task
        self.n_classes = n_classes

    def _targets(self, y):
        if self.task == "classification":
            Y = -np.ones((len(y), self.n_classes))
            Y[np.arange(len(y)), np.asarray(y)] = 1.0
            return Y
        return np.asarray(y, dtype=np.float64)

    def fit(self, X, y):
        self.X_ = X
        K = _gram(X, X)
        n = K.shape[0]
        self.k_col_mean_ = K.mean(axis=0)
        Kc = K - self.k_col_mean_[None, :] - K.mean(axis=1)[:, None] + K.mean()
        Y = self._targets(y)
        self.y_mean_ = Y.mean(axis=0)
        self.alpha_ = np.linalg.solve(Kc + self.l2 * np.eye(n), Y - self.y_mean_)
        return self

    def decision_function(self, X):
        Kt = _gram(X, self.X_)
        Kt_c = Kt - Kt.mean(axis=1)[:, None] - self.k_col_mean_[None, :] + self.k_col_mean_.mean()
        return Kt_c @ self.alpha_ + self.y_mean_

    def predict(self, X):
        scores = self.decision_function(X)
        return scores.argmax(axis=1) if self.task == "classification" else scores


def _gram(A, B) -> np.ndarray:
    out = A @ B.T
    return out.toarray() if sparse.issparse(out) else np.asarray(out, dtype=np.float64)


def design_matrix(dataset: Dataset, features: str = "kmer", k: int = 6) -> sparse.csr_matrix:
    if features == "kmer":
        return locus_one_hot(dataset.tokens(k), 5**k)
    if features == "letter":
        return locus_one_hot(dataset.codes, 5)
    raise ConfigError(f"features must be one of {FEATURES}, got {features!r}")


def ridge_baseline(dataset: Dataset, l2: float = 1.0, seed: int = 0, features: str = "kmer",
                   k: int = 6) -> FoldReport:
    """Five-fold ridge on the transformer's folds, fitting on train + validation."""
    X = design_matrix(dataset, features, k)
    report = FoldReport(metric_name(dataset.task), [])
    for fold in five_fold_split(dataset.n_samples, seed):
        fit = fold.fit
        model = RidgeModel(l2, dataset.task, dataset.n_classes).fit(X[fit], dataset.values[fit])
        pred = model.predict(X[fold.test])
        report.values.append(task_metric(dataset.task, pred, dataset.values[fold.test]))
        report.seeds.append(seed)
    return report
