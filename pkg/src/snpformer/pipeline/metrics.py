"""Evaluation metrics and fold summaries."""

from __future__ import annotations

import math

import numpy as np

from ..errors import DegenerateInput, ShapeError


def pcc(y_pred, y_true) -> float:
    """Pearson correlation between predictions and labels."""
    p = np.asarray(y_pred, dtype=np.float64).ravel()
    t = np.asarray(y_true, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise ShapeError(f"length mismatch: {p.size} predictions vs {t.size} labels")
    if p.size < 2:
        raise DegenerateInput("PCC needs at least two samples")
    dp = p - p.mean()
    dt = t - t.mean()
    sp = float(np.dot(dp, dp))
    st = float(np.dot(dt, dt))
    if sp == 0.0 or st == 0.0:
        raise DegenerateInput("PCC is undefined for a constant vector")
    return float(np.dot(dp, dt)) / math.sqrt(sp * st)


def accuracy(y_pred, y_true) -> float:
    p = np.asarray(y_pred).ravel()
    t = np.asarray(y_true).ravel()
    if p.shape != t.shape:
        raise ShapeError(f"length mismatch: {p.size} predictions vs {t.size} labels")
    if p.size == 0:
        raise DegenerateInput("accuracy of an empty set")
    return float(np.mean(p == t))


def metric_name(task: str) -> str:
    return "ACC" if task == "classification" else "PCC"


def task_metric(task: str, y_pred, y_true) -> float:
    return accuracy(y_pred, y_true) if task == "classification" else pcc(y_pred, y_true)


def mean_std(values) -> tuple[float, float]:
    """Mean and sample (n-1) standard deviation."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise DegenerateInput("no values to summarise")
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return float(v.mean()), std
