"""Binary classification metrics on +-1 labels (+1 is the positive class)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricsReport:
    acc: float
    auc: float
    mcc: float
    confusion: ConfusionMatrix


def _labels(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(y_true).reshape(-1)
    p = np.asarray(y_pred).reshape(-1)
    if t.shape[0] == 0:
        raise ValueError("empty input")
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape[0]} vs {p.shape[0]}")
    for name, v in (("y_true", t), ("y_pred", p)):
        if not np.all((v == 1) | (v == -1)):
            raise ValueError(f"{name} must contain only -1/+1")
    return t, p


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t, p = _labels(y_true, y_pred)
    return ConfusionMatrix(
        tp=int(np.sum((t == 1) & (p == 1))),
        tn=int(np.sum((t == -1) & (p == -1))),
        fp=int(np.sum((t == -1) & (p == 1))),
        fn=int(np.sum((t == 1) & (p == -1))),
    )


def accuracy(y_true, y_pred) -> float:
    t, p = _labels(y_true, y_pred)
    return float(np.mean(t == p))


def mcc(y_true, y_pred) -> float:
    """Matthews correlation; 0.0 when any marginal count is zero."""
    c = confusion(y_true, y_pred)
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def roc_auc(y_true, scores) -> float:
    """P(random positive outscores random negative), ties counted 1/2.

    Computed from average ranks (Mann-Whitney U).
    """
    t = np.asarray(y_true).reshape(-1)
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if t.shape != s.shape:
        raise ValueError(f"length mismatch: {t.shape[0]} vs {s.shape[0]}")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    n_pos = int(np.sum(t == 1))
    n_neg = int(np.sum(t == -1))
    if n_pos + n_neg != t.shape[0]:
        raise ValueError("labels must be -1/+1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined with a single class")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.shape[0])
    sorted_s = s[order]
    i = 0
    while i < s.shape[0]:
        j = i
        while j + 1 < s.shape[0] and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    # 2 * U keeps the numerator integral so exact fractions stay exact
    twice_u = 2.0 * ranks[t == 1].sum() - n_pos * (n_pos + 1)
    return float(twice_u / (2.0 * n_pos * n_neg))


def evaluate(y_true, y_pred, scores) -> MetricsReport:
    return MetricsReport(accuracy(y_true, y_pred), roc_auc(y_true, scores), mcc(y_true, y_pred),
                         confusion(y_true, y_pred))
