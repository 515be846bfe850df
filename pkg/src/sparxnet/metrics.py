"""Scoring: MSE, ROC AUC (Mann-Whitney with midrank ties), feature recovery."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def mse(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape or p.size == 0:
        raise ValueError("predictions/targets must be equal-length and non-empty")
    return float(np.mean((p - t) ** 2))


def _midranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    i = 0
    xs = x[order]
    while i < len(x):
        j = i
        while j + 1 < len(x) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auc(scores, labels) -> float:
    """P(score of a random positive > score of a random negative), ties 1/2.

    Invariant under strictly monotone score transforms, so logits and
    probabilities give the same value.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    ranks = _midranks(s)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class RecoveryResult:
    selected: set[int]
    true: set[int]
    rate: float


def summarize(values) -> tuple[float, float]:
    """Mean and sample (N-1) standard deviation across seeds; std is 0.0 for
    a single run."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("need at least one value")
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return float(v.mean()), std


def results_table_csv(rows: list[dict]) -> str:
    """Rows keyed by (model, dataset) with per-seed metric values; emits
    model,dataset,metric,mean,std,n_seeds lines."""
    lines = ["model,dataset,metric,mean,std,n_seeds"]
    for row in rows:
        mean, std = summarize(row["values"])
        lines.append(
            f"{row['model']},{row['dataset']},{row['metric']},"
            f"{mean:.17g},{std:.17g},{len(row['values'])}"
        )
    return "\n".join(lines) + "\n"


def recovery_rate(selected_indices, true_indices) -> RecoveryResult:
    """|S cap T| / |T| with duplicate pathway selections collapsed."""
    true = set(int(i) for i in true_indices)
    if not true:
        raise ValueError("true index set must be non-empty")
    sel = set(int(i) for i in selected_indices)
    return RecoveryResult(sel, true, len(sel & true) / len(true))
