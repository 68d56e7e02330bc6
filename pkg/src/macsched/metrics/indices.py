"""Fairness indices and cross-scheduler similarity."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np


def _vec(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError("entries must be finite and >= 0")
    if a.sum() <= 0:
        raise ValueError("index undefined for an all-zero vector")
    return a


def jain_index(x: Sequence[float]) -> float:
    """(sum x)^2 / (N * sum x^2), in [1/N, 1]."""
    a = _vec(x)
    return float(a.sum() ** 2 / (a.size * np.dot(a, a)))


def gini_index(x: Sequence[float]) -> float:
    """Mean absolute difference over twice the mean, in [0, 1)."""
    a = _vec(x)
    # sum_i sum_j |x_i - x_j| via the sorted-rank identity
    s = np.sort(a)
    n = s.size
    ranks = np.arange(1, n + 1)
    pair_sum = 2.0 * np.dot(2 * ranks - n - 1, s)
    return float(pair_sum / (2.0 * n * s.sum()))


def rmse(a: Sequence[float], b: Sequence[float]) -> float:
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.sqrt(np.mean((x - y) ** 2)))


def similarity_rmse(vectors: Mapping[str, Sequence[float]]) -> tuple[list[str], np.ndarray]:
    """Pairwise RMSE between per-UE average-throughput vectors.

    Returns the row/column labels (sorted) and a symmetric matrix with a
    zero diagonal.
    """
    names = sorted(vectors)
    arrs = [np.asarray(vectors[n], dtype=float) for n in names]
    if arrs and any(a.shape != arrs[0].shape for a in arrs):
        raise ValueError("all vectors must have the same UE count")
    k = len(names)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = rmse(arrs[i], arrs[j])
    return names, out
