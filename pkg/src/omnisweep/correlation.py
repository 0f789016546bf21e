"""Normalized pairwise correlation over all unordered view pairs.

For feature vectors f_i, f_j (C channels) the pair correlation is
``<f_i, f_j> / (C * |f_i| * |f_j|)``, which lies in [-1/C, 1/C] and is
invariant to positive per-view scaling.  Near-zero feature norms
(textureless after standardization) yield correlation 0 flagged invalid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sweeping import SweptFeatureVolume

NORM_EPS = 1e-8


def view_pairs(num_views: int) -> list[tuple[int, int]]:
    """Unordered pairs (i, j), i < j, in lexicographic order."""
    return [(i, j) for i in range(num_views) for j in range(i + 1, num_views)]


@dataclass
class CorrelationTensor:
    values: np.ndarray      # (V_p, D, H, W) float64
    pair_valid: np.ndarray  # (V_p, D, H, W) bool
    pairs: list[tuple[int, int]]


def pairwise_correlation(f_i, f_j, eps: float = NORM_EPS):
    """Normalized channel inner product of two feature vectors.

    Returns (value, valid); value is clamped to the theoretical range
    [-1/C, 1/C] (float rounding can nudge it past the bound) and is 0 with
    valid=False when either norm falls below ``eps``.
    """
    a = np.asarray(f_i, dtype=np.float64)
    b = np.asarray(f_j, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("feature vectors must share one shape (C,)")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("feature vectors must be finite")
    c = a.size
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < eps or nb < eps:
        return 0.0, False
    value = float(np.dot(a, b) / (c * na * nb))
    return float(np.clip(value, -1.0 / c, 1.0 / c)), True


def build_correlation_tensor(volumes: list[SweptFeatureVolume]) -> CorrelationTensor:
    """Stack pair correlations for all view pairs at every voxel.

    A voxel of a pair is valid only when both views' voxels are valid and
    both feature norms are above threshold; invalid entries are 0.
    """
    if len(volumes) < 2:
        raise ValueError("need at least two swept volumes")
    shape = volumes[0].values.shape
    for v in volumes:
        if v.values.shape != shape:
            raise ValueError("all swept volumes must share one shape")
    c = shape[0]
    feats = [v.values.astype(np.float64) for v in volumes]
    norms = [np.sqrt((f * f).sum(axis=0)) for f in feats]
    pairs = view_pairs(len(volumes))
    values = np.zeros((len(pairs),) + shape[1:], dtype=np.float64)
    pair_valid = np.zeros((len(pairs),) + shape[1:], dtype=bool)
    for p, (i, j) in enumerate(pairs):
        ok = (
            volumes[i].valid & volumes[j].valid
            & (norms[i] >= NORM_EPS) & (norms[j] >= NORM_EPS)
        )
        denom = np.where(ok, c * norms[i] * norms[j], 1.0)
        dot = (feats[i] * feats[j]).sum(axis=0)
        vals = np.clip(dot / denom, -1.0 / c, 1.0 / c)
        values[p] = np.where(ok, vals, 0.0)
        pair_valid[p] = ok
    return CorrelationTensor(values, pair_valid, pairs)
