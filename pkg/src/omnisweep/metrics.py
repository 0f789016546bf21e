"""Evaluation metrics in the inverse-depth index domain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depth import InverseDepthMap

CSV_HEADER = "label,gt1,gt3,gt5,mae,rmse"


@dataclass(frozen=True)
class Metrics:
    pct_gt1: float   # % of pixels with index error > 1 bin
    pct_gt3: float
    pct_gt5: float
    mae: float       # bins
    rmse: float      # bins
    valid_count: int


def index_error_metrics(pred: InverseDepthMap, gt: InverseDepthMap,
                        mask: np.ndarray | None = None) -> Metrics:
    """Index-error statistics over the valid mask (strict > thresholds)."""
    if pred.values.shape != gt.values.shape:
        raise ValueError("prediction and ground-truth shapes differ")
    omega = pred.valid & gt.valid
    if mask is not None:
        omega &= np.asarray(mask, dtype=bool)
    n = int(omega.sum())
    if n == 0:
        raise ValueError("no valid pixels to evaluate")
    e = np.abs(pred.values - gt.values)[omega]
    return Metrics(
        pct_gt1=100.0 * float((e > 1.0).sum()) / n,
        pct_gt3=100.0 * float((e > 3.0).sum()) / n,
        pct_gt5=100.0 * float((e > 5.0).sum()) / n,
        mae=float(e.mean()),
        rmse=float(np.sqrt((e * e).mean())),
        valid_count=n,
    )


class MetricsAccumulator:
    """Pools per-pixel errors across samples for an exact summary row."""

    def __init__(self):
        self.count = 0
        self.sum_e = 0.0
        self.sum_e2 = 0.0
        self.n_gt1 = 0
        self.n_gt3 = 0
        self.n_gt5 = 0

    def add(self, pred: InverseDepthMap, gt: InverseDepthMap,
            mask: np.ndarray | None = None) -> Metrics:
        """Accumulate one sample and return its own metrics."""
        omega = pred.valid & gt.valid
        if mask is not None:
            omega &= np.asarray(mask, dtype=bool)
        e = np.abs(pred.values - gt.values)[omega]
        self.count += e.size
        self.sum_e += float(e.sum())
        self.sum_e2 += float((e * e).sum())
        self.n_gt1 += int((e > 1.0).sum())
        self.n_gt3 += int((e > 3.0).sum())
        self.n_gt5 += int((e > 5.0).sum())
        return index_error_metrics(pred, gt, mask)

    def summary(self) -> Metrics:
        if self.count == 0:
            raise ValueError("nothing accumulated")
        return Metrics(
            pct_gt1=100.0 * self.n_gt1 / self.count,
            pct_gt3=100.0 * self.n_gt3 / self.count,
            pct_gt5=100.0 * self.n_gt5 / self.count,
            mae=self.sum_e / self.count,
            rmse=float(np.sqrt(self.sum_e2 / self.count)),
            valid_count=self.count,
        )


def format_row(label: str, m: Metrics) -> str:
    return (f"{label},{m.pct_gt1:.2f},{m.pct_gt3:.2f},{m.pct_gt5:.2f},"
            f"{m.mae:.4f},{m.rmse:.4f}")


def compare_report(entries: list[tuple[str, Metrics]]) -> str:
    """CSV text with one row per (label, metrics) entry, input order kept."""
    lines = [CSV_HEADER]
    lines.extend(format_row(label, m) for label, m in entries)
    return "\n".join(lines) + "\n"
