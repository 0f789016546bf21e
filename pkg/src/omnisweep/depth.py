"""Depth recovery from the consistency volume.

Winner-take-all over bins, parabolic sub-bin refinement, a deterministic
iterative refiner (zero init, windowed correlation lookup, sub-bin local
argmax, validity-weighted 3x3 smoothing), convex 2x upsampling, and the
exponentially weighted sequence loss.  All spatial 3x3 neighborhoods wrap
horizontally around the ERP seam; vertical edges clamp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fusion import ConsistencyVolume


@dataclass
class InverseDepthMap:
    values: np.ndarray  # (H, W) float64, continuous bin indices
    valid: np.ndarray   # (H, W) bool

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.values.shape != self.valid.shape:
            raise ValueError("values and validity must share one shape")


@dataclass(frozen=True)
class RefineConfig:
    iterations: int = 8      # M
    lookup_radius: int = 4   # bins on each side of the current estimate
    smooth: bool = True      # apply the 3x3 averaging pass each iteration
    gamma: float = 0.9       # sequence-loss decay

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if self.lookup_radius < 1:
            raise ValueError("lookup radius must be at least 1")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie in (0, 1)")


def wta_depth(volume: ConsistencyVolume) -> InverseDepthMap:
    """Per-pixel argmax bin of the fused consistency (ties -> smaller index)."""
    masked = np.where(volume.valid, volume.values, -np.inf)
    idx = np.argmax(masked, axis=0).astype(np.float64)
    ok = volume.valid.any(axis=0)
    idx[~ok] = 0.0
    return InverseDepthMap(idx, ok)


def _parabolic_offset(ym1, y0, yp1):
    denom = ym1 - 2.0 * y0 + yp1
    with np.errstate(divide="ignore", invalid="ignore"):
        off = 0.5 * (ym1 - yp1) / denom
    off = np.where(np.abs(denom) > 1e-12, off, 0.0)
    return np.clip(off, -1.0, 1.0)


def subbin_refine(volume: ConsistencyVolume, wta: InverseDepthMap) -> InverseDepthMap:
    """Parabola through the bins around the WTA index; vertex clamped to +-1 bin.

    Boundary bins (0 and D-1) are returned unrefined.
    """
    d = volume.values.shape[0]
    m = np.rint(wta.values).astype(np.int64)
    interior = (m > 0) & (m < d - 1)
    mc = np.clip(m, 1, d - 2)
    hw = np.indices(m.shape)
    y0 = volume.values[mc, hw[0], hw[1]]
    ym1 = volume.values[mc - 1, hw[0], hw[1]]
    yp1 = volume.values[mc + 1, hw[0], hw[1]]
    off = np.where(interior, _parabolic_offset(ym1, y0, yp1), 0.0)
    return InverseDepthMap(m.astype(np.float64) + off, wta.valid.copy())


def _erp_smooth(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Validity-weighted 3x3 mean; horizontal wrap, vertical neighbors clamp off."""
    h, w = values.shape
    vals = np.zeros((h + 2, w))
    wts = np.zeros((h + 2, w))
    vals[1:-1] = np.where(valid, values, 0.0)
    wts[1:-1] = valid.astype(np.float64)
    num = np.zeros((h, w))
    den = np.zeros((h, w))
    for dy in (0, 1, 2):
        for dx in (-1, 0, 1):
            num += np.roll(vals[dy:dy + h], -dx, axis=1)
            den += np.roll(wts[dy:dy + h], -dx, axis=1)
    out = np.divide(num, den, out=values.copy(), where=den > 0)
    return np.where(valid, out, values)


def iterative_refine(volume: ConsistencyVolume, cfg: RefineConfig) -> list[InverseDepthMap]:
    """Refine an inverse-depth map from zero initialization.

    Each iteration gathers the fused values at the 2r+1 integer bins
    nearest the current estimate (the window shifts to stay inside
    [0, D-1]), moves the estimate to the sub-bin-refined argmax of the
    window, then optionally applies one validity-weighted 3x3 smoothing
    pass.  Returns all intermediate maps.
    """
    d, h, w = volume.values.shape
    if cfg.lookup_radius >= d:
        raise ValueError("lookup radius must be smaller than the bin count")
    vals_hwd = np.moveaxis(volume.values, 0, -1)
    masked_hwd = np.where(np.moveaxis(volume.valid, 0, -1), vals_hwd, -np.inf)
    pixel_valid = volume.valid.any(axis=0)
    win = min(2 * cfg.lookup_radius + 1, d)
    offsets = np.arange(win)

    est = np.zeros((h, w), dtype=np.float64)
    maps = []
    for _ in range(cfg.iterations):
        center = np.rint(est).astype(np.int64)
        lo = np.clip(center - cfg.lookup_radius, 0, d - win)
        idx = lo[..., None] + offsets
        window = np.take_along_axis(masked_hwd, idx, axis=2)
        local = np.argmax(window, axis=2)
        has_valid = np.isfinite(np.take_along_axis(window, local[..., None], axis=2)[..., 0])
        m = lo + local
        mc = np.clip(m, 1, d - 2)
        y0 = np.take_along_axis(vals_hwd, mc[..., None], axis=2)[..., 0]
        ym1 = np.take_along_axis(vals_hwd, (mc - 1)[..., None], axis=2)[..., 0]
        yp1 = np.take_along_axis(vals_hwd, (mc + 1)[..., None], axis=2)[..., 0]
        interior = (m > 0) & (m < d - 1)
        off = np.where(interior, _parabolic_offset(ym1, y0, yp1), 0.0)
        new = m.astype(np.float64) + off
        move = has_valid & pixel_valid
        est = np.where(move, new, est)
        if cfg.smooth:
            est = _erp_smooth(est, pixel_valid)
        est = np.clip(est, 0.0, d - 1.0)
        maps.append(InverseDepthMap(est.copy(), pixel_valid.copy()))
    return maps


@dataclass
class UpsampleMask:
    """Convex weights for 2x upsampling.

    ``weights[i, j, sy, sx]`` holds 9 nonnegative weights (3x3 coarse
    neighborhood, row-major dy then dx) for fine pixel (2i+sy, 2j+sx);
    each weight vector sums to 1.
    """

    weights: np.ndarray  # (H, W, 2, 2, 9)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 5 or w.shape[2:] != (2, 2, 9):
            raise ValueError("weights must have shape (H, W, 2, 2, 9)")
        if np.any(w < 0.0):
            raise ValueError("upsample weights must be nonnegative")
        sums = w.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("each upsample weight vector must sum to 1")
        self.weights = w


def uniform_upsample_mask(height: int, width: int) -> UpsampleMask:
    return UpsampleMask(np.full((height, width, 2, 2, 9), 1.0 / 9.0))


def nearest_upsample_mask(height: int, width: int) -> UpsampleMask:
    w = np.zeros((height, width, 2, 2, 9))
    w[..., 4] = 1.0  # center of the 3x3 neighborhood
    return UpsampleMask(w)


def convex_upsample(coarse: InverseDepthMap, mask: UpsampleMask) -> InverseDepthMap:
    """2x upsampling by convex combination of each 3x3 coarse neighborhood."""
    h, w = coarse.values.shape
    if mask.weights.shape[:2] != (h, w):
        raise ValueError("mask resolution does not match the coarse map")
    rows = np.arange(h)
    neigh = np.empty((9, h, w))
    n = 0
    for dy in (-1, 0, 1):
        shifted = coarse.values[np.clip(rows + dy, 0, h - 1)]
        for dx in (-1, 0, 1):
            neigh[n] = np.roll(shifted, -dx, axis=1)
            n += 1
    fine = np.einsum("hwstn,nhw->hwst", mask.weights, neigh)
    out = fine.transpose(0, 2, 1, 3).reshape(2 * h, 2 * w)
    valid = np.repeat(np.repeat(coarse.valid, 2, axis=0), 2, axis=1)
    return InverseDepthMap(out, valid)


def sequence_loss(preds: list[InverseDepthMap], gt: InverseDepthMap,
                  gamma: float, mask: np.ndarray | None = None) -> float:
    """Exponentially weighted L1 over all intermediate predictions.

    loss = sum_i gamma^(M-i) * mean_{valid}(|gt - pred_i|), i = 1..M.
    """
    if not preds:
        raise ValueError("need at least one prediction")
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    omega = gt.valid.copy()
    if mask is not None:
        omega &= np.asarray(mask, dtype=bool)
    for p in preds:
        if p.values.shape != gt.values.shape:
            raise ValueError("prediction and ground-truth shapes differ")
        omega &= p.valid
    if not np.any(omega):
        raise ValueError("no valid pixels for the loss")
    m = len(preds)
    total = 0.0
    for i, p in enumerate(preds, start=1):
        total += gamma ** (m - i) * float(np.abs(gt.values - p.values)[omega].mean())
    return total
