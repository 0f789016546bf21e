"""Visibility-aware fusion of pair correlations via self-similarity attention.

At each voxel the V_p pair correlations c form a self-similarity matrix
``S = c c^T / sqrt(V_p)``.  Attention weights are a temperature-scaled
row softmax of S; the fused scalar is the mean of ``A c``.  In training
mode S is perturbed with per-voxel Gumbel noise (a smooth relaxation of
Top-k selection); at inference the noise is zero and a hard Top-k mask
keeps only the k largest entries per row, discarding unreliable pairs
entirely.  The whole operation is parameter-free.

Invalid pairs are masked out before selection: their rows and columns are
set to -inf and their rows are excluded from the final mean.  If fewer
than k valid pairs remain, all valid pairs are used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlation import CorrelationTensor
from .rng import stream_gumbel

_CHUNK = 65536  # voxels fused per batch to bound temporary memory


@dataclass(frozen=True)
class FusionConfig:
    temperature: float = 1.0
    top_k: int = 3
    mode: str = "infer"     # "infer" (hard top-k) or "train" (Gumbel relaxation)
    gumbel_seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.mode not in ("infer", "train"):
            raise ValueError("mode must be 'infer' or 'train'")


@dataclass
class ConsistencyVolume:
    values: np.ndarray  # (D, H, W) float64
    valid: np.ndarray   # (D, H, W) bool


def self_similarity(c) -> np.ndarray:
    """Outer-product similarity of the pair-correlation vector: c c^T / sqrt(V_p)."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 1:
        raise ValueError("expected a 1-D correlation vector")
    if not np.all(np.isfinite(c)):
        raise ValueError("correlation vector must be finite")
    return np.outer(c, c) / np.sqrt(c.size)


def gumbel_noise(rows: int, cols: int, seed: int) -> np.ndarray:
    """Matrix of i.i.d. standard Gumbel(0, 1) draws, deterministic per seed."""
    return stream_gumbel(seed, np.arange(rows * cols, dtype=np.uint64)).reshape(rows, cols)


def topk_mask(scores: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest entries per row; the rest become -inf.

    Ties break toward the lower column index.
    """
    s = np.asarray(scores, dtype=np.float64)
    if not (1 <= k <= s.shape[-1]):
        raise ValueError("k must lie in [1, row length]")
    order = np.argsort(-s, axis=-1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.broadcast_to(np.arange(s.shape[-1]), s.shape).copy(), axis=-1)
    return np.where(ranks < k, s, -np.inf)


def attention(scores: np.ndarray, noise: np.ndarray | None = None,
              temperature: float = 1.0) -> np.ndarray:
    """Row softmax of (scores + noise) / temperature.

    Entries equal to -inf receive weight exactly 0; every row with at
    least one finite entry sums to 1.
    """
    if temperature <= 0.0:
        raise ValueError("temperature must be positive")
    z = np.asarray(scores, dtype=np.float64)
    if noise is not None:
        z = np.where(np.isfinite(z), z + noise, z)
    z = z / temperature
    m = np.max(z, axis=-1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(invalid="ignore"):
        e = np.exp(z - m)
    e[~np.isfinite(z)] = 0.0
    denom = e.sum(axis=-1, keepdims=True)
    return np.divide(e, denom, out=np.zeros_like(e), where=denom > 0)


def fuse(c, attn: np.ndarray) -> float:
    """Fused consistency: mean of the attention-mixed correlation vector A c."""
    c = np.asarray(c, dtype=np.float64)
    return float(np.mean(attn @ c))


def _fuse_batch(c: np.ndarray, valid: np.ndarray, cfg: FusionConfig,
                noise: np.ndarray | None = None, return_attention: bool = False):
    """Fuse a batch of correlation vectors.

    Args:
        c: (n, V_p) correlations (invalid entries ignored).
        valid: (n, V_p) pair validity.
        cfg: fusion settings.
        noise: optional (n, V_p, V_p) Gumbel matrices (train mode).
        return_attention: also return the attention and keep masks.

    Returns:
        (fused (n,), ok (n,)) and, if requested, (attention (n, V_p, V_p),
        keep (n, V_p, V_p) bool).
    """
    n, vp = c.shape
    if cfg.top_k > vp:
        raise ValueError("top_k exceeds the number of view pairs")
    cz = np.where(valid, c, 0.0)
    s = cz[:, :, None] * cz[:, None, :] / np.sqrt(vp)
    pairmask = valid[:, :, None] & valid[:, None, :]
    s = np.where(pairmask, s, -np.inf)
    m = valid.sum(axis=1)

    if cfg.mode == "train":
        if noise is not None:
            s = np.where(pairmask, s + noise, -np.inf)
        keep = pairmask
    else:
        k_eff = np.minimum(cfg.top_k, np.maximum(m, 1))
        order = np.argsort(-s, axis=-1, kind="stable")
        ranks = np.empty_like(order)
        np.put_along_axis(
            ranks, order, np.broadcast_to(np.arange(vp), (n, vp, vp)).copy(), axis=-1
        )
        keep = (ranks < k_eff[:, None, None]) & pairmask
        s = np.where(keep, s, -np.inf)

    attn = attention(s, temperature=cfg.temperature)
    ctil = (attn * cz[:, None, :]).sum(axis=-1)
    denom = np.maximum(m, 1)
    fused = (ctil * valid).sum(axis=1) / denom
    ok = m >= 1
    fused = np.where(ok, fused, 0.0)
    if return_attention:
        return fused, ok, attn, keep
    return fused, ok


def fuse_volume(tensor: CorrelationTensor, cfg: FusionConfig) -> ConsistencyVolume:
    """Fuse a correlation tensor into the scalar consistency volume.

    In train mode each voxel gets its own Gumbel matrix, drawn from the
    stream at counters ``voxel_index * V_p**2 + cell`` so the result is
    independent of chunking and evaluation order.
    """
    vp, d, h, w = tensor.values.shape
    nvox = d * h * w
    c_flat = tensor.values.reshape(vp, nvox).T
    v_flat = tensor.pair_valid.reshape(vp, nvox).T
    fused = np.zeros(nvox, dtype=np.float64)
    ok = np.zeros(nvox, dtype=bool)
    cells = vp * vp
    for start in range(0, nvox, _CHUNK):
        stop = min(start + _CHUNK, nvox)
        noise = None
        if cfg.mode == "train":
            counters = (
                np.arange(start, stop, dtype=np.uint64)[:, None] * np.uint64(cells)
                + np.arange(cells, dtype=np.uint64)[None, :]
            )
            noise = stream_gumbel(cfg.gumbel_seed, counters).reshape(stop - start, vp, vp)
        fused[start:stop], ok[start:stop] = _fuse_batch(
            c_flat[start:stop], v_flat[start:stop], cfg, noise=noise
        )
    return ConsistencyVolume(fused.reshape(d, h, w), ok.reshape(d, h, w))


def mean_correlation_volume(tensor: CorrelationTensor) -> ConsistencyVolume:
    """Plain fusion baseline: unweighted mean correlation over valid pairs."""
    counts = tensor.pair_valid.sum(axis=0)
    total = (tensor.values * tensor.pair_valid).sum(axis=0)
    values = np.divide(total, counts, out=np.zeros_like(total), where=counts > 0)
    return ConsistencyVolume(values, counts >= 1)


def grad_fused_wrt_c(c, noise: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Analytic gradient of the fused score with respect to c (train path).

    Covers the differentiable configuration: fixed Gumbel noise, no hard
    mask, all pairs valid.  Accounts for the dependence of both S and the
    attention weights on c.  With row distributions A_i, mixed values
    ctil_i = sum_j A_ij c_j and s = 1/sqrt(V_p), the derivative is

        dF/dc_m = (1/V_p) * [ sum_i A_im
                              + (s/tau) * ( Var_m(c)
                                            + sum_i c_i A_im (c_m - ctil_i) ) ]

    where Var_m is the variance of c under row m's attention distribution.
    """
    c = np.asarray(c, dtype=np.float64)
    vp = c.size
    s = 1.0 / np.sqrt(vp)
    scores = np.outer(c, c) * s
    attn = attention(scores, noise=noise, temperature=temperature)
    ctil = attn @ c
    colsum = attn.sum(axis=0)
    var = attn @ (c * c) - ctil * ctil
    cross = ((c * attn.T).T * (c[None, :] - ctil[:, None])).sum(axis=0)
    return (colsum + (s / temperature) * (var + cross)) / vp
