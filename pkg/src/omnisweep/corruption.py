"""Deterministic view corruption: circular noise / blur occlusions.

Corruption is keyed purely by (sample_idx, cam_idx): the stream seed is
``mix_seed(sample_idx, cam_idx)`` and draws are consumed in a fixed,
documented order so the same indices always produce bit-identical output:

1. one uniform ``u``; the image is corrupted iff ``u < probability``,
2. the number of circles ``n`` (uniform integer in the configured range),
3. per circle, five values: center x, center y, radius fraction, type
   (uniform < 0.5 -> noise, else blur) and a 64-bit key for the circle's
   per-pixel noise field (consumed for blur circles too, to keep the
   stream layout fixed).

Noise circles add per-pixel uniform perturbations in [-a, a] (clamped to
[0, 1]); blur circles replace the disk with the image convolved with a
normalized Gaussian kernel (reflect boundary).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .rng import SplitMix64, mix_seed, stream_unit


@dataclass(frozen=True)
class CorruptionSpec:
    probability: float = 0.3
    min_circles: int = 1
    max_circles: int = 4
    radius_frac_min: float = 0.01
    radius_frac_max: float = 0.1
    blur_kernel_size: int = 15
    blur_sigma: float = 5.0
    noise_amplitude: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.probability <= 1.0):
            raise ValueError("probability must lie in [0, 1]")
        if not (1 <= self.min_circles <= self.max_circles):
            raise ValueError("bad circle count range")
        if not (0.0 < self.radius_frac_min <= self.radius_frac_max):
            raise ValueError("bad radius fraction range")
        if self.blur_kernel_size < 1 or self.blur_kernel_size % 2 == 0:
            raise ValueError("blur kernel size must be odd and positive")
        if not (0.0 < self.noise_amplitude <= 1.0):
            raise ValueError("noise amplitude must lie in (0, 1]")


def gaussian_kernel_1d(size: int, sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian kernel with ``size`` taps."""
    half = (size - 1) / 2.0
    x = np.arange(size, dtype=np.float64) - half
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_kernel_2d(size: int, sigma: float) -> np.ndarray:
    k = gaussian_kernel_1d(size, sigma)
    return np.outer(k, k)


def gaussian_blur(image: np.ndarray, size: int, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with reflect boundary handling."""
    k = gaussian_kernel_1d(size, sigma)
    out = ndimage.convolve1d(np.asarray(image, dtype=np.float64), k, axis=0, mode="reflect")
    return ndimage.convolve1d(out, k, axis=1, mode="reflect")


def circle_mask(shape: tuple[int, int], cx: float, cy: float, radius: float) -> np.ndarray:
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius


def corrupt(image: np.ndarray, sample_idx: int, cam_idx: int, spec: CorruptionSpec) -> np.ndarray:
    """Apply the occlusion protocol; deterministic in (sample_idx, cam_idx)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("image must be 2-D grayscale")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    rng = SplitMix64(mix_seed(sample_idx, cam_idx))
    out = img.copy()
    if rng.next_float() >= spec.probability:
        return out
    h, w = img.shape
    n = rng.randint(spec.min_circles, spec.max_circles)
    blurred = None
    flat_idx = np.arange(h * w, dtype=np.uint64).reshape(h, w)
    for _ in range(n):
        cx = rng.uniform(0.0, float(w))
        cy = rng.uniform(0.0, float(h))
        radius = rng.uniform(spec.radius_frac_min, spec.radius_frac_max) * min(w, h)
        is_noise = rng.next_float() < 0.5
        noise_key = rng.next_u64()
        mask = circle_mask((h, w), cx, cy, radius)
        if not np.any(mask):
            continue
        if is_noise:
            delta = (stream_unit(noise_key, flat_idx) * 2.0 - 1.0) * spec.noise_amplitude
            out[mask] = np.clip(out + delta, 0.0, 1.0)[mask]
        else:
            if blurred is None:
                blurred = gaussian_blur(img, spec.blur_kernel_size, spec.blur_sigma)
            out[mask] = blurred[mask]
    return out
