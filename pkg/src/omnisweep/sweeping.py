"""Hand-crafted descriptors and their projection onto concentric spheres.

Features are 8 channels per pixel: intensity, central-difference
gradients dx and dy, 3x3 local mean, 3x3 local standard deviation, and
the gradient magnitude projected onto three orientations (0, 60 and 120
degrees).  Channels are standardized per image over the valid mask, so
downstream normalized correlation is insensitive to per-view affine
intensity changes.  The valid mask is eroded by one pixel (the 3x3
descriptor footprint).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .cameras import (
    Camera,
    ErpGrid,
    InverseDepthSampling,
    erp_latitude_tangent_grid,
    erp_ray_grid,
    fisheye_project,
    inv_depth_bins,
)

NUM_CHANNELS = 8
_ORIENTATIONS = (0.0, np.pi / 3.0, 2.0 * np.pi / 3.0)


@dataclass
class FeatureMap:
    values: np.ndarray  # (C, H_img, W_img) float32
    valid: np.ndarray   # (H_img, W_img) bool


@dataclass
class SweptFeatureVolume:
    values: np.ndarray  # (C, D, H, W) float32
    valid: np.ndarray   # (D, H, W) bool


def extract_features(image: np.ndarray, valid: np.ndarray | None = None,
                     standardize: bool = True) -> FeatureMap:
    """Compute the 8-channel descriptor stack for a [0, 1] grayscale image."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("image must be 2-D grayscale")
    if valid is None:
        valid = np.ones(img.shape, dtype=bool)
    gy, gx = np.gradient(img)
    mean3 = ndimage.uniform_filter(img, size=3, mode="nearest")
    sq3 = ndimage.uniform_filter(img * img, size=3, mode="nearest")
    std3 = np.sqrt(np.maximum(sq3 - mean3 * mean3, 0.0))
    channels = [img, gx, gy, mean3, std3]
    for ang in _ORIENTATIONS:
        channels.append(np.abs(np.cos(ang) * gx + np.sin(ang) * gy))
    feats = np.stack(channels, axis=0)

    eroded = ndimage.binary_erosion(valid, structure=np.ones((3, 3), dtype=bool), border_value=0)
    if standardize:
        for c in range(feats.shape[0]):
            sel = feats[c][eroded]
            if sel.size == 0:
                feats[c] = 0.0
                continue
            mu = sel.mean()
            sigma = sel.std()
            if sigma > 1e-12:
                feats[c] = (feats[c] - mu) / sigma
            else:
                feats[c] = 0.0
    feats[:, ~eroded] = 0.0
    return FeatureMap(feats.astype(np.float32), eroded)


def bilinear_sample(values: np.ndarray, valid: np.ndarray, px: np.ndarray, py: np.ndarray):
    """Sample (C, H, W) channels at continuous pixel coordinates.

    A sample is valid only when the coordinate is inside [0, W-1] x [0, H-1]
    and all four surrounding taps are valid.  Integer coordinates reproduce
    node values exactly.

    Returns (samples (N, C), ok (N,)).
    """
    c, h, w = values.shape
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    inb = (px >= 0.0) & (px <= w - 1.0) & (py >= 0.0) & (py <= h - 1.0)
    x0 = np.clip(np.floor(px), 0, w - 2).astype(np.int64)
    y0 = np.clip(np.floor(py), 0, h - 2).astype(np.int64)
    x0 = np.where(inb, x0, 0)
    y0 = np.where(inb, y0, 0)
    x1 = x0 + 1
    y1 = y0 + 1
    fx = np.where(inb, px - x0, 0.0)
    fy = np.where(inb, py - y0, 0.0)
    ok = inb & valid[y0, x0] & valid[y0, x1] & valid[y1, x0] & valid[y1, x1]
    w00 = (1.0 - fx) * (1.0 - fy)
    w10 = fx * (1.0 - fy)
    w01 = (1.0 - fx) * fy
    w11 = fx * fy
    samples = (
        values[:, y0, x0] * w00
        + values[:, y0, x1] * w10
        + values[:, y1, x0] * w01
        + values[:, y1, x1] * w11
    )
    return samples.T, ok


def _reference_image_angle(cam_pts: np.ndarray, cam_ref: np.ndarray) -> np.ndarray:
    """Image-plane angle of a shared 3-D reference tangent, per point.

    ``cam_pts`` are camera-frame points (N, 3); ``cam_ref`` the reference
    direction (the ERP latitude tangent of each point's voxel) rotated into
    the camera frame.  The reference is tangentialized against the viewing
    ray and pushed through the differential of the equidistant projection,
    whose polar basis maps a meridian step to the radial image direction
    and an azimuthal step to the tangential one with magnification
    theta/sin(theta).
    """
    norms = np.linalg.norm(cam_pts, axis=-1, keepdims=True)
    d = cam_pts / np.where(norms > 0.0, norms, 1.0)
    t = cam_ref - np.sum(cam_ref * d, axis=-1, keepdims=True) * d
    tn = np.linalg.norm(t, axis=-1, keepdims=True)
    t = t / np.where(tn > 1e-9, tn, 1.0)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    rxy = np.hypot(x, y)
    safe = np.where(rxy > 0.0, rxy, 1.0)
    ux = np.where(rxy > 0.0, x / safe, 1.0)
    uy = np.where(rxy > 0.0, y / safe, 0.0)
    theta = np.arctan2(rxy, z)
    st, ct = np.sin(theta), np.cos(theta)
    e_theta = np.stack([ct * ux, ct * uy, -st], axis=-1)
    e_phi = np.stack([-uy, ux, np.zeros_like(ux)], axis=-1)
    a = np.sum(t * e_theta, axis=-1)
    b = np.sum(t * e_phi, axis=-1)
    stretch = theta / np.maximum(st, 1e-9)
    vx = a * ux - stretch * b * uy
    vy = a * uy + stretch * b * ux
    return np.arctan2(vy, vx)


def _canonical_channels(samples: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Assemble voxel descriptors with orientation-aligned gradients.

    ``samples`` are the bilinearly sampled extraction channels (N, C).  The
    gradient pair is rotated so channel 1 points along the shared latitude
    reference, and the oriented channels become signed projections of the
    aligned gradient (keeping every channel zero-mean), making all channels
    comparable across views regardless of each camera's in-plane roll.
    """
    cb, sb = np.cos(beta), np.sin(beta)
    gx, gy = samples[:, 1], samples[:, 2]
    gu = cb * gx + sb * gy
    gv = -sb * gx + cb * gy
    out = np.empty_like(samples)
    out[:, 0] = samples[:, 0]
    out[:, 1] = gu
    out[:, 2] = gv
    out[:, 3] = samples[:, 3]
    out[:, 4] = samples[:, 4]
    for k, ang in enumerate(_ORIENTATIONS):
        out[:, 5 + k] = np.cos(ang) * gu + np.sin(ang) * gv
    return out


def build_swept_volume(features: FeatureMap, camera: Camera, grid: ErpGrid,
                       sampling: InverseDepthSampling) -> SweptFeatureVolume:
    """Resample one camera's descriptors onto every depth sphere of the sweep.

    For each bin depth d and ERP pixel x, the sphere point d*n(x) is
    projected into the camera and the descriptors are bilinearly sampled;
    gradient-based channels are then rotated into the voxel's shared
    orientation frame (see _canonical_channels) so that descriptors of the
    same surface point match across cameras.  Invalid voxels (out of FoV,
    outside bounds, or touching invalid taps) are zero-filled and flagged.
    """
    c = features.values.shape[0]
    h, w = grid.height, grid.width
    depths = inv_depth_bins(sampling)
    rays = erp_ray_grid(grid).reshape(-1, 3)
    ref = erp_latitude_tangent_grid(grid).reshape(-1, 3)
    rot = camera.pose.rotation
    t = camera.pose.translation
    cam_dirs = rays @ rot                     # R^T n for every ray
    cam_ref = ref @ rot                       # reference tangent, camera frame
    cam_origin = rot.T @ t                    # R^T t

    values = np.zeros((c, sampling.num_bins, h * w), dtype=np.float32)
    valid = np.zeros((sampling.num_bins, h * w), dtype=bool)

    def slice_at(cam_pts):
        pix, pvalid = fisheye_project(cam_pts, camera.intrinsics)
        samples, ok = bilinear_sample(features.values, features.valid, pix[:, 0], pix[:, 1])
        beta = _reference_image_angle(cam_pts, cam_ref)
        samples = _canonical_channels(samples.astype(np.float64), beta)
        ok &= pvalid
        samples[~ok] = 0.0
        return samples.astype(np.float32), ok

    if np.all(t == 0.0):
        # zero baseline: the projected direction is depth-independent, so one
        # slice serves every bin exactly
        samples, ok = slice_at(cam_dirs)
        values[:] = samples.T[:, None, :]
        valid[:] = ok[None, :]
    else:
        for k, d in enumerate(depths):
            samples, ok = slice_at(d * cam_dirs - cam_origin)
            values[:, k, :] = samples.T
            valid[k] = ok
    return SweptFeatureVolume(values.reshape(c, sampling.num_bins, h, w),
                              valid.reshape(sampling.num_bins, h, w))
