"""Fisheye camera models, rig extrinsics, and spherical-sweep geometry.

Conventions (used everywhere in the package):

* Equirectangular (ERP) grid: a pixel coordinate ``(x, y)`` with
  ``0 <= x < W`` and ``0 <= y < H`` maps to longitude
  ``phi = 2*pi*(x + 0.5)/W - pi`` and latitude
  ``theta = pi*(y + 0.5)/H - pi/2``.  The unit ray is
  ``n = (cos(theta)*sin(phi), sin(theta), cos(theta)*cos(phi))`` so +z is
  the forward axis, +x is phi = +90 deg and +y points to +90 deg latitude.
* Fisheye lens: equidistant model ``r = focal * theta`` with a hard
  field-of-view cutoff at ``fov_max`` (half-angle).  ``focal`` is in
  pixels per radian.  Image pixel centers sit at integer coordinates;
  a projection is "inside bounds" when it can be bilinearly sampled,
  i.e. ``0 <= px <= W_img-1`` and ``0 <= py <= H_img-1``.
* Camera pose: ``rotation`` has the camera axes as columns (camera-to-rig)
  and ``translation`` is the camera center in the rig frame.  A rig-frame
  point ``X`` maps into the camera frame as ``R.T @ (X - t)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FisheyeIntrinsics:
    focal: float                       # pixels per radian
    principal_point: tuple[float, float]
    image_size: tuple[int, int]        # (width, height)
    fov_max: float                     # half-angle cutoff, radians

    def __post_init__(self):
        w, h = self.image_size
        cx, cy = self.principal_point
        if self.focal <= 0:
            raise ValueError("focal must be positive")
        if not (0 < self.fov_max <= math.pi):
            raise ValueError("fov_max must lie in (0, pi]")
        if w < 1 or h < 1:
            raise ValueError("image_size must be positive")
        if not (0 <= cx < w and 0 <= cy < h):
            raise ValueError("principal point must lie inside the image")


@dataclass
class CameraPose:
    rotation: np.ndarray     # (3, 3), camera-to-rig
    translation: np.ndarray  # (3,), camera center in rig frame

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        self.translation = np.asarray(self.translation, dtype=np.float64)
        if self.rotation.shape != (3, 3) or self.translation.shape != (3,):
            raise ValueError("pose must be a 3x3 rotation and a 3-vector")
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > 1e-9:
            raise ValueError(f"rotation is not orthonormal (|R^T R - I| = {err:.2e})")
        if abs(np.linalg.det(self.rotation) - 1.0) > 1e-9:
            raise ValueError("rotation must have determinant +1")


@dataclass
class Camera:
    intrinsics: FisheyeIntrinsics
    pose: CameraPose


@dataclass
class Rig:
    cameras: list[Camera]

    def __post_init__(self):
        if len(self.cameras) < 2:
            raise ValueError("a rig needs at least two cameras")

    def __len__(self) -> int:
        return len(self.cameras)


@dataclass(frozen=True)
class ErpGrid:
    width: int
    height: int
    convention: str = "lonlat-center"

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")


@dataclass(frozen=True)
class InverseDepthSampling:
    num_bins: int
    d_min: float
    d_max: float

    def __post_init__(self):
        if self.num_bins < 2:
            raise ValueError("need at least two depth bins")
        if not (0 < self.d_min < self.d_max):
            raise ValueError("require 0 < d_min < d_max")


def erp_ray(x, y, grid: ErpGrid) -> np.ndarray:
    """Unit ray direction(s) for continuous ERP pixel coordinates.

    Accepts scalars or arrays; returns shape (..., 3).  Coordinates must
    satisfy 0 <= x < W and 0 <= y < H.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x < 0) or np.any(x >= grid.width) or np.any(y < 0) or np.any(y >= grid.height):
        raise ValueError("ERP coordinates out of range")
    phi = 2.0 * np.pi * (x + 0.5) / grid.width - np.pi
    theta = np.pi * (y + 0.5) / grid.height - np.pi / 2.0
    ct = np.cos(theta)
    return np.stack([ct * np.sin(phi), np.sin(theta), ct * np.cos(phi)], axis=-1)


def erp_ray_grid(grid: ErpGrid) -> np.ndarray:
    """Rays for every pixel center of the grid, shape (H, W, 3)."""
    xs = np.arange(grid.width, dtype=np.float64)
    ys = np.arange(grid.height, dtype=np.float64)
    xx, yy = np.meshgrid(xs, ys)
    return erp_ray(xx, yy, grid)


def erp_latitude_tangent_grid(grid: ErpGrid) -> np.ndarray:
    """Unit tangent toward increasing latitude at every pixel center, (H, W, 3).

    This field is well-defined at every grid pixel (pixel centers never sit
    exactly on a pole) and is attached to the ray, not to any camera, so it
    serves as a shared orientation reference across views.
    """
    xs = np.arange(grid.width, dtype=np.float64)
    ys = np.arange(grid.height, dtype=np.float64)
    xx, yy = np.meshgrid(xs, ys)
    phi = 2.0 * np.pi * (xx + 0.5) / grid.width - np.pi
    theta = np.pi * (yy + 0.5) / grid.height - np.pi / 2.0
    st, ct = np.sin(theta), np.cos(theta)
    return np.stack([-st * np.sin(phi), ct, -st * np.cos(phi)], axis=-1)


def inv_depth_bins(sampling: InverseDepthSampling) -> np.ndarray:
    """Depth (meters) of each bin; uniform in inverse depth, bin 0 nearest."""
    rho = np.linspace(1.0 / sampling.d_min, 1.0 / sampling.d_max, sampling.num_bins)
    return 1.0 / rho


def depth_to_index(depth, sampling: InverseDepthSampling) -> np.ndarray:
    """Continuous bin index of a metric depth (no clamping)."""
    rho0 = 1.0 / sampling.d_min
    step = (1.0 / sampling.d_max - rho0) / (sampling.num_bins - 1)
    return (1.0 / np.asarray(depth, dtype=np.float64) - rho0) / step


def index_to_depth(index, sampling: InverseDepthSampling) -> np.ndarray:
    """Metric depth of a continuous bin index."""
    rho0 = 1.0 / sampling.d_min
    step = (1.0 / sampling.d_max - rho0) / (sampling.num_bins - 1)
    return 1.0 / (rho0 + np.asarray(index, dtype=np.float64) * step)


def fisheye_project(points, intr: FisheyeIntrinsics):
    """Equidistant projection of camera-frame point(s).

    Args:
        points: (..., 3) array; must not contain the zero vector.
        intr: lens parameters.

    Returns:
        (pixels, valid): pixels (..., 2); valid is True where the ray is
        within the FoV cutoff and the pixel is inside image bounds.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[-1] != 3:
        raise ValueError("points must have shape (..., 3)")
    norms = np.linalg.norm(pts, axis=-1)
    if np.any(norms == 0.0):
        raise ValueError("cannot project the zero vector")
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    rxy = np.hypot(x, y)
    theta = np.arctan2(rxy, z)
    # Direction in the image plane; on the optical axis it is undefined and
    # theta = 0 maps to the principal point regardless.
    safe = np.where(rxy > 0.0, rxy, 1.0)
    ux = np.where(rxy > 0.0, x / safe, 0.0)
    uy = np.where(rxy > 0.0, y / safe, 0.0)
    r = intr.focal * theta
    cx, cy = intr.principal_point
    px = cx + r * ux
    py = cy + r * uy
    w, h = intr.image_size
    valid = (
        (theta <= intr.fov_max)
        & (px >= 0.0) & (px <= w - 1.0)
        & (py >= 0.0) & (py <= h - 1.0)
    )
    return np.stack([px, py], axis=-1), valid


def fisheye_unproject(pixels, intr: FisheyeIntrinsics):
    """Inverse of the equidistant projection.

    Returns (directions, valid); directions are unit camera-frame rays,
    valid is False beyond the FoV cutoff.
    """
    pix = np.asarray(pixels, dtype=np.float64)
    cx, cy = intr.principal_point
    dx = pix[..., 0] - cx
    dy = pix[..., 1] - cy
    r = np.hypot(dx, dy)
    theta = r / intr.focal
    safe = np.where(r > 0.0, r, 1.0)
    st = np.sin(theta)
    dirs = np.stack(
        [
            np.where(r > 0.0, st * dx / safe, 0.0),
            np.where(r > 0.0, st * dy / safe, 0.0),
            np.cos(theta),
        ],
        axis=-1,
    )
    return dirs, theta <= intr.fov_max


def sweep_project(ray, depth: float, camera: Camera):
    """Project the sphere point depth*ray (rig frame) into a camera.

    The rig-frame point is moved into the camera frame as
    ``R.T @ (depth*ray - t)`` and then projected; returns (pixel, valid).
    """
    if depth <= 0:
        raise ValueError("depth must be positive")
    ray = np.asarray(ray, dtype=np.float64)
    pose = camera.pose
    cam_pts = (depth * ray - pose.translation) @ pose.rotation
    return fisheye_project(cam_pts, camera.intrinsics)


def default_rig(
    image_size: tuple[int, int] = (256, 256),
    focal: float = 66.0,
    fov_max_deg: float = 110.0,
    square_side: float = 0.4,
) -> Rig:
    """Four outward-facing fisheye cameras on the corners of a square.

    Cameras sit in the horizontal (x-z) plane at azimuths 45, 135, 225 and
    315 degrees, each with its optical axis pointing radially outward and
    image y pointing down.
    """
    w, h = image_size
    intr = FisheyeIntrinsics(
        focal=focal,
        principal_point=((w - 1) / 2.0, (h - 1) / 2.0),
        image_size=(w, h),
        fov_max=math.radians(fov_max_deg),
    )
    half_diag = square_side * math.sqrt(2.0) / 2.0
    cameras = []
    for i in range(4):
        phi = math.radians(45.0 + 90.0 * i)
        s, c = math.sin(phi), math.cos(phi)
        # columns: x_cam (image right), y_cam (image down), z_cam (optical axis)
        rot = np.array([[-c, 0.0, s], [0.0, -1.0, 0.0], [s, 0.0, c]])
        t = np.array([half_diag * s, 0.0, half_diag * c])
        cameras.append(Camera(intr, CameraPose(rot, t)))
    return Rig(cameras)


def save_calibration(path, rig: Rig, grid: ErpGrid, sampling: InverseDepthSampling) -> None:
    doc = {
        "cameras": [
            {
                "focal": cam.intrinsics.focal,
                "principal_point": list(cam.intrinsics.principal_point),
                "image_size": list(cam.intrinsics.image_size),
                "fov_max_deg": math.degrees(cam.intrinsics.fov_max),
                "rotation": [float(v) for v in cam.pose.rotation.reshape(-1)],
                "translation": [float(v) for v in cam.pose.translation],
            }
            for cam in rig.cameras
        ],
        "erp_width": grid.width,
        "erp_height": grid.height,
        "num_bins": sampling.num_bins,
        "d_min": sampling.d_min,
        "d_max": sampling.d_max,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_calibration(path):
    """Read a rig calibration file; returns (Rig, ErpGrid, InverseDepthSampling)."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    cameras = []
    for c in doc["cameras"]:
        intr = FisheyeIntrinsics(
            focal=float(c["focal"]),
            principal_point=tuple(float(v) for v in c["principal_point"]),
            image_size=tuple(int(v) for v in c["image_size"]),
            fov_max=math.radians(float(c["fov_max_deg"])),
        )
        pose = CameraPose(
            np.asarray(c["rotation"], dtype=np.float64).reshape(3, 3),
            np.asarray(c["translation"], dtype=np.float64),
        )
        cameras.append(Camera(intr, pose))
    rig = Rig(cameras)
    grid = ErpGrid(int(doc["erp_width"]), int(doc["erp_height"]))
    sampling = InverseDepthSampling(int(doc["num_bins"]), float(doc["d_min"]), float(doc["d_max"]))
    return rig, grid, sampling
