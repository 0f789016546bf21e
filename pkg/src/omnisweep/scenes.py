"""Procedural scenes with analytic depth and fisheye/ERP rendering.

Scenes are built from textured spheres, planes and axis-aligned boxes.
Every surface carries a multi-octave value-noise texture over 3-D
position, so correlation-based matching has local structure everywhere.
Rays that miss every primitive hit an implicit textured sphere of radius
``background_depth`` centered at the rig origin; "background" is therefore
a real, cross-view-consistent surface with a well-defined depth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .cameras import Camera, ErpGrid, InverseDepthSampling, depth_to_index, erp_ray_grid, fisheye_unproject
from .depth import InverseDepthMap
from .rng import MASK64, SplitMix64, hash_u64, mix_seed, tag_seed

_EPS = 1e-9

# lattice-mix constants for value noise (arbitrary large odd primes)
_PX = np.uint64(0x9E3779B97F4A7C15)
_PY = np.uint64(0xC2B2AE3D27D4EB4F)
_PZ = np.uint64(0x165667B19E3779F9)


def _lattice_values(ix, iy, iz, seed: int) -> np.ndarray:
    """Deterministic uniforms in [0, 1) on the integer lattice."""
    with np.errstate(over="ignore"):
        h = (
            ix.astype(np.int64).astype(np.uint64) * _PX
            ^ iy.astype(np.int64).astype(np.uint64) * _PY
            ^ iz.astype(np.int64).astype(np.uint64) * _PZ
            ^ np.uint64(seed & MASK64)
        )
        return (hash_u64(h) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _value_noise(points: np.ndarray, seed: int) -> np.ndarray:
    """Single-octave trilinear value noise at 3-D positions, in [0, 1)."""
    base = np.floor(points)
    frac = points - base
    base = base.astype(np.int64)
    s = frac * frac * (3.0 - 2.0 * frac)  # smoothstep blend weights
    ix, iy, iz = base[..., 0], base[..., 1], base[..., 2]
    sx, sy, sz = s[..., 0], s[..., 1], s[..., 2]

    def corner(dx, dy, dz):
        return _lattice_values(ix + dx, iy + dy, iz + dz, seed)

    v00 = corner(0, 0, 0) + sx * (corner(1, 0, 0) - corner(0, 0, 0))
    v10 = corner(0, 1, 0) + sx * (corner(1, 1, 0) - corner(0, 1, 0))
    v01 = corner(0, 0, 1) + sx * (corner(1, 0, 1) - corner(0, 0, 1))
    v11 = corner(0, 1, 1) + sx * (corner(1, 1, 1) - corner(0, 1, 1))
    v0 = v00 + sy * (v10 - v00)
    v1 = v01 + sy * (v11 - v01)
    return v0 + sz * (v1 - v0)


@dataclass(frozen=True)
class ValueNoiseTexture:
    """Multi-octave value noise over 3-D position, output in [0, 1)."""

    seed: int
    base_frequency: float = 4.0
    octaves: int = 4

    def sample(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        acc = np.zeros(pts.shape[:-1], dtype=np.float64)
        total = 0.0
        amp = 1.0
        freq = self.base_frequency
        for o in range(self.octaves):
            acc += amp * _value_noise(pts * freq, mix_seed(self.seed, o))
            total += amp
            amp *= 0.5
            freq *= 2.0
        return acc / total


def _intersect_sphere(origins, dirs, center, radius) -> np.ndarray:
    oc = origins - center
    b = np.sum(dirs * oc, axis=-1)
    c0 = np.sum(oc * oc, axis=-1) - radius * radius
    disc = b * b - c0
    root = np.sqrt(np.maximum(disc, 0.0))
    t1 = -b - root
    t2 = -b + root
    t = np.where(t1 > _EPS, t1, np.where(t2 > _EPS, t2, np.inf))
    return np.where(disc >= 0.0, t, np.inf)


@dataclass
class Sphere:
    center: np.ndarray
    radius: float
    texture: ValueNoiseTexture

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)

    def intersect(self, origins, dirs) -> np.ndarray:
        return _intersect_sphere(origins, dirs, self.center, self.radius)


@dataclass
class Plane:
    point: np.ndarray
    normal: np.ndarray
    texture: ValueNoiseTexture

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=np.float64)
        n = np.asarray(self.normal, dtype=np.float64)
        self.normal = n / np.linalg.norm(n)

    def intersect(self, origins, dirs) -> np.ndarray:
        denom = np.sum(dirs * self.normal, axis=-1)
        num = np.sum((self.point - origins) * self.normal, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num / denom
        t = np.where(np.abs(denom) > 1e-12, t, np.inf)
        return np.where(t > _EPS, t, np.inf)


@dataclass
class Box:
    center: np.ndarray
    half_size: np.ndarray
    texture: ValueNoiseTexture

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        self.half_size = np.asarray(self.half_size, dtype=np.float64)

    def intersect(self, origins, dirs) -> np.ndarray:
        # slab test; from inside the box the exit face is the first hit
        d = np.where(np.abs(dirs) < 1e-300, 1e-300, dirs)
        lo = self.center - self.half_size
        hi = self.center + self.half_size
        t0 = (lo - origins) / d
        t1 = (hi - origins) / d
        t_near = np.max(np.minimum(t0, t1), axis=-1)
        t_far = np.min(np.maximum(t0, t1), axis=-1)
        t = np.where(t_near > _EPS, t_near, t_far)
        hit = (t_near <= t_far) & (t_far > _EPS)
        return np.where(hit, t, np.inf)


@dataclass
class Scene:
    primitives: list
    background_depth: float
    background_texture: ValueNoiseTexture

    def __post_init__(self):
        if self.background_depth <= 0:
            raise ValueError("background_depth must be positive")


def raycast(scene: Scene, origins, dirs):
    """First-hit distances for unit rays.

    Returns (t, prim_idx); prim_idx is -1 where the ray fell through to the
    background sphere.  Every ray cast from inside the background radius
    gets a finite distance.
    """
    origins = np.asarray(origins, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    shape = np.broadcast_shapes(origins.shape[:-1], dirs.shape[:-1])
    best_t = np.full(shape, np.inf)
    best_i = np.full(shape, -1, dtype=np.int64)
    for idx, prim in enumerate(scene.primitives):
        t = prim.intersect(origins, dirs)
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        best_i = np.where(closer, idx, best_i)
    miss = ~np.isfinite(best_t)
    if np.any(miss):
        t_bg = _intersect_sphere(origins, dirs, np.zeros(3), scene.background_depth)
        best_t = np.where(miss, t_bg, best_t)
    return best_t, best_i


def _shade(scene: Scene, points, prim_idx) -> np.ndarray:
    out = np.zeros(prim_idx.shape, dtype=np.float64)
    for i, prim in enumerate(scene.primitives):
        sel = prim_idx == i
        if np.any(sel):
            out[sel] = prim.texture.sample(points[sel])
    sel = prim_idx == -1
    if np.any(sel):
        out[sel] = scene.background_texture.sample(points[sel])
    return np.clip(out, 0.0, 1.0)


def render_fisheye(scene: Scene, camera: Camera):
    """Ray-cast a fisheye view of the scene.

    Returns (image, valid): a grayscale image in [0, 1] and the in-FoV
    mask.  Out-of-FoV pixels are set to 0.
    """
    intr = camera.intrinsics
    w, h = intr.image_size
    xx, yy = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    pix = np.stack([xx, yy], axis=-1)
    dirs_cam, valid = fisheye_unproject(pix, intr)
    dirs = dirs_cam @ camera.pose.rotation.T
    origin = camera.pose.translation
    t, idx = raycast(scene, origin, dirs)
    pts = origin + t[..., None] * dirs
    img = _shade(scene, pts, idx)
    img[~valid] = 0.0
    return img, valid


def gt_erp_inverse_depth(scene: Scene, grid: ErpGrid, sampling: InverseDepthSampling) -> InverseDepthMap:
    """Analytic ground truth: continuous inverse-depth indices on the ERP grid."""
    rays = erp_ray_grid(grid)
    t, _ = raycast(scene, np.zeros(3), rays)
    idx = np.clip(depth_to_index(t, sampling), 0.0, sampling.num_bins - 1.0)
    return InverseDepthMap(idx, np.ones(idx.shape, dtype=bool))


# target angular base wavelength of surface textures as seen from the rig;
# keeps texture structure matchable (a few fisheye pixels) at any distance
_TEX_ANGULAR_WAVELENGTH = 0.13


def _texture_for_distance(rng: SplitMix64, distance: float) -> ValueNoiseTexture:
    wavelength = _TEX_ANGULAR_WAVELENGTH * distance * rng.uniform(0.8, 1.25)
    return ValueNoiseTexture(seed=rng.next_u64(), base_frequency=1.0 / wavelength, octaves=2)


def canned_suite(seed: int, count: int = 12) -> list[Scene]:
    """Procedural evaluation suite: room-like boxes and floating primitives.

    Scene i is fully determined by (seed, i).  Even indices are rooms (the
    rig sits inside a textured box, possibly with floating objects); odd
    indices are open scenes with floating spheres/boxes, an optional floor
    plane, and the textured background sphere.  Texture frequency scales
    with each primitive's distance from the rig so the projected texture
    stays within the matchable band.
    """
    scenes = []
    suite_seed = tag_seed(seed, "scene-suite")
    background_depth = 15.0
    for i in range(count):
        rng = SplitMix64(mix_seed(suite_seed, i))
        prims: list = []
        if i % 2 == 0:
            # room: interior of a box around the rig
            half = np.array(
                [rng.uniform(2.4, 3.4), rng.uniform(1.6, 2.2), rng.uniform(2.4, 3.4)]
            )
            prims.append(Box(np.zeros(3), half, _texture_for_distance(rng, float(half.mean()))))
            n_objects = rng.randint(1, 3)
            max_r = 0.75 * float(half.min())
        else:
            n_objects = rng.randint(4, 7)
            max_r = 4.0
        for _ in range(n_objects):
            extent = rng.uniform(0.3, 0.6)
            dist = rng.uniform(1.0 + extent, max(max_r, 1.0 + extent + 0.1))
            az = rng.uniform(0.0, 2.0 * np.pi)
            el = rng.uniform(-0.45, 0.45)
            center = dist * np.array([np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)])
            tex = _texture_for_distance(rng, dist)
            if rng.next_float() < 0.5:
                prims.append(Sphere(center, extent, tex))
            else:
                prims.append(Box(center, np.full(3, extent * 0.8), tex))
        scenes.append(
            Scene(prims, background_depth=background_depth,
                  background_texture=_texture_for_distance(rng, background_depth))
        )
    return scenes


def _texture_to_dict(t: ValueNoiseTexture) -> dict:
    return {"seed": int(t.seed), "base_frequency": t.base_frequency, "octaves": t.octaves}


def _texture_from_dict(d: dict) -> ValueNoiseTexture:
    return ValueNoiseTexture(int(d["seed"]), float(d.get("base_frequency", 4.0)), int(d.get("octaves", 4)))


def scene_to_dict(scene: Scene) -> dict:
    prims = []
    for p in scene.primitives:
        if isinstance(p, Sphere):
            prims.append({"type": "sphere", "center": list(p.center), "radius": p.radius,
                          "texture": _texture_to_dict(p.texture)})
        elif isinstance(p, Plane):
            prims.append({"type": "plane", "point": list(p.point), "normal": list(p.normal),
                          "texture": _texture_to_dict(p.texture)})
        elif isinstance(p, Box):
            prims.append({"type": "box", "center": list(p.center), "half_size": list(p.half_size),
                          "texture": _texture_to_dict(p.texture)})
        else:
            raise ValueError(f"unknown primitive type: {type(p).__name__}")
    return {
        "primitives": prims,
        "background_depth": scene.background_depth,
        "background_texture": _texture_to_dict(scene.background_texture),
    }


def scene_from_dict(doc: dict) -> Scene:
    prims = []
    for p in doc["primitives"]:
        kind = p["type"]
        tex = _texture_from_dict(p["texture"])
        if kind == "sphere":
            prims.append(Sphere(np.asarray(p["center"], dtype=np.float64), float(p["radius"]), tex))
        elif kind == "plane":
            prims.append(Plane(np.asarray(p["point"], dtype=np.float64),
                               np.asarray(p["normal"], dtype=np.float64), tex))
        elif kind == "box":
            prims.append(Box(np.asarray(p["center"], dtype=np.float64),
                             np.asarray(p["half_size"], dtype=np.float64), tex))
        else:
            raise ValueError(f"unknown primitive type: {kind}")
    return Scene(prims, float(doc["background_depth"]), _texture_from_dict(doc["background_texture"]))


def load_scene_file(path) -> list[Scene]:
    """Load scenes from a JSON file holding one scene or a list of scenes."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if isinstance(doc, list):
        return [scene_from_dict(d) for d in doc]
    return [scene_from_dict(doc)]
