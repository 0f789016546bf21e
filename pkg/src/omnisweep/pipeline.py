"""End-to-end orchestration: dataset generation, pipeline runs, ablations.

All commands are deterministic functions of their configuration: reruns
overwrite their outputs with byte-identical files.  Output layout under
``output_dir``:

    images/sample_###_cam#.pgm   rendered (optionally corrupted) views
    gt/sample_###_gt.pfm         ground-truth inverse-depth indices (2H x 2W)
    manifest.json                sample list
    pred/sample_###_pred.pfm     predicted indices at full resolution
    metrics.csv                  per-sample rows plus a pooled summary row
    ablate.csv                   one summary row per ablation variant
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np

from . import fileio
from .cameras import ErpGrid, InverseDepthSampling, Rig, default_rig, index_to_depth, load_calibration
from .config import VARIANTS, ExperimentConfig
from .correlation import CorrelationTensor, build_correlation_tensor
from .corruption import CorruptionSpec, corrupt
from .depth import (
    InverseDepthMap,
    RefineConfig,
    convex_upsample,
    iterative_refine,
    uniform_upsample_mask,
)
from .fusion import ConsistencyVolume, FusionConfig, fuse_volume, mean_correlation_volume
from .metrics import CSV_HEADER, Metrics, MetricsAccumulator, compare_report, format_row
from .scenes import Scene, canned_suite, gt_erp_inverse_depth, load_scene_file, render_fisheye
from .sweeping import build_swept_volume, extract_features


@dataclass
class Resolved:
    rig: Rig
    grid: ErpGrid
    fine_grid: ErpGrid
    sampling: InverseDepthSampling
    scenes: list[Scene]


def resolve(cfg: ExperimentConfig) -> Resolved:
    """Materialize rig, grids, sampling and the scene list from a config."""
    if cfg.rig_file:
        rig, _, _ = load_calibration(cfg.rig_file)
    else:
        rig = default_rig()
    grid = ErpGrid(cfg.erp_width, cfg.erp_height)
    fine_grid = ErpGrid(2 * cfg.erp_width, 2 * cfg.erp_height)
    sampling = InverseDepthSampling(cfg.num_bins, cfg.d_min, cfg.d_max)
    if cfg.scenes.file:
        scenes = load_scene_file(cfg.scenes.file)
    elif cfg.scenes.suite == "canned12":
        scenes = canned_suite(cfg.seed, cfg.scenes.count)
    else:
        raise ValueError(f"unknown scene suite: {cfg.scenes.suite}")
    return Resolved(rig, grid, fine_grid, sampling, scenes)


def _corruption_spec(cfg: ExperimentConfig) -> CorruptionSpec:
    return CorruptionSpec(noise_amplitude=cfg.corruption.noise_amplitude)


def _image_name(sample: int, cam: int) -> str:
    return f"sample_{sample:03d}_cam{cam}.pgm"


def _gt_name(sample: int) -> str:
    return f"sample_{sample:03d}_gt.pfm"


def generate(cfg: ExperimentConfig) -> dict:
    """Render all rig views and ground truth for every scene in the suite."""
    res = resolve(cfg)
    out = cfg.output_dir
    img_dir = os.path.join(out, "images")
    gt_dir = os.path.join(out, "gt")
    os.makedirs(img_dir, exist_ok=True)
    os.makedirs(gt_dir, exist_ok=True)
    spec = _corruption_spec(cfg)
    samples = []
    for s, scene in enumerate(res.scenes):
        names = []
        for v, cam in enumerate(res.rig.cameras):
            img, _ = render_fisheye(scene, cam)
            if cfg.corruption.enabled:
                img = corrupt(img, s, v, spec)
            name = _image_name(s, v)
            fileio.write_pgm(os.path.join(img_dir, name), img)
            names.append(name)
        gt = gt_erp_inverse_depth(scene, res.fine_grid, res.sampling)
        fileio.write_pfm(os.path.join(gt_dir, _gt_name(s)), gt.values)
        samples.append({"index": s, "images": names, "gt": _gt_name(s)})
    manifest = {
        "samples": samples,
        "num_cameras": len(res.rig),
        "erp_width": cfg.erp_width,
        "erp_height": cfg.erp_height,
        "num_bins": cfg.num_bins,
        "corruption": cfg.corruption.enabled,
        "seed": cfg.seed,
    }
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return {
        "samples": len(samples),
        "images": len(samples) * len(res.rig),
        "output_dir": out,
        "manifest": os.path.join(out, "manifest.json"),
    }


def _load_manifest(cfg: ExperimentConfig) -> dict:
    path = os.path.join(cfg.output_dir, "manifest.json")
    if not os.path.exists(path):
        raise FileNotFoundError(f"no manifest at {path}; run generate first")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def build_sample_tensor(cfg: ExperimentConfig, res: Resolved, images: list[np.ndarray]) -> CorrelationTensor:
    """Features -> swept volumes -> correlation tensor for one sample."""
    volumes = []
    for cam, img in zip(res.rig.cameras, images):
        h, w = img.shape
        yy, xx = np.mgrid[0:h, 0:w]
        cx, cy = cam.intrinsics.principal_point
        r = np.hypot(xx - cx, yy - cy)
        fov_valid = r <= cam.intrinsics.focal * cam.intrinsics.fov_max
        feats = extract_features(img, fov_valid)
        volumes.append(build_swept_volume(feats, cam, res.grid, res.sampling))
    return build_correlation_tensor(volumes)


def _fuse_variant(tensor: CorrelationTensor, cfg: ExperimentConfig, variant: str | None = None) -> ConsistencyVolume:
    fus = cfg.fusion
    kind = variant if variant is not None else fus.variant
    if kind == "mean":
        return mean_correlation_volume(tensor)
    if kind == "softmax":
        top_k = tensor.values.shape[0]  # keep-all: softmax without sparsification
    else:
        top_k = fus.top_k
    return fuse_volume(tensor, FusionConfig(temperature=fus.temperature, top_k=top_k, mode="infer"))


def _refine_config(cfg: ExperimentConfig, smooth: bool | None = None) -> RefineConfig:
    ref = cfg.refine
    return RefineConfig(
        iterations=ref.iterations,
        lookup_radius=ref.lookup_radius,
        smooth=ref.smooth if smooth is None else smooth,
        gamma=ref.gamma,
    )


def _predict(tensor: CorrelationTensor, cfg: ExperimentConfig,
             variant: str | None = None, smooth: bool | None = None) -> InverseDepthMap:
    volume = _fuse_variant(tensor, cfg, variant)
    maps = iterative_refine(volume, _refine_config(cfg, smooth))
    coarse = maps[-1]
    mask = uniform_upsample_mask(*coarse.values.shape)
    return convex_upsample(coarse, mask)


def _read_sample_images(cfg: ExperimentConfig, entry: dict) -> list[np.ndarray]:
    img_dir = os.path.join(cfg.output_dir, "images")
    return [fileio.read_pgm(os.path.join(img_dir, name)) for name in entry["images"]]


def _read_gt(cfg: ExperimentConfig, entry: dict) -> InverseDepthMap:
    values = fileio.read_pfm(os.path.join(cfg.output_dir, "gt", entry["gt"])).astype(np.float64)
    return InverseDepthMap(values, np.ones(values.shape, dtype=bool))


@dataclass
class RunResult:
    rows: list[tuple[str, Metrics]]
    summary: Metrics
    csv_path: str


def run(cfg: ExperimentConfig) -> RunResult:
    """Execute the full pipeline over a generated dataset and score it."""
    res = resolve(cfg)
    manifest = _load_manifest(cfg)
    pred_dir = os.path.join(cfg.output_dir, "pred")
    os.makedirs(pred_dir, exist_ok=True)
    acc = MetricsAccumulator()
    rows = []
    for entry in manifest["samples"]:
        s = entry["index"]
        images = _read_sample_images(cfg, entry)
        tensor = build_sample_tensor(cfg, res, images)
        pred = _predict(tensor, cfg)
        fileio.write_pfm(os.path.join(pred_dir, f"sample_{s:03d}_pred.pfm"), pred.values)
        if cfg.write_metric_depth:
            depth_m = index_to_depth(pred.values, res.sampling)
            fileio.write_pfm(os.path.join(pred_dir, f"sample_{s:03d}_depth.pfm"), depth_m)
        gt = _read_gt(cfg, entry)
        rows.append((f"sample_{s:03d}", acc.add(pred, gt)))
    summary = acc.summary()
    rows.append(("summary", summary))
    csv_path = os.path.join(cfg.output_dir, "metrics.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(compare_report(rows))
    return RunResult(rows, summary, csv_path)


def ablate(cfg: ExperimentConfig, variants: list[str] | None = None) -> RunResult:
    """Run every ablation variant over the dataset, one summary row each.

    The per-sample correlation tensors are built once and shared across
    variants; each variant's result is identical to a standalone run with
    that configuration.
    """
    chosen = list(variants) if variants else list(VARIANTS)
    unknown = set(chosen) - set(VARIANTS)
    if unknown:
        raise ValueError(f"unknown ablation variants: {sorted(unknown)}")
    res = resolve(cfg)
    manifest = _load_manifest(cfg)
    settings = {
        "k1": dict(variant="topk_k1"),
        "k2": dict(variant="topk_k2"),
        "k3": dict(variant="topk_k3"),
        "no_topk": dict(variant="softmax"),
        "plain_mean": dict(variant="mean"),
        "no_smoothing": dict(variant="topk_k3", smooth=False),
    }
    accs = {name: MetricsAccumulator() for name in chosen}
    for entry in manifest["samples"]:
        images = _read_sample_images(cfg, entry)
        tensor = build_sample_tensor(cfg, res, images)
        gt = _read_gt(cfg, entry)
        volumes: dict[str, ConsistencyVolume] = {}
        for name in chosen:
            spec = settings[name]
            kind = spec["variant"]
            if kind.startswith("topk_k"):
                k = int(kind[-1])
                vol_key = f"topk{k}"
                if vol_key not in volumes:
                    volumes[vol_key] = _fuse_variant(tensor, replace(cfg, fusion=replace(cfg.fusion, top_k=k)), "topk")
                volume = volumes[vol_key]
            else:
                if kind not in volumes:
                    volumes[kind] = _fuse_variant(tensor, cfg, kind)
                volume = volumes[kind]
            maps = iterative_refine(volume, _refine_config(cfg, smooth=spec.get("smooth")))
            coarse = maps[-1]
            pred = convex_upsample(coarse, uniform_upsample_mask(*coarse.values.shape))
            accs[name].add(pred, gt)
    rows = [(name, accs[name].summary()) for name in chosen]
    csv_path = os.path.join(cfg.output_dir, "ablate.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(compare_report(rows))
    return RunResult(rows, rows[-1][1], csv_path)


def report(entries: list[tuple[str, str]], output_path: str | None = None) -> str:
    """Combine the summary rows of several metrics CSVs into one report.

    ``entries`` holds (label, metrics_csv_path) pairs; the summary row of
    each file is relabeled and emitted in input order.
    """
    lines = [CSV_HEADER]
    for label, path in entries:
        with open(path, "r", encoding="utf-8") as f:
            content = f.read().strip().splitlines()
        if not content or content[0] != CSV_HEADER:
            raise ValueError(f"{path} is not a metrics CSV")
        summary = None
        for line in content[1:]:
            if line.startswith("summary,"):
                summary = line
        if summary is None:
            summary = content[-1]
        lines.append(label + summary[summary.index(","):])
    text = "\n".join(lines) + "\n"
    if output_path:
        with open(output_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    return text
