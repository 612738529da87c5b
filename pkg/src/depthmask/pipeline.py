"""Batch drivers shared by the CLI: scene files, the K sweep and the timing bench."""

from __future__ import annotations

import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .assembly import InstanceMask, assemble, available_cpus
from .depth_bins import DepthBins
from .evaluation import COCO_THRESHOLDS, evaluate
from .io import write_depth_map, write_detections, write_instances
from .synth import Scene, SceneSpec, generate, perturb

DEFAULT_KS = (2, 8, 32, 64, 96, 256)
# keeps noise streams distinct from the scene streams of the same seed
NOISE_SEED_OFFSET = 1_000_000


def write_scene(out_dir, stem: str, scene: Scene, depth_map=None, dets=None) -> dict[str, Path]:
    """Write a scene's inputs (depth map, detections) and ground truth masks.

    ``depth_map``/``dets`` override the exact inputs, e.g. with perturbed ones.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "depth": out / f"{stem}.depth.pgm",
        "dets": out / f"{stem}.dets.txt",
        "gt": out / f"{stem}.gt.pgm",
    }
    write_depth_map(paths["depth"], depth_map if depth_map is not None else scene.depth_map)
    write_detections(paths["dets"], dets if dets is not None else scene.detections)
    write_instances(
        paths["gt"],
        scene.masks,
        scene.depth_map.values.shape,
        extra={"seed": scene.spec.rng_seed, "occlusion_order": scene.occlusion_order},
    )
    return paths


def _tag(masks: list[InstanceMask], image_id: int) -> list[InstanceMask]:
    for m in masks:
        m.image_id = image_id
    return masks


@dataclass
class SweepRow:
    k: int
    ap: float
    ap50: float
    assemble_seconds: float


def sweep_k(
    ks=DEFAULT_KS,
    noise_sigma: float = 1.0,
    bbox_noise: float = 4.0,
    n_scenes: int = 20,
    n_instances: int = 8,
    seed: int = 0,
    base: SceneSpec | None = None,
    iou_thresholds=COCO_THRESHOLDS,
) -> list[SweepRow]:
    """AP against the number of depth classes on noisy synthetic scenes.

    Scene geometry and the noise stream depend only on the seeds, so every K
    sees the same objects and the same per-pixel noise draws; only the
    discretization changes.
    """
    base = base or SceneSpec()
    rows = []
    for k in ks:
        bins = replace(base.bins, k=k)
        preds, gts = [], []
        elapsed = 0.0
        for s in range(n_scenes):
            spec = replace(base, rng_seed=seed + s, n_instances=n_instances, bins=bins)
            scene = generate(spec)
            noisy_map, noisy_dets = perturb(
                scene, noise_sigma, bbox_noise, seed=NOISE_SEED_OFFSET + seed + s
            )
            t0 = time.perf_counter()
            masks = assemble(noisy_map, noisy_dets, bins)
            elapsed += time.perf_counter() - t0
            preds += _tag(masks, s)
            gts += _tag(scene.masks, s)
        res = evaluate(preds, gts, iou_thresholds=iou_thresholds)
        rows.append(SweepRow(k, res.mean_ap, res.mean_ap50, elapsed))
    return rows


@dataclass
class BenchReport:
    n_instances: int
    map_shape: tuple[int, int]
    repeats: int
    median_ms: float
    min_ms: float
    single_throughput: float  # maps per second
    parallel_throughput: float
    jobs: int


def bench_scene(n_instances: int = 30, seed: int = 0, bins: DepthBins | None = None) -> Scene:
    """A 1248x384 scene at scale 4 (312x96 map) with exactly ``n_instances``
    visible instances."""
    spec = SceneSpec(rng_seed=seed, n_instances=n_instances)
    if bins is not None:
        spec = replace(spec, bins=bins)
    extra = 0
    while True:
        scene = generate(replace(spec, n_instances=n_instances + extra))
        if len(scene.detections) >= n_instances or n_instances == 0:
            break
        extra += max(1, n_instances // 4)
    keep = {d.id for d in scene.detections[:n_instances]}
    scene.detections = [d for d in scene.detections if d.id in keep]
    scene.masks = [m for m in scene.masks if m.id in keep]
    return scene


def _assemble_repeatedly(job) -> int:
    dm, dets, bins, count = job
    for _ in range(count):
        assemble(dm, dets, bins)
    return count


def bench(n_instances: int = 30, repeats: int = 50, jobs: int = 1, seed: int = 0) -> BenchReport:
    scene = bench_scene(n_instances, seed)
    dm, dets, bins = scene.depth_map, scene.detections, scene.spec.bins
    assemble(dm, dets, bins)  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        assemble(dm, dets, bins)
        times.append(time.perf_counter() - t0)
    single = repeats / sum(times)

    # never more workers than cores: oversubscription only adds overhead
    workers = min(jobs, available_cpus())
    parallel = single
    if workers > 1:
        chunks = [repeats // workers + (i < repeats % workers) for i in range(workers)]
        t0 = time.perf_counter()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_assemble_repeatedly, [(dm, dets, bins, c) for c in chunks]))
        parallel = repeats / (time.perf_counter() - t0)
    return BenchReport(
        n_instances=len(dets),
        map_shape=dm.values.shape,
        repeats=repeats,
        median_ms=1e3 * statistics.median(times),
        min_ms=1e3 * min(times),
        single_throughput=single,
        parallel_throughput=parallel,
        jobs=workers,
    )
