"""``depthmask`` command line.

Shared options (``--k``, ``--dmin``, ``--dmax``, ``--scheme``, ``--scale``,
``--ap-thresholds``, ``--seed``, ``--jobs``, ``--out``) resolve as
command-line flag, then ``--config`` JSON file, then built-in default.

On failure every command prints one line to stderr,
``depthmask: error: <ErrorType>: <message>``, and exits non-zero (2 for
usage errors, 1 otherwise).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .assembly import assemble, id_map
from .depth_bins import DepthBins, Scheme
from .errors import DepthMaskError
from .evaluation import COCO_THRESHOLDS, evaluate
from .io import (
    read_depth_map,
    read_detections,
    read_instances,
    write_color_dump,
    write_instances,
)
from .pipeline import DEFAULT_KS, bench, sweep_k, write_scene
from .synth import SceneSpec, generate, kitti_like_intrinsics, perturb

BENCH_BUDGET_MS = 20.0


@dataclass
class RunConfig:
    k: int = 64
    dmin: float = 2.0
    dmax: float = 80.0
    scheme: str = "exponential"
    scale: float = 4
    ap_thresholds: tuple[float, ...] = COCO_THRESHOLDS
    seed: int = 0
    jobs: int = 1
    out: str = "."

    def bins(self) -> DepthBins:
        return DepthBins(self.k, self.dmin, self.dmax, Scheme(self.scheme))


class UsageError(DepthMaskError):
    pass


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _scale(text: str) -> float:
    value = float(text)
    return int(value) if value.is_integer() else value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Flags > config file > defaults."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        if "ap_thresholds" in doc:
            doc["ap_thresholds"] = tuple(doc["ap_thresholds"])
        cfg = replace(cfg, **doc)
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            cfg = replace(cfg, **{f.name: value})
    cfg.bins()  # validate early
    return cfg


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("shared options")
    g.add_argument("--config", help="JSON file with defaults for the shared options")
    g.add_argument("--k", type=int, help="number of depth classes (default 64)")
    g.add_argument("--dmin", type=float, help="nearest class depth in metres (default 2)")
    g.add_argument("--dmax", type=float, help="farthest class depth in metres (default 80)")
    g.add_argument("--scheme", choices=[s.value for s in Scheme], help="bin spacing")
    g.add_argument("--scale", type=_scale, help="image / map resolution ratio (default 4)")
    g.add_argument("--ap-thresholds", type=_float_list, help="IoU thresholds averaged into AP")
    g.add_argument("--seed", type=int, help="base random seed (default 0)")
    g.add_argument("--jobs", type=int, help="worker threads (default 1)")
    g.add_argument("--out", help="output directory (default .)")


def cmd_discretize(args, cfg: RunConfig) -> int:
    exp = DepthBins(cfg.k, cfg.dmin, cfg.dmax, Scheme.EXPONENTIAL)
    lin = DepthBins(cfg.k, cfg.dmin, cfg.dmax, Scheme.LINEAR)
    print("i\texponential\tlinear")
    for i in range(1, cfg.k + 1):
        print(f"{i}\t{exp.depth_of_class(i)!r}\t{lin.depth_of_class(i)!r}")
    return 0


def _stem(path: Path) -> str:
    return path.name.split(".", 1)[0]


def _assemble_one(depth_path: Path, dets_path: Path, cfg: RunConfig, out: Path, color: bool) -> dict:
    bins = cfg.bins()
    dm = read_depth_map(depth_path, scale=cfg.scale, k=cfg.k)
    dets = read_detections(dets_path)
    masks = assemble(dm, dets, bins)
    target = out / f"{_stem(depth_path)}.masks.pgm"
    write_instances(target, masks, dm.values.shape, extra={"depth_map": str(depth_path)})
    if color:
        write_color_dump(target.with_suffix(".ppm"), id_map(masks, dm.values.shape))
    return {"image": _stem(depth_path), "output": str(target), "instances": len(masks),
            "pixels": sum(m.area for m in masks)}


def cmd_assemble(args, cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.batch:
        root = Path(args.batch)
        pairs = []
        for depth in sorted(root.glob("*.depth.pgm")):
            dets = root / f"{_stem(depth)}.dets.txt"
            if not dets.exists():
                raise UsageError(f"{depth}: no matching detections file {dets}")
            pairs.append((depth, dets))
    else:
        if not (args.depth_map and args.detections):
            raise UsageError("assemble needs DEPTH_MAP and DETECTIONS, or --batch DIR")
        pairs = [(Path(args.depth_map), Path(args.detections))]

    def run(pair):
        return _assemble_one(pair[0], pair[1], cfg, out, args.color)

    if cfg.jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(p) for p in pairs]
    for r in results:
        print(f"{r['image']}\t{r['instances']} instances\t{r['pixels']} pixels\t{r['output']}")
    return 0


def _collect(path: Path, pattern: str) -> dict[str, Path]:
    if path.is_dir():
        return {_stem(p): p for p in sorted(path.glob(pattern))}
    if not path.exists():
        raise UsageError(f"{path}: no such file or directory")
    return {_stem(path): path}


def cmd_eval(args, cfg: RunConfig) -> int:
    preds = _collect(Path(args.pred), "*.masks.pgm")
    gts = _collect(Path(args.gt), "*.gt.pgm")
    if Path(args.pred).is_file() and Path(args.gt).is_file():
        preds = {"0": Path(args.pred)}
        gts = {"0": Path(args.gt)}
    missing = sorted(set(gts) - set(preds))
    if missing:
        raise UsageError(f"no predictions for images: {missing}")
    pm, gm = [], []
    for n, key in enumerate(sorted(gts)):
        g = read_instances(gts[key], image_id=n)
        p = read_instances(preds[key], image_id=n)
        if g and p and g[0].bitmap.shape != p[0].bitmap.shape:
            raise UsageError(f"{key}: prediction and ground truth resolutions differ")
        gm += g
        pm += p
    res = evaluate(pm, gm, iou_thresholds=cfg.ap_thresholds)
    if args.json:
        print(json.dumps(res.as_dict(), indent=2))
    else:
        print(res.table())
    return 0


def _scene_spec(args, cfg: RunConfig, seed: int) -> SceneSpec:
    return SceneSpec(
        rng_seed=seed,
        n_instances=args.n_instances,
        depth_range=tuple(args.depth_range),
        width=args.width,
        height=args.height,
        intrinsics=kitti_like_intrinsics(args.width, args.height),
        scale=cfg.scale,
        bins=cfg.bins(),
        enforce_separation=args.separate,
    )


def cmd_synth(args, cfg: RunConfig) -> int:
    for n in range(args.n_scenes):
        seed = cfg.seed + n
        scene = generate(_scene_spec(args, cfg, seed))
        dm, dets = scene.depth_map, scene.detections
        if args.noise > 0 or args.bbox_noise > 0:
            dm, dets = perturb(scene, args.noise, args.bbox_noise, seed=args.noise_seed + seed)
        paths = write_scene(cfg.out, f"scene_{seed:06d}", scene, dm, dets)
        print(f"scene_{seed:06d}\t{len(scene.detections)} instances\t{paths['depth']}")
    return 0


def cmd_sweep_k(args, cfg: RunConfig) -> int:
    ks = args.ks
    if any(k < 2 for k in ks):
        raise UsageError(f"every K must be >= 2, got {list(ks)}")
    base = SceneSpec(scale=cfg.scale, bins=cfg.bins())
    rows = sweep_k(
        ks,
        noise_sigma=args.noise,
        bbox_noise=args.bbox_noise,
        n_scenes=args.n_scenes,
        n_instances=args.n_instances,
        seed=cfg.seed,
        base=base,
        iou_thresholds=cfg.ap_thresholds,
    )
    print("K\tAP\tAP50\tassemble_s")
    for r in rows:
        print(f"{r.k}\t{100 * r.ap:.2f}\t{100 * r.ap50:.2f}\t{r.assemble_seconds:.4f}")
    return 0


def cmd_bench(args, cfg: RunConfig) -> int:
    rep = bench(args.instances, args.repeats, cfg.jobs, cfg.seed)
    if rep.median_ms < BENCH_BUDGET_MS:
        verdict = "PASS"
    elif rep.median_ms < 2 * BENCH_BUDGET_MS:
        verdict = "WARN"
    else:
        verdict = "FAIL"
    if args.json:
        print(json.dumps({**asdict(rep), "budget_ms": BENCH_BUDGET_MS, "verdict": verdict}))
    else:
        h, w = rep.map_shape
        print(f"map {w}x{h}, {rep.n_instances} instances, {rep.repeats} runs")
        print(f"median {rep.median_ms:.3f} ms, min {rep.min_ms:.3f} ms (budget {BENCH_BUDGET_MS:g} ms): {verdict}")
        print(f"throughput 1 thread {rep.single_throughput:.1f} maps/s, "
              f"{rep.jobs} threads {rep.parallel_throughput:.1f} maps/s")
    return 0 if verdict != "FAIL" else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="depthmask", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discretize", help="print class depths for both spacings")
    _common(p)
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("assemble", help="instance masks from depth map + detections")
    p.add_argument("depth_map", nargs="?", help="depth-class map (.pgm)")
    p.add_argument("detections", nargs="?", help="detections text file")
    p.add_argument("--batch", metavar="DIR", help="process every *.depth.pgm / *.dets.txt pair in DIR")
    p.add_argument("--color", action="store_true", help="also write a colourised .ppm of each id map")
    _common(p)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("eval", help="mask AP / AP50 per category")
    p.add_argument("--pred", required=True, help="predicted id map, or directory of *.masks.pgm")
    p.add_argument("--gt", required=True, help="ground-truth id map, or directory of *.gt.pgm")
    p.add_argument("--json", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="write synthetic scenes with exact ground truth")
    p.add_argument("--n-scenes", type=int, default=1)
    p.add_argument("--n-instances", type=int, default=5)
    p.add_argument("--width", type=int, default=1248)
    p.add_argument("--height", type=int, default=384)
    p.add_argument("--depth-range", type=float, nargs=2, default=(5.0, 60.0), metavar=("NEAR", "FAR"))
    p.add_argument("--separate", action="store_true", help="keep overlapping instances apart in depth class")
    p.add_argument("--noise", type=float, default=0.0, help="depth-class noise sigma for the written map")
    p.add_argument("--bbox-noise", type=float, default=0.0, help="box jitter in pixels for the written detections")
    p.add_argument("--noise-seed", type=int, default=1_000_000, help="offset added to the scene seed for noise")
    _common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep-k", help="AP against number of depth classes on noisy scenes")
    p.add_argument("--ks", type=_int_list, default=DEFAULT_KS)
    p.add_argument("--noise", type=float, default=1.0, help="depth-class noise sigma")
    p.add_argument("--bbox-noise", type=float, default=4.0, help="box jitter in pixels")
    p.add_argument("--n-scenes", type=int, default=20)
    p.add_argument("--n-instances", type=int, default=8)
    _common(p)
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("bench", help="time assembly on a 312x96 map")
    p.add_argument("--instances", type=int, default=30)
    p.add_argument("--repeats", type=int, default=50)
    p.add_argument("--json", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"depthmask: error: UsageError: {exc}", file=sys.stderr)
        return 2
    except (DepthMaskError, OSError) as exc:
        print(f"depthmask: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
