"""Deterministic synthetic scenes with exact ground truth.

Cuboids stand on a flat ground plane in front of a pinhole camera. Each map
pixel casts a ray through its centre; the nearest cuboid face hit sets the
pixel's depth and owner, so an instance spans every depth class between its
near corner and its visible far edge. All randomness comes from
:class:`~depthmask.rng.Xoshiro256` seeded with ``SceneSpec.rng_seed``.

Draw order per instance attempt: category, w, l, h, yaw, depth, u, score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import (
    QUANTIZATION_MARGIN,
    Category,
    InstanceDetection,
    InstanceMask,
    PixelDepthMap,
    scale_bbox,
)
from .depth_bins import DepthBins
from .errors import DomainError, InputError
from .geometry import (
    CameraIntrinsics,
    ObjectDims,
    Point3D,
    corners_from_dims,
    locate_3d,
    project,
    rotation_y,
)
from .rng import Xoshiro256

Range = tuple[float, float]

# (w, l, h) ranges in metres; l >= w throughout
DEFAULT_DIMS: dict[Category, tuple[Range, Range, Range]] = {
    Category.CAR: ((1.5, 1.9), (3.5, 4.6), (1.4, 1.7)),
    Category.PEDESTRIAN: ((0.45, 0.6), (0.6, 1.0), (1.55, 1.9)),
    Category.CYCLIST: ((0.5, 0.7), (1.6, 1.9), (1.6, 1.8)),
}

KITTI_INTRINSICS = CameraIntrinsics(721.5377, 721.5377, 609.5593, 172.854)
KITTI_SIZE = (1248, 384)


def kitti_like_intrinsics(width: int, height: int) -> CameraIntrinsics:
    """The KITTI camera's field of view resampled to a ``width x height`` image."""
    sx, sy = width / KITTI_SIZE[0], height / KITTI_SIZE[1]
    k = KITTI_INTRINSICS
    return CameraIntrinsics(k.f_x * sx, k.f_y * sy, k.c_x * sx, k.c_y * sy)


@dataclass(frozen=True)
class SceneSpec:
    rng_seed: int = 0
    n_instances: int = 5
    depth_range: Range = (5.0, 60.0)
    dims: dict = field(default_factory=lambda: dict(DEFAULT_DIMS))
    width: int = 1248
    height: int = 384
    scale: int = 4
    intrinsics: CameraIntrinsics = KITTI_INTRINSICS
    bins: DepthBins = DepthBins(64, 2.0, 80.0)
    camera_height: float = 1.65
    # reject placements whose depth-class interval overlaps that of an
    # instance with an overlapping box
    enforce_separation: bool = False
    max_attempts: int = 50

    def validate(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise InputError(f"image must have positive size, got {self.width}x{self.height}")
        if not self.scale > 0:
            raise InputError(f"scale must be positive, got {self.scale}")
        if self.map_shape[0] < 1 or self.map_shape[1] < 1:
            raise InputError("map resolution is empty at this scale")
        if self.n_instances < 0:
            raise InputError(f"n_instances must be >= 0, got {self.n_instances}")
        lo, hi = self.depth_range
        if not 0 < lo <= hi:
            raise InputError(f"invalid depth range {self.depth_range}")
        for cat, ranges in self.dims.items():
            Category(cat)
            for a, b in ranges:
                if not 0 < a <= b:
                    raise InputError(f"invalid dimension range {(a, b)} for {cat}")
        biggest = max(math.hypot(r[0][1], r[1][1]) / 2 for r in self.dims.values())
        if lo - biggest <= 0.1:
            raise InputError(
                f"minimum depth {lo} m lets objects reach the camera plane "
                f"(half diagonal up to {biggest:.2f} m)"
            )

    @property
    def map_shape(self) -> tuple[int, int]:
        return int(self.height // self.scale), int(self.width // self.scale)


@dataclass
class Scene:
    spec: SceneSpec
    detections: list[InstanceDetection]
    depth_map: PixelDepthMap
    masks: list[InstanceMask]
    # metric depth of the visible surface, inf on background
    depth: np.ndarray = field(repr=False)
    occlusion_order: list[int] = field(default_factory=list)


def _pixel_rays(spec: SceneSpec) -> np.ndarray:
    """Ray directions ``(H, W, 3)`` through map pixel centres, ``z = 1``."""
    rows, cols = spec.map_shape
    cam = spec.intrinsics
    u = (np.arange(cols) + 0.5) * spec.scale
    v = (np.arange(rows) + 0.5) * spec.scale
    rays = np.empty((rows, cols, 3))
    rays[..., 0] = ((u - cam.c_x) / cam.f_x)[None, :]
    rays[..., 1] = ((v - cam.c_y) / cam.f_y)[:, None]
    rays[..., 2] = 1.0
    return rays


def ray_box_depth(rays: np.ndarray, center: np.ndarray, dims: ObjectDims, theta: float) -> np.ndarray:
    """Camera-frame depth of the first hit of each ray on the cuboid, inf on miss.

    Rays start at the camera origin and have unit z component, so the ray
    parameter at the hit equals its depth.
    """
    rot = rotation_y(theta)
    half = np.array([dims.l, dims.h, dims.w]) / 2.0
    origin = rot.T @ (-np.asarray(center, dtype=np.float64))
    direc = rays @ rot  # rot.T applied to each ray
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-half - origin) / direc
        t2 = (half - origin) / direc
    parallel = direc == 0
    inside = np.abs(origin) <= half
    lo = np.where(parallel, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
    hi = np.where(parallel, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
    t_near = lo.max(axis=-1)
    t_far = hi.min(axis=-1)
    hit = (t_near <= t_far) & (t_near > 0)
    return np.where(hit, t_near, np.inf)


def footprint_bbox(spec: SceneSpec, center: Point3D, dims: ObjectDims, theta: float):
    """Full-image box of the projected corners, clipped to the image; None if empty."""
    corners = corners_from_dims(dims, theta) + np.array([center.x, center.y, center.z])
    uv = [project(spec.intrinsics, Point3D(*c))[:2] for c in corners]
    us, vs = zip(*uv)
    left, right = max(min(us), 0.0), min(max(us), float(spec.width))
    top, bottom = max(min(vs), 0.0), min(max(vs), float(spec.height))
    if right <= left or bottom <= top:
        return None
    return (left, top, right, bottom)


def _windows_overlap(a, b, scale) -> bool:
    al, at, ar, ab = scale_bbox(a, scale)
    bl, bt, br, bb = scale_bbox(b, scale)
    return al < br and bl < ar and at < bb and bt < ab


def separated(a: InstanceDetection, b: InstanceDetection, bins: DepthBins, scale) -> bool:
    """Whether ``a`` and ``b`` cannot compete for a pixel: their crop windows
    are disjoint, or their class intervals (threshold plus quantization
    margin on each side) do not meet."""
    if not _windows_overlap(a.bbox, b.bbox, scale):
        return True
    gap = abs(bins.continuous_index(a.center_depth) - bins.continuous_index(b.center_depth))
    reach = a.threshold(bins) + b.threshold(bins) + 2 * QUANTIZATION_MARGIN
    return gap > reach


def _draw_instance(
    rng: Xoshiro256, spec: SceneSpec, ident: int
) -> tuple[InstanceDetection, Point3D] | None:
    cats = [Category(c) for c in spec.dims]
    cat = cats[rng.integers(len(cats))]
    (w0, w1), (l0, l1), (h0, h1) = spec.dims[cat]
    dims = ObjectDims(w=rng.uniform(w0, w1), l=rng.uniform(l0, l1), h=rng.uniform(h0, h1))
    theta = rng.uniform(-math.pi, math.pi)
    z = rng.uniform(*spec.depth_range)
    u = rng.uniform(0.0, float(spec.width))
    score = rng.uniform(0.05, 1.0)
    # box rests on the ground plane, camera_height below the optical centre
    y = spec.camera_height - dims.h / 2.0
    v = y / z * spec.intrinsics.f_y + spec.intrinsics.c_y
    center = locate_3d(spec.intrinsics, u, v, z)
    bbox = footprint_bbox(spec, center, dims, theta)
    if bbox is None:
        return None
    return InstanceDetection(ident, cat, score, bbox, center.z, dims, theta), center


def generate(spec: SceneSpec) -> Scene:
    spec.validate()
    rng = Xoshiro256(spec.rng_seed)
    placed: list[tuple[InstanceDetection, Point3D]] = []
    for _ in range(spec.n_instances):
        for _attempt in range(spec.max_attempts):
            drawn = _draw_instance(rng, spec, len(placed) + 1)
            if drawn is None:
                continue
            det, center = drawn
            if spec.enforce_separation and not all(
                separated(det, other, spec.bins, spec.scale) for other, _ in placed
            ):
                continue
            placed.append((det, center))
            break

    rays = _pixel_rays(spec)
    shape = spec.map_shape
    zbuf = np.full(shape, np.inf)
    owner = np.full(shape, -1, dtype=np.int64)
    for n, (det, center) in enumerate(placed):
        depth = ray_box_depth(rays, np.array([center.x, center.y, center.z]), det.dims, det.theta)
        nearer = depth < zbuf
        zbuf[nearer] = depth[nearer]
        owner[nearer] = n

    values = np.zeros(shape, dtype=np.int32)
    fg = owner >= 0
    if fg.any():
        values[fg] = spec.bins.class_of_depth_array(zbuf[fg])
    depth_map = PixelDepthMap(values, spec.bins.k, spec.scale)

    detections, masks = [], []
    for n, (det, _) in enumerate(placed):
        bitmap = owner == n
        if not bitmap.any():
            continue  # fully hidden or between pixel centres
        detections.append(det)
        masks.append(InstanceMask(det.id, det.category, det.score, bitmap))
    order = [d.id for d in sorted(detections, key=lambda d: (d.center_depth, d.id))]
    return Scene(spec, detections, depth_map, masks, zbuf, order)


def perturb(
    scene: Scene,
    depth_noise_sigma: float = 0.0,
    bbox_noise: float = 0.0,
    seed: int = 0,
) -> tuple[PixelDepthMap, list[InstanceDetection]]:
    """Noisy copies of the scene's depth map and detections.

    Every map pixel (background included) gets ``floor(sigma * n + 0.5)``
    added, ``n`` standard normal in row-major order, and is clamped to
    ``[0, k]``. Then each box coordinate moves by a uniform draw in
    ``[-bbox_noise, bbox_noise]`` (left, top, right, bottom per detection),
    and is clipped to the image. Zero noise levels draw nothing.
    """
    if depth_noise_sigma < 0 or bbox_noise < 0:
        raise DomainError("noise levels must be non-negative")
    rng = Xoshiro256(seed)
    dm = scene.depth_map
    values = dm.values.copy()
    if depth_noise_sigma > 0:
        noise = np.floor(depth_noise_sigma * rng.normal_array(values.shape) + 0.5)
        values = np.clip(values + noise.astype(np.int64), 0, dm.k).astype(np.int32)
    noisy_map = PixelDepthMap(values, dm.k, dm.scale)

    dets = []
    w, h = scene.spec.width, scene.spec.height
    for det in scene.detections:
        box = det.bbox
        if bbox_noise > 0:
            jit = [rng.uniform(-bbox_noise, bbox_noise) for _ in range(4)]
            left, top, right, bottom = (c + j for c, j in zip(box, jit))
            left, right = sorted((min(max(left, 0.0), w), min(max(right, 0.0), w)))
            top, bottom = sorted((min(max(top, 0.0), h), min(max(bottom, 0.0), h)))
            right = max(right, left + 1e-3)
            bottom = max(bottom, top + 1e-3)
            box = (left, top, right, bottom)
        dets.append(replace(det, bbox=box))
    return noisy_map, dets


def with_bins(spec: SceneSpec, bins: DepthBins) -> SceneSpec:
    return replace(spec, bins=bins)
