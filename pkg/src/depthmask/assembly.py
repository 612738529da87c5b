"""Instance masks from a pixel-level depth-class map.

A pixel is assigned to a detected instance when

* it is foreground (class >= 1),
* its class lies within the instance's depth threshold of the instance's
  continuous depth index, and
* it falls inside the instance's 2D box, scaled down to map resolution.

Pixels claimed by several instances go to the one whose depth index is
closest; ties go to the nearer instance, then to the lower id.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .depth_bins import DepthBins
from .errors import ConfigurationError, DomainError, InputError
from .geometry import ObjectDims, depth_margin, depth_threshold

# |x - S| < threshold + QUANTIZATION_MARGIN. Map values are rounded classes, so
# a pixel whose true continuous index sits on the threshold can be off by up
# to half a class after rounding.
QUANTIZATION_MARGIN = 0.5


class Category(str, enum.Enum):
    CAR = "Car"
    PEDESTRIAN = "Pedestrian"
    CYCLIST = "Cyclist"


CATEGORIES = (Category.CAR, Category.PEDESTRIAN, Category.CYCLIST)

BBox = tuple[float, float, float, float]


@dataclass
class PixelDepthMap:
    """Grid of depth classes, ``values[row, col]`` in ``[0, k]`` (0 = background).

    ``scale`` is full-image resolution divided by map resolution.
    """

    values: np.ndarray
    k: int
    scale: float | Fraction = 1

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
            raise InputError(f"depth map must be a non-empty 2D grid, got shape {values.shape}")
        if not np.issubdtype(values.dtype, np.integer):
            if not np.all(values == np.round(values)):
                raise InputError("depth map values must be integer classes")
        if values.size and (values.min() < 0 or values.max() > self.k):
            raise InputError(f"depth map values must lie in [0, {self.k}]")
        if not self.scale > 0:
            raise DomainError(f"map scale must be positive, got {self.scale!r}")
        self.values = values.astype(np.int32, copy=False)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass
class InstanceDetection:
    id: int
    category: Category
    score: float
    bbox: BBox  # (left, top, right, bottom), full-image pixels
    center_depth: float
    dims: ObjectDims
    theta: float

    def __post_init__(self):
        self.category = Category(self.category)
        left, top, right, bottom = self.bbox
        if not (right > left and bottom > top):
            raise InputError(f"detection {self.id}: bbox {self.bbox} has no area")
        if not self.center_depth > 0:
            raise DomainError(f"detection {self.id}: center depth must be positive")
        if not 0.0 <= self.score <= 1.0:
            raise DomainError(f"detection {self.id}: score {self.score} outside [0, 1]")

    def margin(self) -> float:
        return depth_margin(self.dims, self.theta)

    def threshold(self, bins: DepthBins) -> float:
        return depth_threshold(bins, self.center_depth, self.margin())


@dataclass
class InstanceMask:
    id: int
    category: Category
    score: float
    bitmap: np.ndarray = field(repr=False)
    image_id: int = 0

    def __post_init__(self):
        self.category = Category(self.category)
        self.bitmap = np.asarray(self.bitmap, dtype=bool)

    @property
    def area(self) -> int:
        return int(self.bitmap.sum())


def available_cpus() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def scale_bbox(bbox: BBox, scale: float | Fraction) -> tuple[int, int, int, int]:
    """Box at map resolution, half-open ``[left, right) x [top, bottom)``.

    Left/top are floored and right/bottom ceiled so that downscaling never
    clips a covered pixel.
    """
    if not scale > 0:
        raise DomainError(f"scale must be positive, got {scale!r}")
    left, top, right, bottom = (Fraction(c) / Fraction(scale) for c in bbox)
    return math.floor(left), math.floor(top), math.ceil(right), math.ceil(bottom)


def _crop_window(depth_map: PixelDepthMap, bbox: BBox) -> tuple[int, int, int, int]:
    left, top, right, bottom = scale_bbox(bbox, depth_map.scale)
    c0, c1 = max(left, 0), min(right, depth_map.width)
    r0, r1 = max(top, 0), min(bottom, depth_map.height)
    return r0, max(r1, r0), c0, max(c1, c0)


def _check_bins(depth_map: PixelDepthMap, bins: DepthBins) -> None:
    if depth_map.k != bins.k:
        raise ConfigurationError(f"depth map has k={depth_map.k} but bins have k={bins.k}")


@dataclass
class _Candidate:
    """Pixels of the crop window that pass the match condition, with their
    distance to the instance's depth index."""

    window: tuple[int, int, int, int]
    hit: np.ndarray
    dist: np.ndarray


def _match(depth_map, det, bins, margin) -> _Candidate:
    r0, r1, c0, c1 = _crop_window(depth_map, det.bbox)
    crop = depth_map.values[r0:r1, c0:c1]
    target = bins.continuous_index(det.center_depth)
    tol = det.threshold(bins) + margin
    dist = np.abs(crop - target)
    hit = (crop >= 1) & (dist < tol)
    return _Candidate((r0, r1, c0, c1), hit, dist)


def match_pixels(
    depth_map: PixelDepthMap,
    det: InstanceDetection,
    bins: DepthBins,
    margin: float = QUANTIZATION_MARGIN,
) -> InstanceMask:
    """Mask of every pixel that matches ``det`` on its own, ignoring other
    instances."""
    _check_bins(depth_map, bins)
    cand = _match(depth_map, det, bins, margin)
    r0, r1, c0, c1 = cand.window
    bitmap = np.zeros(depth_map.values.shape, dtype=bool)
    bitmap[r0:r1, c0:c1] = cand.hit
    return InstanceMask(det.id, det.category, det.score, bitmap)


def assemble(
    depth_map: PixelDepthMap,
    dets: list[InstanceDetection],
    bins: DepthBins,
    margin: float = QUANTIZATION_MARGIN,
    jobs: int = 1,
) -> list[InstanceMask]:
    """Pairwise-disjoint instance masks, in the order of ``dets``."""
    _check_bins(depth_map, bins)
    ids = [d.id for d in dets]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise InputError(f"duplicate detection ids: {dupes}")

    workers = min(jobs, available_cpus(), len(dets))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cands = list(pool.map(lambda d: _match(depth_map, d, bins, margin), dets))
    else:
        cands = [_match(depth_map, d, bins, margin) for d in dets]

    shape = depth_map.values.shape
    owner = np.full(shape, -1, dtype=np.int64)
    best = np.full(shape, np.inf)
    # visiting nearer instances first makes strict '<' implement the
    # tie-break (nearer depth, then lower id)
    order = sorted(range(len(dets)), key=lambda n: (dets[n].center_depth, dets[n].id))
    for n in order:
        r0, r1, c0, c1 = cands[n].window
        if r1 == r0 or c1 == c0:
            continue
        hit = cands[n].hit
        dist = np.where(hit, cands[n].dist, np.inf)
        best_win = best[r0:r1, c0:c1]
        take = dist < best_win
        best_win[take] = dist[take]
        owner[r0:r1, c0:c1][take] = n

    return [InstanceMask(d.id, d.category, d.score, owner == n) for n, d in enumerate(dets)]


def id_map(masks: list[InstanceMask], shape: tuple[int, int]) -> np.ndarray:
    """Render disjoint masks into a single grid of instance ids (0 = none)."""
    out = np.zeros(shape, dtype=np.int64)
    for m in masks:
        if m.bitmap.shape != tuple(shape):
            raise InputError(f"mask {m.id} has shape {m.bitmap.shape}, expected {shape}")
        if np.any(out[m.bitmap] != 0):
            raise InputError(f"mask {m.id} overlaps another mask")
        out[m.bitmap] = m.id
    return out
