"""KITTI label/calibration ingestion and pixel-level training labels.

Label files hold one object per line, 15 whitespace-separated fields (a 16th,
``score``, appears in detection result files)::

    type truncated occluded alpha left top right bottom h w l x y z rotation_y
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .assembly import CATEGORIES, PixelDepthMap
from .depth_bins import DepthBins
from .errors import DomainError, InputError, ParseError
from .geometry import CameraIntrinsics

EVALUATED = frozenset(c.value for c in CATEGORIES)


@dataclass
class KittiObject:
    type: str
    truncated: float
    occluded: int
    alpha: float
    bbox: tuple[float, float, float, float]
    dims: tuple[float, float, float]  # (h, w, l), KITTI field order
    location: tuple[float, float, float]
    rotation_y: float
    score: float | None = None

    @property
    def is_dontcare(self) -> bool:
        return self.type == "DontCare"

    @property
    def h(self) -> float:
        return self.dims[0]

    @property
    def w(self) -> float:
        return self.dims[1]

    @property
    def l(self) -> float:
        return self.dims[2]

    def to_line(self) -> str:
        fields = [
            self.type,
            f"{self.truncated:.2f}",
            f"{self.occluded:d}",
            f"{self.alpha:.2f}",
            *(f"{v:.2f}" for v in self.bbox),
            *(f"{v:.2f}" for v in self.dims),
            *(f"{v:.2f}" for v in self.location),
            f"{self.rotation_y:.2f}",
        ]
        if self.score is not None:
            fields.append(f"{self.score:.2f}")
        return " ".join(fields)


def parse_kitti_labels(text: str, source: str | None = None) -> list[KittiObject]:
    objects = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) not in (15, 16):
            raise ParseError(f"expected 15 fields, got {len(parts)}", lineno, source)
        try:
            nums = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise ParseError(f"non-numeric field ({exc})", lineno, source) from None
        if nums[1] != int(nums[1]):
            raise ParseError(f"occluded must be an integer, got {parts[2]}", lineno, source)
        obj = KittiObject(
            type=parts[0],
            truncated=nums[0],
            occluded=int(nums[1]),
            alpha=nums[2],
            bbox=tuple(nums[3:7]),
            dims=tuple(nums[7:10]),
            location=tuple(nums[10:13]),
            rotation_y=nums[13],
            score=nums[14] if len(nums) == 15 else None,
        )
        if not obj.is_dontcare and min(obj.dims) <= 0:
            raise ParseError(f"non-positive dimensions {obj.dims} for {obj.type}", lineno, source)
        objects.append(obj)
    return objects


def serialize_kitti_labels(objects: Iterable[KittiObject]) -> str:
    return "".join(obj.to_line() + "\n" for obj in objects)


def parse_kitti_calib(text: str, source: str | None = None) -> CameraIntrinsics:
    """Intrinsics of the left colour camera, taken from the ``P2`` row."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        if ":" not in line:
            continue
        key, _, rest = line.partition(":")
        if key.strip() != "P2":
            continue
        try:
            vals = [float(v) for v in rest.split()]
        except ValueError as exc:
            raise ParseError(f"non-numeric P2 entry ({exc})", lineno, source) from None
        if len(vals) != 12:
            raise ParseError(f"P2 needs 12 numbers, got {len(vals)}", lineno, source)
        p2 = np.array(vals).reshape(3, 4)
        try:
            return CameraIntrinsics(f_x=p2[0, 0], f_y=p2[1, 1], c_x=p2[0, 2], c_y=p2[1, 2])
        except DomainError as exc:
            raise ParseError(str(exc), lineno, source) from None
    raise ParseError("no P2 projection row", None, source)


def filter_categories(objects: Iterable[KittiObject]) -> list[KittiObject]:
    return [o for o in objects if o.type in EVALUATED]


@dataclass
class CoarseMask:
    id: int
    bitmap: np.ndarray

    def __post_init__(self):
        bm = np.asarray(self.bitmap)
        if not np.all((bm == 0) | (bm == 1)):
            raise InputError(f"coarse mask {self.id} is not binary")
        self.bitmap = bm.astype(bool)


def synthesize_pixel_labels(
    masks: Sequence[tuple[CoarseMask, float]],
    bins: DepthBins,
    width: int,
    height: int,
    scale: float = 1,
) -> PixelDepthMap:
    """Depth-class label map: each mask's pixels take the class of its
    instance depth, background stays 0, and where masks overlap the nearer
    instance wins."""
    values = np.zeros((height, width), dtype=np.int32)
    for mask, depth in masks:
        if mask.bitmap.shape != (height, width):
            raise InputError(
                f"coarse mask {mask.id} has shape {mask.bitmap.shape}, expected {(height, width)}"
            )
        if not depth > 0:
            raise DomainError(f"instance {mask.id} depth must be positive, got {depth!r}")
    # paint far to near; stable sort keeps input order among equal depths
    for mask, depth in sorted(masks, key=lambda md: -md[1]):
        values[mask.bitmap] = bins.class_of_depth(depth)
    return PixelDepthMap(values, bins.k, scale)
