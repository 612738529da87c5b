"""Pinhole camera geometry, cuboid corners, and the per-instance depth margin
and matching threshold.

Camera frame: x right, y down, z forward. Object yaw ``theta`` rotates about
the vertical (y) axis, KITTI ``rotation_y`` convention: the length axis of an
object at yaw ``theta`` points along ``(cos theta, 0, -sin theta)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .depth_bins import DepthBins, Scheme
from .errors import DegenerateGeometryError, DomainError

CORNER_TOL = 1e-3
MIN_EDGE = 1e-6


class ThresholdSaturationWarning(UserWarning):
    """The object's near face reaches the camera plane; threshold saturated."""


@dataclass(frozen=True)
class CameraIntrinsics:
    f_x: float
    f_y: float
    c_x: float
    c_y: float

    def __post_init__(self):
        if not (self.f_x > 0 and self.f_y > 0):
            raise DomainError(f"focal lengths must be positive, got {self.f_x}, {self.f_y}")

    def scaled(self, factor: float) -> "CameraIntrinsics":
        """Intrinsics for an image downsampled by ``factor``, continuous pixel
        coordinates (a pixel spans ``[j, j + 1)``)."""
        return CameraIntrinsics(
            self.f_x / factor, self.f_y / factor, self.c_x / factor, self.c_y / factor
        )


@dataclass(frozen=True)
class ObjectDims:
    w: float
    l: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.l > 0 and self.h > 0):
            raise DomainError(f"dimensions must be positive, got {self}")


@dataclass(frozen=True)
class Point3D:
    x: float
    y: float
    z: float


def locate_3d(cam: CameraIntrinsics, u: float, v: float, d: float) -> Point3D:
    """Back-project pixel ``(u, v)`` at depth ``d`` into the camera frame."""
    if not d > 0:
        raise DomainError(f"depth must be positive, got {d!r}")
    return Point3D((u - cam.c_x) * d / cam.f_x, (v - cam.c_y) * d / cam.f_y, d)


def project(cam: CameraIntrinsics, p: Point3D) -> tuple[float, float, float]:
    """Project a camera-frame point to ``(u, v, depth)``."""
    if not p.z > 0:
        raise DomainError(f"point must lie in front of the camera, got z={p.z!r}")
    return p.x / p.z * cam.f_x + cam.c_x, p.y / p.z * cam.f_y + cam.c_y, p.z


# sign pattern of (length, height, width) for the eight corners
_CORNER_SIGNS = np.array(
    [
        [+1, +1, +1],
        [+1, +1, -1],
        [-1, +1, -1],
        [-1, +1, +1],
        [+1, -1, +1],
        [+1, -1, -1],
        [-1, -1, -1],
        [-1, -1, +1],
    ],
    dtype=np.float64,
)


def rotation_y(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def corners_from_dims(dims: ObjectDims, theta: float) -> np.ndarray:
    """Eight object-centred corners, shape ``(8, 3)``.

    Unrotated corners are ``(+-l/2, +-h/2, +-w/2)``; they are then rotated by
    ``theta`` about the vertical axis.
    """
    half = np.array([dims.l, dims.h, dims.w]) / 2.0
    return (_CORNER_SIGNS * half) @ rotation_y(theta).T


def _wrap_half_turn(theta: float) -> float:
    """Map an angle into ``(-pi/2, pi/2]``, the cuboid's pi symmetry."""
    t = math.remainder(theta, math.pi)
    if t <= -math.pi / 2 + 1e-12:
        t += math.pi
    return t


def validate_corners(corners: np.ndarray, tol: float = CORNER_TOL) -> np.ndarray:
    pts = np.asarray(corners, dtype=np.float64)
    if pts.shape != (8, 3):
        raise DegenerateGeometryError(f"expected 8x3 corners, got shape {pts.shape}")
    if np.abs(pts.mean(axis=0)).max() > tol:
        raise DegenerateGeometryError("corner centroid is not at the origin")
    # every corner needs its point reflection in the set
    dist = np.linalg.norm(pts[:, None, :] + pts[None, :, :], axis=2)
    if dist.min(axis=1).max() > tol:
        raise DegenerateGeometryError("corners are not symmetric about the centre")
    return pts


def dims_from_corners(corners: np.ndarray) -> tuple[ObjectDims, float]:
    """Recover ``(dims, theta)`` from eight object-centred corners.

    ``l >= w`` by convention and ``theta`` is returned in ``(-pi/2, pi/2]``;
    a cuboid is unchanged by a half turn, so that is all the corners encode.
    """
    pts = validate_corners(corners)
    h = float(pts[:, 1].max() - pts[:, 1].min())
    if h < MIN_EDGE:
        raise DegenerateGeometryError(f"height edge {h:.3g} m is degenerate")

    # bird's-eye footprint: the four distinct (x, z) positions
    top = pts[pts[:, 1] <= pts[:, 1].mean()]
    if len(top) != 4:
        raise DegenerateGeometryError("corners do not split into two horizontal faces")
    foot = top[:, [0, 2]]
    p0 = foot[0]
    vecs = foot[1:] - p0
    lengths = np.linalg.norm(vecs, axis=1)
    order = np.argsort(lengths)
    e_short, e_long = vecs[order[0]], vecs[order[1]]
    w, l = float(lengths[order[0]]), float(lengths[order[1]])
    if w < MIN_EDGE:
        raise DegenerateGeometryError(f"footprint edge {w:.3g} m is degenerate")

    def yaw(edge):
        # length axis maps to (cos t, -sin t) in the (x, z) plane
        return _wrap_half_turn(math.atan2(-edge[1], edge[0]))

    theta = yaw(e_long)
    if math.isclose(w, l, rel_tol=1e-9, abs_tol=1e-9):
        # square footprint: either edge may serve as the length axis
        alt = yaw(e_short)
        if abs(alt) < abs(theta):
            theta = alt
    return ObjectDims(w=w, l=l, h=h), theta


def depth_margin(dims: ObjectDims, theta: float) -> float:
    """Half extent of the bird's-eye footprint along the camera depth axis."""
    theta = math.remainder(theta, 2 * math.pi)
    return 0.5 * dims.w * abs(math.cos(theta)) + 0.5 * dims.l * abs(math.sin(theta))


def depth_threshold(bins: DepthBins, center_depth: float, margin: float) -> float:
    """Matching tolerance in class-index units for an object whose centre is at
    ``center_depth`` and whose near face is ``margin`` metres closer.

    For exponential bins this is
    ``(k - 1) * log(center / (center - margin)) / log(d_max / d_min)``, i.e. the
    difference of the unclamped continuous indices of the centre and the near
    face. For linear bins it is ``margin * (k - 1) / (d_max - d_min)``.

    If the near face reaches the camera plane the threshold saturates at
    ``k - 1`` and a :class:`ThresholdSaturationWarning` is emitted.
    """
    if not center_depth > 0:
        raise DomainError(f"center depth must be positive, got {center_depth!r}")
    if not margin >= 0:
        raise DomainError(f"depth margin must be non-negative, got {margin!r}")
    near = center_depth - margin
    if near <= 0 or near <= bins.d_min * 1e-9:
        warnings.warn(
            f"near face at {near:.3g} m crosses the camera plane; "
            f"threshold saturated at {bins.k - 1}",
            ThresholdSaturationWarning,
            stacklevel=2,
        )
        return float(bins.k - 1)
    if bins.scheme is Scheme.EXPONENTIAL:
        return (bins.k - 1) * math.log(center_depth / near) / bins.log_ratio
    return margin * (bins.k - 1) / (bins.d_max - bins.d_min)
