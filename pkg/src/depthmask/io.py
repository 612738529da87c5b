"""File formats.

Depth maps and instance-id maps are binary PGM (``P5``) with 16-bit
big-endian samples, also when ``maxval < 256`` (where plain Netpbm readers
would expect one byte per sample). Depth maps use ``maxval = k`` so the bin count travels
with the file; id maps use ``maxval = 65535`` with 0 meaning "no instance".

Every id map has a JSON sidecar (same path, ``.json`` suffix) listing the
instances it holds::

    {"kind": "instances", "instances": [{"id": 1, "category": "Car", "score": 0.9, ...}]}

Detection files hold one object per line::

    id category score left top right bottom depth_m w l h theta

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .assembly import InstanceDetection, InstanceMask, PixelDepthMap
from .errors import ConfigurationError, InputError, ParseError
from .geometry import ObjectDims

_PGM_HEADER = re.compile(rb"P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")

ID_MAXVAL = 65535


def write_pgm(path, values: np.ndarray, maxval: int) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise InputError(f"PGM data must be 2D, got shape {values.shape}")
    if not 0 < maxval <= 65535:
        raise InputError(f"maxval {maxval} outside (0, 65535]")
    if values.size and (values.min() < 0 or values.max() > maxval):
        raise InputError(f"PGM samples must lie in [0, {maxval}]")
    h, w = values.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    body = values.astype(">u2").tobytes()
    Path(path).write_bytes(header + body)


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Returns ``(values, maxval)``.

    Samples are read as 16-bit whenever the file holds two bytes per pixel,
    whatever the maxval; one byte per pixel is accepted for ``maxval < 256``.
    """
    data = Path(path).read_bytes()
    m = _PGM_HEADER.match(data)
    if not m:
        raise ParseError("not a binary PGM (P5) file", None, str(path))
    w, h, maxval = (int(g) for g in m.groups())
    if not 0 < maxval <= 65535:
        raise ParseError(f"bad maxval {maxval}", None, str(path))
    avail = len(data) - m.end()
    dtype = ">u1" if maxval < 256 and avail < 2 * w * h else ">u2"
    n = w * h * np.dtype(dtype).itemsize
    body = data[m.end() : m.end() + n]
    if len(body) != n:
        raise ParseError(f"truncated pixel data: expected {n} bytes, got {len(body)}", None, str(path))
    values = np.frombuffer(body, dtype=dtype).reshape(h, w).astype(np.int64)
    if values.size and values.max() > maxval:
        raise ParseError(f"sample exceeds maxval {maxval}", None, str(path))
    return values, maxval


def write_depth_map(path, depth_map: PixelDepthMap) -> None:
    write_pgm(path, depth_map.values, depth_map.k)


def read_depth_map(path, scale=4, k: int | None = None) -> PixelDepthMap:
    values, maxval = read_pgm(path)
    if k is not None and k != maxval:
        raise ConfigurationError(f"{path}: depth map has k={maxval} but configuration has k={k}")
    return PixelDepthMap(values, maxval, scale)


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_instances(path, masks: list[InstanceMask], shape: tuple[int, int], extra: dict | None = None) -> None:
    """Write disjoint masks as an id map plus its JSON sidecar."""
    ids = np.zeros(shape, dtype=np.int64)
    meta = []
    for m in masks:
        if not 1 <= m.id <= ID_MAXVAL:
            raise InputError(f"instance id {m.id} cannot be stored in an id map (1..{ID_MAXVAL})")
        if np.any(ids[m.bitmap] != 0):
            raise InputError(f"mask {m.id} overlaps another mask")
        ids[m.bitmap] = m.id
        meta.append({"id": m.id, "category": m.category.value, "score": m.score, "pixels": m.area})
    write_pgm(path, ids, ID_MAXVAL)
    doc = {"kind": "instances", "height": shape[0], "width": shape[1], "instances": meta}
    if extra:
        doc.update(extra)
    sidecar_path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_instances(path, image_id: int = 0) -> list[InstanceMask]:
    ids, _ = read_pgm(path)
    side = sidecar_path(path)
    if not side.exists():
        raise InputError(f"{path}: missing sidecar {side}")
    try:
        doc = json.loads(side.read_text())
        entries = doc["instances"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"bad sidecar ({exc})", None, str(side)) from None
    masks = []
    for e in entries:
        masks.append(
            InstanceMask(int(e["id"]), e["category"], float(e.get("score", 1.0)), ids == int(e["id"]), image_id)
        )
    return masks


def format_detection(det: InstanceDetection) -> str:
    left, top, right, bottom = det.bbox
    return (
        f"{det.id} {det.category.value} {det.score:.17g} {left:.17g} {top:.17g} {right:.17g} "
        f"{bottom:.17g} {det.center_depth:.17g} {det.dims.w:.17g} {det.dims.l:.17g} "
        f"{det.dims.h:.17g} {det.theta:.17g}"
    )


def write_detections(path, dets: list[InstanceDetection]) -> None:
    lines = ["# id category score left top right bottom depth_m w l h theta"]
    lines += [format_detection(d) for d in dets]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_detections(text: str, source: str | None = None) -> list[InstanceDetection]:
    dets = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 12:
            raise ParseError(f"expected 12 fields, got {len(parts)}", lineno, source)
        try:
            ident = int(parts[0])
            nums = [float(p) for p in parts[2:]]
            dets.append(
                InstanceDetection(
                    id=ident,
                    category=parts[1],
                    score=nums[0],
                    bbox=tuple(nums[1:5]),
                    center_depth=nums[5],
                    dims=ObjectDims(w=nums[6], l=nums[7], h=nums[8]),
                    theta=nums[9],
                )
            )
        except ValueError as exc:
            raise ParseError(str(exc), lineno, source) from None
    return dets


def read_detections(path) -> list[InstanceDetection]:
    return parse_detections(Path(path).read_text(), str(path))


def write_color_dump(path, ids: np.ndarray) -> None:
    """Colourised id map as binary PPM (P6), one fixed colour per id."""
    ids = np.asarray(ids, dtype=np.int64)
    # Knuth multiplicative hash spreads neighbouring ids across the palette
    hashed = (ids * 2654435761) & 0xFFFFFF
    rgb = np.stack([(hashed >> 16) & 255, (hashed >> 8) & 255, hashed & 255], axis=-1)
    rgb = np.where(ids[..., None] == 0, 0, rgb | 64).astype(np.uint8)
    h, w = ids.shape
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes())
