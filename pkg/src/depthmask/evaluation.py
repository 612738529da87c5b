"""Region-level mask average precision.

Predictions are matched greedily in descending score order (ties: image id,
then instance id), each to the unmatched ground truth of the same image and
category with the highest IoU at or above the threshold. AP is the area under
the all-point interpolated precision-recall curve. The headline ``AP`` is the
mean over IoU thresholds 0.50:0.05:0.95 and ``AP50`` uses 0.50 alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .assembly import CATEGORIES, Category, InstanceMask
from .errors import InputError

COCO_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise InputError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return np.count_nonzero(a & b) / union


def _iou_matrix(preds: Sequence[InstanceMask], gts: Sequence[InstanceMask]) -> np.ndarray:
    if not preds or not gts:
        return np.zeros((len(preds), len(gts)))
    p = np.stack([m.bitmap.reshape(-1) for m in preds]).astype(np.float64)
    g = np.stack([m.bitmap.reshape(-1) for m in gts]).astype(np.float64)
    if p.shape[1] != g.shape[1]:
        raise InputError("prediction and ground-truth masks differ in size")
    inter = p @ g.T
    union = p.sum(1)[:, None] + g.sum(1)[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(union > 0, inter / np.where(union > 0, union, 1), 0.0)


def _ranked(preds: Sequence[InstanceMask]) -> list[InstanceMask]:
    return sorted(preds, key=lambda m: (-m.score, m.image_id, m.id))


def _by_image(masks: Iterable[InstanceMask]) -> dict[int, list[InstanceMask]]:
    out: dict[int, list[InstanceMask]] = {}
    for m in masks:
        out.setdefault(m.image_id, []).append(m)
    return out


def match_predictions(
    preds: Sequence[InstanceMask], gts: Sequence[InstanceMask], iou_threshold: float
) -> list[bool]:
    """True-positive flags for ``preds`` in ranked order."""
    ranked = _ranked(preds)
    gt_by_image = _by_image(gts)
    pred_by_image = _by_image(ranked)
    ious = {
        img: _iou_matrix(pred_by_image[img], gt_by_image.get(img, []))
        for img in pred_by_image
    }
    row = {img: 0 for img in pred_by_image}
    taken = {img: np.zeros(len(gt_by_image.get(img, [])), dtype=bool) for img in pred_by_image}
    flags = []
    for m in ranked:
        img = m.image_id
        r = row[img]
        row[img] += 1
        cand = np.where(taken[img], -1.0, ious[img][r])
        if cand.size and cand.max() >= iou_threshold:
            j = int(np.argmax(cand))
            taken[img][j] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def ap_from_flags(flags: Sequence[bool], n_gt: int) -> float:
    """All-point interpolated area under the PR curve of ranked TP flags."""
    if n_gt == 0:
        return math.nan
    if not flags:
        return 0.0
    tp = np.cumsum(np.asarray(flags, dtype=np.float64))
    fp = np.cumsum(~np.asarray(flags, dtype=bool))
    recall = tp / n_gt
    precision = tp / (tp + fp)
    # precision envelope, then sum over recall steps
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev_recall = np.concatenate(([0.0], recall[:-1]))
    return float(np.sum((recall - prev_recall) * envelope))


def average_precision(
    preds: Sequence[InstanceMask], gts: Sequence[InstanceMask], iou_threshold: float = 0.5
) -> float:
    """AP at one IoU threshold. NaN when there is no ground truth."""
    return ap_from_flags(match_predictions(preds, gts, iou_threshold), len(gts))


@dataclass
class EvalResult:
    ap: dict[str, float]
    ap50: dict[str, float]
    thresholds: tuple[float, ...] = field(default=COCO_THRESHOLDS)

    @staticmethod
    def _mean(d: dict[str, float]) -> float:
        vals = [v for v in d.values() if not math.isnan(v)]
        return float(np.mean(vals)) if vals else math.nan

    @property
    def mean_ap(self) -> float:
        return self._mean(self.ap)

    @property
    def mean_ap50(self) -> float:
        return self._mean(self.ap50)

    def as_dict(self) -> dict:
        return {
            "AP": {**self.ap, "average": self.mean_ap},
            "AP50": {**self.ap50, "average": self.mean_ap50},
            "thresholds": list(self.thresholds),
        }

    def table(self) -> str:
        cats = list(self.ap)
        head = f"{'':6}" + "".join(f"{c.lower():>12}" for c in cats) + f"{'average':>12}"

        def row(name, d, mean):
            return f"{name:6}" + "".join(f"{100 * d[c]:12.2f}" for c in cats) + f"{100 * mean:12.2f}"

        return "\n".join(
            [head, row("AP", self.ap, self.mean_ap), row("AP50", self.ap50, self.mean_ap50)]
        )


def evaluate(
    preds: Sequence[InstanceMask],
    gts: Sequence[InstanceMask],
    categories: Sequence[Category | str] = CATEGORIES,
    iou_thresholds: Sequence[float] = COCO_THRESHOLDS,
) -> EvalResult:
    """Per-category AP (mean over ``iou_thresholds``) and AP50, plus their means.

    Categories without ground truth report NaN and are left out of the means.
    """
    ap, ap50 = {}, {}
    for cat in categories:
        cat = Category(cat)
        p = [m for m in preds if m.category is cat]
        g = [m for m in gts if m.category is cat]
        per_t = [average_precision(p, g, t) for t in iou_thresholds]
        # a mean never exceeds its largest term; rounding alone could push it over
        ap[cat.value] = min(math.fsum(per_t) / len(per_t), max(per_t)) if per_t else math.nan
        ap50[cat.value] = average_precision(p, g, 0.5)
    return EvalResult(ap, ap50, tuple(iou_thresholds))
