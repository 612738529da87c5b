"""Training losses as plain scalar functions with analytic (sub)gradients.

The L1 losses are sums, not means; pass ``normalize=True`` to divide by the
number of terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import PixelDepthMap
from .errors import DomainError, InputError, NonDifferentiableError

KINK_TOL = 1e-6


@dataclass(frozen=True)
class LossWeights:
    w1: float = 1.0
    w2: float = 1.0

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0:
            raise DomainError(f"loss weights must be non-negative, got {self}")


@dataclass(frozen=True)
class FocalParams:
    gamma: float = 2.0
    alpha: float = 0.25

    def __post_init__(self):
        if self.gamma < 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")
        if not 0 < self.alpha < 1 and self.alpha != 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")


def _p_t(p: float, y: int) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p!r}")
    if y not in (0, 1):
        raise DomainError(f"label must be 0 or 1, got {y!r}")
    return p if y == 1 else 1.0 - p


def focal_loss(p: float, y: int, params: FocalParams = FocalParams()) -> float:
    """``-alpha * (1 - p_t)**gamma * log(p_t)``; ``alpha`` weighs both classes."""
    pt = _p_t(p, y)
    return -params.alpha * (1.0 - pt) ** params.gamma * math.log(pt)


def focal_loss_grad(p: float, y: int, params: FocalParams = FocalParams()) -> float:
    """d focal_loss / d p."""
    pt = _p_t(p, y)
    g, a = params.gamma, params.alpha
    q = 1.0 - pt
    dpt = a * (g * q ** (g - 1) * math.log(pt) if g else 0.0) - a * q**g / pt
    return dpt if y == 1 else -dpt


def loss_2d(l_cls: float, l_box: float, weights: LossWeights = LossWeights()) -> float:
    return weights.w1 * l_cls + weights.w2 * l_box


def _pair(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt.values if isinstance(gt, PixelDepthMap) else gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise InputError(f"shape mismatch: prediction {pred.shape} vs target {gt.shape}")
    return pred, gt


def instance_depth_loss(pred, gt, normalize: bool = False) -> float:
    """Sum of absolute differences between predicted and true instance depths."""
    pred, gt = _pair(pred, gt)
    total = float(np.abs(gt - pred).sum())
    return total / max(pred.size, 1) if normalize else total


def pixel_depth_loss(pred, label, normalize: bool = False) -> float:
    """Sum over all pixels of ``|label - pred|``; background pixels count with
    target 0."""
    pred, label = _pair(pred, label)
    total = float(np.abs(label - pred).sum())
    return total / max(pred.size, 1) if normalize else total


def _l1_grad(pred, gt, normalize: bool) -> np.ndarray:
    pred, gt = _pair(pred, gt)
    diff = pred - gt
    if np.any(np.abs(diff) <= KINK_TOL):
        idx = np.argwhere(np.abs(diff) <= KINK_TOL)[0]
        raise NonDifferentiableError(
            f"|pred - target| <= {KINK_TOL} at index {tuple(idx)}; L1 term is not differentiable"
        )
    g = np.sign(diff)
    return g / max(pred.size, 1) if normalize else g


def instance_depth_loss_grad(pred, gt, normalize: bool = False) -> np.ndarray:
    """d loss / d pred."""
    return _l1_grad(pred, gt, normalize)


def pixel_depth_loss_grad(pred, label, normalize: bool = False) -> np.ndarray:
    """d loss / d pred."""
    return _l1_grad(pred, label, normalize)


def loss_2d_grad(l_cls, l_box, weights: LossWeights = LossWeights()) -> tuple[float, float]:
    return weights.w1, weights.w2


_GRADIENTS: dict[Callable, Callable] = {
    focal_loss: focal_loss_grad,
    loss_2d: loss_2d_grad,
    instance_depth_loss: instance_depth_loss_grad,
    pixel_depth_loss: pixel_depth_loss_grad,
}


def subgradient(loss: Callable, *args, **kwargs):
    """Analytic derivative of ``loss`` with respect to its first argument(s),
    evaluated at ``args``.

    Raises :class:`NonDifferentiableError` within ``1e-6`` of an L1 kink.
    """
    try:
        grad = _GRADIENTS[loss]
    except KeyError:
        raise InputError(f"no analytic gradient registered for {loss!r}") from None
    return grad(*args, **kwargs)
