"""Mapping between metric depth and discrete depth classes.

Classes are 1-based: class ``1`` sits at ``d_min`` and class ``k`` at
``d_max``. Class ``0`` is reserved for background and never produced by the
depth mapping itself.

Two spacings are supported. ``EXPONENTIAL`` places class ``i`` at
``d_min * (d_max / d_min) ** ((i - 1) / (k - 1))``, so bins widen with depth;
``LINEAR`` spaces them evenly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

BACKGROUND = 0


class Scheme(str, enum.Enum):
    LINEAR = "linear"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class DepthBins:
    """Discretization of ``[d_min, d_max]`` into ``k`` depth classes."""

    k: int
    d_min: float
    d_max: float
    scheme: Scheme = Scheme.EXPONENTIAL

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 2:
            raise DomainError(f"k must be an integer >= 2, got {self.k!r}")
        if not (0 < self.d_min < self.d_max) or not math.isfinite(self.d_max):
            raise DomainError(
                f"need 0 < d_min < d_max, got d_min={self.d_min!r}, d_max={self.d_max!r}"
            )
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "d_min", float(self.d_min))
        object.__setattr__(self, "d_max", float(self.d_max))
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    @property
    def log_ratio(self) -> float:
        return math.log(self.d_max / self.d_min)

    def depth_of_class(self, i: int) -> float:
        """Metric depth of class ``i`` (1-based)."""
        if isinstance(i, bool) or int(i) != i or not 1 <= i <= self.k:
            raise DomainError(f"class index {i!r} outside [1, {self.k}]")
        if i == self.k:
            return self.d_max
        t = (i - 1) / (self.k - 1)
        if self.scheme is Scheme.EXPONENTIAL:
            return self.d_min * (self.d_max / self.d_min) ** t
        return self.d_min + (i - 1) * (self.d_max - self.d_min) / (self.k - 1)

    def continuous_index(self, d: float, clamp: bool = True) -> float:
        """Real-valued class index of depth ``d``; the exact inverse of
        :meth:`depth_of_class`.

        With ``clamp`` (the default) ``d`` is first clamped to
        ``[d_min, d_max]``, so the result lies in ``[1, k]``.
        """
        if not d > 0:
            raise DomainError(f"depth must be positive, got {d!r}")
        if clamp:
            d = min(max(d, self.d_min), self.d_max)
        if self.scheme is Scheme.EXPONENTIAL:
            return 1.0 + (self.k - 1) * math.log(d / self.d_min) / self.log_ratio
        return 1.0 + (self.k - 1) * (d - self.d_min) / (self.d_max - self.d_min)

    def class_of_depth(self, d: float) -> int:
        """Nearest class to ``d`` (round half up), clamped to ``[1, k]``."""
        c = math.floor(self.continuous_index(d) + 0.5)
        return min(max(c, 1), self.k)

    # Array variants used on whole maps. No domain checks beyond positivity.

    def continuous_index_array(self, d: np.ndarray, clamp: bool = True) -> np.ndarray:
        d = np.asarray(d, dtype=np.float64)
        if np.any(~(d > 0)):
            raise DomainError("depths must be positive")
        if clamp:
            d = np.clip(d, self.d_min, self.d_max)
        if self.scheme is Scheme.EXPONENTIAL:
            return 1.0 + (self.k - 1) * np.log(d / self.d_min) / self.log_ratio
        return 1.0 + (self.k - 1) * (d - self.d_min) / (self.d_max - self.d_min)

    def class_of_depth_array(self, d: np.ndarray) -> np.ndarray:
        c = np.floor(self.continuous_index_array(d) + 0.5).astype(np.int64)
        return np.clip(c, 1, self.k)

    def boundaries(self) -> list[tuple[int, float]]:
        return [(i, self.depth_of_class(i)) for i in range(1, self.k + 1)]
