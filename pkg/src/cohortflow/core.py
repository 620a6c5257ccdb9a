"""Geometric and circular-statistics primitives shared by every stage.

Coordinates are image pixels with the y axis pointing down (row index), so
an angle of +pi/2 is motion toward the bottom of the frame. All angles are
radians in the canonical range (-pi, pi].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Mean resultant lengths below this are treated as having no mean direction.
DEGENERATE_RBAR = 1e-9

#: A priori running-speed bound, 44.7 km/h expressed in m/s.
DEFAULT_V_MAX = 44.7 / 3.6


class DegenerateSampleError(ValueError):
    """Raised when a circular sample carries no usable weight."""


def wrap_angle(a):
    """Wrap angles (scalar or array) into (-pi, pi]."""
    w = np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2 * np.pi)
    if np.ndim(w) == 0:
        return float(w)
    return w


def angular_diff(a, b):
    """Signed shortest rotation taking ``b`` onto ``a``, in (-pi, pi]."""
    return wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


@dataclass(frozen=True)
class MeanResultant:
    mu: float
    rbar: float
    degenerate: bool

    def __iter__(self):
        # allows ``mu, rbar = mean_resultant(...)``
        yield self.mu
        yield self.rbar


def mean_resultant(angles, weights=None) -> MeanResultant:
    """Weighted mean direction and mean resultant length.

    Raises DegenerateSampleError when no weight is positive. When the
    resultant vanishes (antipodal cancellation) ``mu`` is returned as
    ``atan2`` of the residual sums and ``degenerate`` is set; callers
    must not rely on ``mu`` in that case.
    """
    angles = np.asarray(angles, dtype=float).ravel()
    if weights is None:
        weights = np.ones_like(angles)
    weights = np.asarray(weights, dtype=float).ravel()
    if angles.shape != weights.shape:
        raise ValueError("angles and weights must have the same length")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite and non-negative")
    total = weights.sum()
    if angles.size == 0 or total <= 0:
        raise DegenerateSampleError("mean direction of a sample with no positive weight")
    s = float(np.dot(weights, np.sin(angles)))
    c = float(np.dot(weights, np.cos(angles)))
    rbar = min(1.0, math.hypot(s, c) / total)
    return MeanResultant(math.atan2(s, c), rbar, rbar < DEGENERATE_RBAR)


@dataclass(frozen=True)
class Detection:
    frame: int
    x: float
    y: float
    score: float = 1.0

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError(f"frame index must be >= 0, got {self.frame}")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("detection position must be finite")
        if self.score < 0:
            raise ValueError("detection score must be >= 0")


@dataclass(frozen=True)
class FlowVector:
    """An accepted link from frame ``frame`` to ``frame + 1``."""

    frame: int
    x: float
    y: float
    dx: float
    dy: float
    cohort_id: int = -1
    cost: float = 0.0

    @property
    def origin(self):
        return (self.x, self.y)

    @property
    def disp(self):
        return (self.dx, self.dy)

    @property
    def angle(self) -> float:
        return math.atan2(self.dy, self.dx)

    @property
    def speed(self) -> float:
        return math.hypot(self.dx, self.dy)

    @property
    def end(self):
        return (self.x + self.dx, self.y + self.dy)


@dataclass(frozen=True)
class CalibrationConfig:
    meters_per_pixel: float = 0.05
    fps: float = 20.0
    v_max: float = DEFAULT_V_MAX

    def __post_init__(self):
        for name in ("meters_per_pixel", "fps", "v_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")

    @property
    def max_disp_px(self) -> float:
        """Largest plausible displacement between consecutive frames."""
        return self.v_max / self.meters_per_pixel / self.fps

    def px_per_frame_to_mps(self, speed_px):
        return speed_px * self.meters_per_pixel * self.fps


@dataclass
class FrameVectors:
    """Columnar flow vectors for one frame step; cheaper than lists of FlowVector."""

    frame: int
    origins: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    disps: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    # cosine of the triplet turn angle per vector; None means straight (1)
    persistence: np.ndarray | None = None

    def __len__(self):
        return len(self.origins)

    @property
    def straightness(self) -> np.ndarray:
        if self.persistence is None:
            return np.ones(len(self))
        return np.asarray(self.persistence, dtype=float)

    @property
    def angles(self) -> np.ndarray:
        return np.arctan2(self.disps[:, 1], self.disps[:, 0])

    @property
    def speeds(self) -> np.ndarray:
        return np.hypot(self.disps[:, 0], self.disps[:, 1])

    def to_list(self):
        return [
            FlowVector(self.frame, float(o[0]), float(o[1]), float(d[0]), float(d[1]), int(l), float(c))
            for o, d, l, c in zip(self.origins, self.disps, self.labels, self.costs)
        ]
