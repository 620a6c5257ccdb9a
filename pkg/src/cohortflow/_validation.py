"""Input validation helpers shared by the estimators."""
from __future__ import annotations

import numpy as np


def check_image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D grayscale image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite pixel values")
    return arr


def check_angles(angles, min_samples=1) -> np.ndarray:
    a = np.asarray(angles, dtype=float).ravel()
    if a.size < min_samples:
        raise ValueError(f"need at least {min_samples} angles, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise ValueError("angles must be finite")
    return a


def check_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.size == 0:
        return np.zeros((0, 2))
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError(f"expected (n, 2) coordinates, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("coordinates must be finite")
    return p


def check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be finite and > 0, got {value}")
    return value
