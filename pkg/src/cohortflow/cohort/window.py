"""Pooling flow vectors from consecutive frame triplets for sparse scenes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import FrameVectors

WINDOW = 5
CELL_AREA = 100.0 * 100.0


@dataclass
class PooledVectors:
    vectors: FrameVectors
    source: np.ndarray  # index of the contributing set, 0 = oldest
    aggregated: bool


def vector_density(vectors: FrameVectors, area=None) -> float:
    """Vectors per 100 x 100 px cell; ``area`` defaults to the origins' bounding box."""
    n = len(vectors)
    if n == 0:
        return 0.0
    if area is None:
        span = np.ptp(vectors.origins, axis=0)
        area = max(span[0], 100.0) * max(span[1], 100.0)
    return n / (area / CELL_AREA)


def sliding_window_aggregate(vector_sets, density_threshold=None, area=None) -> PooledVectors:
    """Concatenate up to the last five triplet outputs, tagged by source.

    With ``density_threshold`` set, pooling only happens when the newest set
    has fewer vectors per 100 x 100 px cell than the threshold; otherwise the
    newest set is returned on its own.
    """
    sets = list(vector_sets)[-WINDOW:]
    if not sets:
        raise ValueError("need at least one vector set")
    newest = sets[-1]
    if density_threshold is not None and vector_density(newest, area) >= density_threshold:
        return PooledVectors(newest, np.full(len(newest), len(sets) - 1), False)
    pooled = FrameVectors(
        newest.frame,
        np.concatenate([s.origins.reshape(-1, 2) for s in sets]),
        np.concatenate([s.disps.reshape(-1, 2) for s in sets]),
        np.concatenate([np.asarray(s.labels, dtype=int) for s in sets]),
        np.concatenate([np.asarray(s.costs, dtype=float) for s in sets]),
        np.concatenate([s.straightness for s in sets]),
    )
    source = np.concatenate([np.full(len(s), i) for i, s in enumerate(sets)])
    return PooledVectors(pooled, source, True)
