"""Gated candidate links between consecutive frames."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .._validation import check_points
from ..core import CalibrationConfig


@dataclass(frozen=True)
class CandidateLink:
    src: int
    dst: int
    disp: tuple
    best_pred: int | None = None


@dataclass
class Candidates:
    """Columnar candidate set for one frame pair, sorted by (src, dst)."""

    src: np.ndarray
    dst: np.ndarray
    disp: np.ndarray
    n_from: int
    n_to: int

    def __len__(self):
        return len(self.src)

    def __iter__(self):
        for s, d, v in zip(self.src, self.dst, self.disp):
            yield CandidateLink(int(s), int(d), (float(v[0]), float(v[1])))

    @classmethod
    def from_pairs(cls, pairs, p0=None, p1=None, n_from=None, n_to=None):
        pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        pairs = pairs[order]
        if p0 is not None and p1 is not None and len(pairs):
            disp = p1[pairs[:, 1]] - p0[pairs[:, 0]]
        else:
            disp = np.zeros((len(pairs), 2))
        n_from = n_from if n_from is not None else (int(pairs[:, 0].max()) + 1 if len(pairs) else 0)
        n_to = n_to if n_to is not None else (int(pairs[:, 1].max()) + 1 if len(pairs) else 0)
        return cls(pairs[:, 0].copy(), pairs[:, 1].copy(), disp, n_from, n_to)


def gen_candidates(frame_t, frame_t1, calib: CalibrationConfig | float) -> Candidates:
    """All (i, j) with |p_j - p_i| <= max displacement, via a k-d tree range query.

    ``calib`` may be a CalibrationConfig or the displacement bound in pixels.
    Frames are (n, 2) position arrays.
    """
    max_disp = calib.max_disp_px if isinstance(calib, CalibrationConfig) else float(calib)
    if not max_disp > 0:
        raise ValueError("max displacement must be > 0")
    p0, p1 = check_points(frame_t), check_points(frame_t1)
    if len(p0) == 0 or len(p1) == 0:
        return Candidates(np.zeros(0, int), np.zeros(0, int), np.zeros((0, 2)), len(p0), len(p1))
    sdm = cKDTree(p0).sparse_distance_matrix(cKDTree(p1), max_disp, output_type="ndarray")
    pairs = np.column_stack([sdm["i"], sdm["j"]]).astype(int)
    return Candidates.from_pairs(pairs, p0, p1, len(p0), len(p1))
