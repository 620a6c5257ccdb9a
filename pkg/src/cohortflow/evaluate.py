"""Scoring tracker output against simulator ground truth."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import angular_diff

MATCH_PX = 1.0
ONSET_TOL_DEG = 20.0
NOT_DETECTED = "not detected"


class EvaluationError(ValueError):
    pass


@dataclass
class EvalReport:
    link_precision: float
    link_recall: float
    cohort_count_error: int
    mean_direction_error_deg: float  # nan when no cohort could be matched
    onset_latency_frames: object  # int >= 0 or NOT_DETECTED
    n_predicted: int = 0
    n_true: int = 0
    n_true_positive: int = 0

    def to_dict(self):
        return asdict(self)


def _match_ids(points, gt_points, gt_ids, tol=MATCH_PX):
    """Object id of the nearest ground-truth detection within ``tol`` (inclusive), else -1."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    out = np.full(len(points), -1, dtype=int)
    if len(points) == 0 or len(gt_points) == 0:
        return out
    tree = cKDTree(np.asarray(gt_points, dtype=float).reshape(-1, 2))
    d, j = tree.query(points, distance_upper_bound=np.nextafter(tol, np.inf))
    hit = np.isfinite(d)
    out[hit] = np.asarray(gt_ids)[j[hit]]
    return out


def link_scores(links, gt_positions, gt_object_ids):
    """Precision and recall of predicted links against observable true links.

    ``links`` maps an origin frame t to an (n, 4) array of from_x, from_y,
    to_x, to_y. A link is a true positive when both endpoints sit within 1 px
    of detections of the same object (not clutter) in frames t and t+1. The
    true links of frame t are the objects observed in both t and t+1, for
    every t that has a following ground-truth frame. Zero predictions give
    precision 1.0 by convention.
    """
    n_gt = len(gt_positions)
    bad = [t for t in links if not 0 <= t < n_gt - 1 and len(links[t])]
    if bad:
        raise EvaluationError(f"links reference frames without ground truth: {sorted(bad)[:5]}")
    tp = n_pred = n_true = 0
    for t in range(n_gt - 1):
        a, b = np.asarray(gt_object_ids[t]), np.asarray(gt_object_ids[t + 1])
        n_true += len(np.intersect1d(a[a >= 0], b[b >= 0]))
        arr = np.asarray(links.get(t, np.zeros((0, 4))), dtype=float).reshape(-1, 4)
        if len(arr) == 0:
            continue
        n_pred += len(arr)
        src = _match_ids(arr[:, :2], gt_positions[t], a)
        dst = _match_ids(arr[:, 2:], gt_positions[t + 1], b)
        tp += int(np.count_nonzero((src >= 0) & (src == dst)))
    precision = tp / n_pred if n_pred else 1.0
    recall = tp / n_true if n_true else 1.0
    return precision, recall, tp, n_pred, n_true


def match_directions(predicted, truth):
    """Greedy one-to-one matching by angular proximity; returns (i, j, |diff| rad) triples."""
    pairs = sorted(
        (abs(angular_diff(p, q)), i, j) for i, p in enumerate(predicted) for j, q in enumerate(truth)
    )
    used_i, used_j, out = set(), set(), []
    for d, i, j in pairs:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        out.append((i, j, d))
    return out


def onset_latency(reports, onset_frame, direction, tol_deg=ONSET_TOL_DEG):
    """Frames from onset to the first report heading within ``tol_deg`` of ``direction``."""
    tol = math.radians(tol_deg)
    frames = sorted(r.frame for r in reports
                    if r.frame >= onset_frame and abs(angular_diff(r.mean_direction, direction)) <= tol)
    return frames[0] - onset_frame if frames else NOT_DETECTED


def evaluate(
    links, reports, gt_positions, gt_object_ids, scenario=None, gt_cohort_ids=None, final_frame=None
) -> EvalReport:
    """Score one run.

    ``reports`` is a flat list of CohortReport. The true cohorts at the final
    frame are the scenario cohorts whose onset is not after it (or, without a
    scenario, the cohort ids present in the last ground-truth frame); onset
    latency is measured for the cohort with the latest onset.
    """
    precision, recall, tp, n_pred, n_true = link_scores(links, gt_positions, gt_object_ids)
    if final_frame is None:
        final_frame = max(len(gt_positions) - 2, 0)
    elif not 0 <= final_frame <= len(gt_positions) - 2:
        raise EvaluationError(f"final frame {final_frame} has no ground-truth successor frame")
    final = [r for r in reports if r.frame == final_frame]
    true_dirs = []
    if scenario is not None:
        true_dirs = [c.direction for c in scenario.cohorts if c.onset_frame <= final_frame and c.count > 0]
        n_cohorts = len(true_dirs)
    elif gt_cohort_ids is not None and len(gt_cohort_ids) > final_frame:
        ids = np.asarray(gt_cohort_ids[final_frame])
        n_cohorts = len(np.unique(ids[ids >= 0]))
    else:
        n_cohorts = 0
    count_error = abs(len(final) - n_cohorts)
    matched = match_directions([r.mean_direction for r in final], true_dirs)
    dir_err = float(np.degrees(np.mean([d for _, _, d in matched]))) if matched else float("nan")
    latency = NOT_DETECTED
    if scenario is not None and scenario.cohorts:
        k = max(range(len(scenario.cohorts)), key=lambda i: (scenario.cohorts[i].onset_frame, -i))
        c = scenario.cohorts[k]
        latency = onset_latency(reports, c.onset_frame, c.direction)
    return EvalReport(precision, recall, count_error, dir_err, latency, n_pred, n_true, tp)


def ground_truth_links(gt_positions, gt_object_ids):
    """True links per origin frame as {t: (n, 4)} arrays, ordered by object id."""
    out = {}
    for t in range(len(gt_positions) - 1):
        a, b = np.asarray(gt_object_ids[t]), np.asarray(gt_object_ids[t + 1])
        pa, pb = np.asarray(gt_positions[t]).reshape(-1, 2), np.asarray(gt_positions[t + 1]).reshape(-1, 2)
        common, ia, ib = np.intersect1d(a[a >= 0], b[b >= 0], return_indices=True)
        ia = np.flatnonzero(a >= 0)[ia]
        ib = np.flatnonzero(b >= 0)[ib]
        out[t] = np.hstack([pa[ia], pb[ib]])
    return out
