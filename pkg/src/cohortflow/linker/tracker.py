"""Frame-by-frame linking with iterative cost reweighting and cohort feedback."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ..cohort.model import CohortConfig, CohortModel, fit_cohort_model
from ..core import CalibrationConfig, DEFAULT_V_MAX, FrameVectors
from ..detect import detections_to_array
from .assignment import empty_solution
from .candidates import Candidates, gen_candidates
from .cost import Weights, penalty_components
from .pareto import ParetoFrontier, default_lambda_grid, pareto_select

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinkerConfig:
    n_lambda: int = 16
    lambda_lo: float = 0.1
    lambda_hi: float = 10.0
    max_iter: int = 10
    tol_changed: float = 0.05
    stationary_px: float = 0.25
    lookahead: bool = True
    # c_eq and c_turn given to links with neither a predecessor nor a successor candidate
    unsupported_penalty: float = 1.0
    # log-space share of the previous variance kept once a 2-cycle is detected
    cycle_damping: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.cycle_damping < 1.0:
            raise ValueError("cycle_damping must lie in [0, 1)")
        if not 0.0 <= self.unsupported_penalty <= 1.0:
            raise ValueError("unsupported_penalty must lie in [0, 1]")


@dataclass(frozen=True)
class IterationRecord:
    frame: int
    iter: int
    links: int
    total_cost: float
    frac_changed: float


@dataclass
class FrameResult:
    frame: int
    candidates: Candidates
    penalties: np.ndarray  # (n_candidates, 3) raw c_eq, c_turn, c_cohort
    costs: np.ndarray
    best_pred: np.ndarray  # selected predecessor candidate index, -1 if none
    solution: object
    frontier: ParetoFrontier
    vectors: FrameVectors
    cohort: CohortModel
    weights: Weights
    iterations: list
    converged: bool
    elapsed: float = 0.0

    @property
    def n_iter(self) -> int:
        return self.iterations[-1].iter if self.iterations else 0


@dataclass
class TrackResult:
    positions: list
    frames: list = field(default_factory=list)

    @property
    def iteration_log(self):
        return [rec for fr in self.frames for rec in fr.iterations]

    @property
    def vectors(self):
        return [fr.vectors for fr in self.frames]

    @property
    def cohort_models(self):
        return [fr.cohort for fr in self.frames]

    def flow_vectors(self):
        return [v for fr in self.frames for v in fr.vectors.to_list()]


def _as_positions(frame):
    if isinstance(frame, np.ndarray):
        return frame.reshape(-1, 2).astype(float)
    frame = list(frame)
    if frame and hasattr(frame[0], "x"):
        return detections_to_array(frame)
    return np.asarray(frame, dtype=float).reshape(-1, 2)


def _successor_pairs(cands: Candidates, nxt: Candidates):
    """All (a, b) with nxt.src[b] == cands.dst[a]; returns index arrays."""
    if len(cands) == 0 or len(nxt) == 0:
        z = np.zeros(0, dtype=int)
        return z, z
    counts = np.bincount(nxt.src, minlength=nxt.n_from)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    k = counts[cands.dst]
    ia = np.repeat(np.arange(len(cands)), k)
    offs = np.arange(k.sum()) - np.repeat(np.cumsum(k) - k, k)
    ib = starts[cands.dst][ia] + offs  # nxt is sorted by src
    return ia, ib


def _changed_fraction(prev, cur) -> float:
    if prev is None:
        return 1.0
    denom = max(len(prev), len(cur), 1)
    return max(len(cur - prev), len(prev - cur)) / denom


def track_sequence(
    frames,
    calib: CalibrationConfig | None = None,
    linker: LinkerConfig | None = None,
    cohort: CohortConfig | None = None,
    seed: int = 0,
) -> TrackResult:
    """Link detections across a sequence and maintain the cohort model.

    ``frames`` is a list of per-frame detections (Detection lists or (n, 2)
    arrays). Each step t -> t+1 scores candidates against the selected
    predecessor link (or, lacking one, the best successor candidate
    t+1 -> t+2), picks links by utopia-point Pareto selection, refits the
    cohort model, re-derives cost weights and repeats until fewer than
    ``tol_changed`` of the selected links change.
    """
    calib = calib or CalibrationConfig()
    linker = linker or LinkerConfig()
    cohort = cohort or CohortConfig()
    pos = [_as_positions(f) for f in frames]
    if len(pos) < 3:
        raise ValueError(f"need at least 3 frames, got {len(pos)}")
    result = TrackResult(pos)
    weights = Weights()
    model = None
    history: list = []
    next_id = 0
    prev_sel = None  # (dst indices, displacements, candidate indices) of the last step
    nxt_cands = gen_candidates(pos[0], pos[1], calib)
    for t in range(len(pos) - 1):
        t0 = time.perf_counter()
        cands = nxt_cands
        nxt_cands = gen_candidates(pos[t + 1], pos[t + 2], calib) if t + 2 < len(pos) else None

        pred = np.full((len(pos[t]), 2), np.nan)
        pred_idx = np.full(len(pos[t]), -1)
        if prev_sel is not None and len(prev_sel[0]):
            pred[prev_sel[0]] = prev_sel[1]
            pred_idx[prev_sel[0]] = prev_sel[2]
        cand_pred = pred[cands.src] if len(cands) else np.zeros((0, 2))
        best_pred = pred_idx[cands.src] if len(cands) else np.zeros(0, dtype=int)
        base = penalty_components(cand_pred, cands.disp, None, linker.stationary_px)
        has_pred = ~np.isnan(cand_pred[:, 0]) if len(cands) else np.zeros(0, dtype=bool)

        la_a = la_b = la_pen = unsupported = None
        if linker.lookahead and nxt_cands is not None:
            ia, ib = _successor_pairs(cands, nxt_cands)
            keep = ~has_pred[ia]
            la_a, la_b = ia[keep], ib[keep]
            la_pen = penalty_components(cands.disp[la_a], nxt_cands.disp[la_b], None, linker.stationary_px)
            unsupported = ~has_pred
            unsupported[la_a] = False

        prev_pairs = None
        older_pairs = None
        damping = 0.0
        history_models = model
        iterations = []
        converged = False
        it = 0
        frame_next_id = next_id
        while True:
            means = [mu for mu, _, _ in model.organized(cohort.kappa_min)] if model is not None else []
            pen = base.copy()
            if len(cands) and len(means):
                pen[:, 2] = penalty_components(np.full((len(cands), 2), np.nan), cands.disp, means,
                                               linker.stationary_px)[:, 2]
            if la_a is not None and len(la_a):
                partial = la_pen[:, 0] * weights.scale[0] + la_pen[:, 1] * weights.scale[1]
                order = np.lexsort((la_b, partial, la_a))
                first = np.ones(len(order), dtype=bool)
                first[1:] = la_a[order][1:] != la_a[order][:-1]
                pick = order[first]
                pen[la_a[pick], 0] = la_pen[pick, 0]
                pen[la_a[pick], 1] = la_pen[pick, 1]
            if unsupported is not None:
                pen[unsupported, :2] = linker.unsupported_penalty
            costs = pen @ weights.scale
            if len(cands):
                grid = default_lambda_grid(costs, linker.n_lambda, linker.lambda_lo, linker.lambda_hi)
                frontier, sol = pareto_select(cands, costs, grid)
            else:
                sol = empty_solution()
                frontier = ParetoFrontier([(0, 0.0, 0.0)], 0, True)
            pairs = sol.pairs()
            frac = _changed_fraction(prev_pairs, pairs)
            if older_pairs is not None and pairs == older_pairs and pairs != prev_pairs:
                # the reweighting map is cycling between two link sets; damp harder each time round
                damping = 1.0 - (1.0 - damping) * (1.0 - linker.cycle_damping)
            vectors = FrameVectors(
                t,
                pos[t][sol.src] if len(sol.src) else np.zeros((0, 2)),
                cands.disp[sol.selected] if len(sol.selected) else np.zeros((0, 2)),
                np.full(len(sol.selected), -1, dtype=int),
                costs[sol.selected],
                1.0 - 2.0 * pen[sol.selected, 1],
            )
            if prev_pairs is not None and pairs == prev_pairs:
                # identical links give an identical fit; reuse it
                new_model = model
            else:
                new_model, frame_next_id = fit_cohort_model(
                    vectors, cohort, seed, previous=history_models, history=history[-4:], next_id=next_id
                )
            vectors.labels = new_model.labels
            active = (bool(has_pred.any() or (la_a is not None and len(la_a))),) * 2 + (len(means) > 0,)
            weights = weights.updated(pen[sol.selected], active, damping)
            iterations.append(IterationRecord(t, it, sol.n_links, sol.total_cost, frac))
            model = new_model
            if it >= 1 and frac < linker.tol_changed:
                converged = True
                break
            if it >= linker.max_iter:
                logger.warning("frame %d: reweighting hit the iteration cap (%d)", t, linker.max_iter)
                break
            older_pairs, prev_pairs = prev_pairs, pairs
            it += 1
        next_id = frame_next_id
        history.append(vectors)
        prev_sel = (sol.dst, cands.disp[sol.selected], sol.selected)
        result.frames.append(
            FrameResult(
                t, cands, pen, costs, best_pred, sol, frontier, vectors, model, weights,
                iterations, converged, time.perf_counter() - t0,
            )
        )
    return result


class FlowTracker(BaseEstimator):
    """Estimator wrapper around :func:`track_sequence`.

    ``fit`` takes a list of per-frame detections; fitted attributes are
    ``result_`` plus shortcuts ``vectors_``, ``cohort_models_`` and
    ``iteration_log_``.
    """

    def __init__(
        self,
        meters_per_pixel=0.05,
        fps=20.0,
        v_max=DEFAULT_V_MAX,
        n_lambda=16,
        max_iter=10,
        tol_changed=0.05,
        k_max=4,
        beta=1.0,
        random_state=0,
    ):
        self.meters_per_pixel = meters_per_pixel
        self.fps = fps
        self.v_max = v_max
        self.n_lambda = n_lambda
        self.max_iter = max_iter
        self.tol_changed = tol_changed
        self.k_max = k_max
        self.beta = beta
        self.random_state = random_state

    def fit(self, X, y=None):
        calib = CalibrationConfig(self.meters_per_pixel, self.fps, self.v_max)
        linker = LinkerConfig(n_lambda=self.n_lambda, max_iter=self.max_iter, tol_changed=self.tol_changed)
        cohort = CohortConfig(k_max=self.k_max, beta=self.beta)
        self.result_ = track_sequence(X, calib, linker, cohort, seed=self.random_state)
        self.vectors_ = self.result_.vectors
        self.cohort_models_ = self.result_.cohort_models
        self.iteration_log_ = self.result_.iteration_log
        return self

    def transform(self, X=None):
        return self.vectors_

    def fit_transform(self, X, y=None):
        return self.fit(X).vectors_
