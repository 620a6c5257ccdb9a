"""Per-frame cohort models: mixture fit, MRF labels, stable ids and aggregates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import FrameVectors, angular_diff, mean_resultant
from .mrf import build_neighbor_graph, data_term, median_nn_distance, mrf_relabel
from .vonmises import VonMisesComponent, vm_logpdf, vm_mixture_em
from .window import sliding_window_aggregate

UNORGANIZED = -1


@dataclass(frozen=True)
class CohortConfig:
    k_max: int = 4
    w_min: float = 0.02
    beta: float = 1.0
    k_nn: int = 8
    radius_factor: float = 3.0
    # a vector is unorganized when its component density is below this
    # (default: the uniform circular density)
    density_floor: float = 1.0 / (2 * math.pi)
    # components flatter than this do not count as organized motion
    kappa_min: float = 2.0
    window_density: float = 0.5
    match_tol_deg: float = 30.0
    stationary_px: float = 0.25
    # weight each angle in the mixture fit by displacement length times the
    # (non-negative) cosine of its triplet turn
    weighted_fit: bool = True
    em_tol: float = 1e-6
    em_max_iter: int = 500


@dataclass
class CohortAggregate:
    count: int
    centroid: tuple
    mean_speed: float
    mean_direction: float
    rbar: float


@dataclass
class CohortModel:
    components: list = field(default_factory=list)
    ids: list = field(default_factory=list)
    labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    aggregates: dict = field(default_factory=dict)
    mrf_energy: tuple = (0.0, 0.0)

    def __len__(self):
        return len(self.components)

    def organized(self, kappa_min):
        """(mu, kappa, id) for components concentrated enough to count as cohorts."""
        return [(c.mu, c.kappa, i) for c, i in zip(self.components, self.ids) if c.kappa >= kappa_min]

    def component(self, cohort_id):
        return self.components[self.ids.index(cohort_id)]


def _match_ids(components, previous, tol, next_id):
    """Carry cohort ids across frames by greedy angular matching of component means."""
    ids = [None] * len(components)
    if previous is not None and len(previous):
        pairs = sorted(
            (abs(angular_diff(c.mu, p.mu)), i, j)
            for i, c in enumerate(components)
            for j, p in enumerate(previous.components)
        )
        used_i, used_j = set(), set()
        for d, i, j in pairs:
            if d > tol or i in used_i or j in used_j:
                continue
            ids[i] = previous.ids[j]
            used_i.add(i)
            used_j.add(j)
    for i in range(len(ids)):
        if ids[i] is None:
            ids[i] = next_id
            next_id += 1
    return ids, next_id


def aggregate_members(vectors: FrameVectors, labels, ids):
    out = {}
    for cid in ids:
        m = labels == cid
        if not m.any():
            continue
        mr = mean_resultant(vectors.angles[m])
        c = vectors.origins[m].mean(axis=0)
        out[cid] = CohortAggregate(
            int(m.sum()), (float(c[0]), float(c[1])), float(vectors.speeds[m].mean()), mr.mu, mr.rbar
        )
    return out


def fit_cohort_model(
    vectors: FrameVectors,
    cfg: CohortConfig = CohortConfig(),
    seed=0,
    previous: CohortModel | None = None,
    history=(),
    next_id=0,
):
    """Fit the cohort model for one frame step.

    ``history`` holds earlier frames' vectors; they are pooled with the
    current ones for the mixture fit when the scene is sparse. Labels are
    only assigned to the current frame's vectors. Returns (model, next_id).
    """
    n = len(vectors)
    labels = np.full(n, UNORGANIZED, dtype=int)
    pooled = sliding_window_aggregate(list(history) + [vectors], cfg.window_density).vectors
    moving = pooled.speeds >= cfg.stationary_px
    angles = pooled.angles[moving]
    sw = label_w = None
    if cfg.weighted_fit:
        sw = (pooled.speeds * np.maximum(pooled.straightness, 0.0))[moving]
        if sw.sum() > 0:
            # same scale the fit uses: weights summing to the effective sample size
            label_w = vectors.speeds * np.maximum(vectors.straightness, 0.0) * (sw.sum() / np.dot(sw, sw))
        else:
            sw = None
    k_max = min(cfg.k_max, len(angles) // 2)
    if k_max < 1 or n == 0:
        return CohortModel(labels=labels), next_id
    fit = vm_mixture_em(angles, k_max, cfg.w_min, seed, cfg.em_tol, cfg.em_max_iter, sw)
    comps = fit.components
    ids, next_id = _match_ids(comps, previous, math.radians(cfg.match_tol_deg), next_id)

    theta = vectors.angles
    kappas = fit.kappas
    comp_idx = np.argmin(data_term(theta, fit.means, kappas, fit.weights, label_w), axis=1)
    # the MRF only arbitrates between organized components; vectors drawn to a
    # flat (background) component stay unorganized and exert no smoothing
    org = np.flatnonzero(kappas >= cfg.kappa_min)
    cand = np.flatnonzero(np.isin(comp_idx, org))
    energy = (0.0, 0.0)
    if len(org) > 1 and len(cand) > 1:
        pts = vectors.origins[cand]
        radius = cfg.radius_factor * median_nn_distance(pts)
        if radius > 0:
            graph = build_neighbor_graph(pts, cfg.k_nn, radius)
            res = mrf_relabel(
                theta[cand], [comps[i] for i in org], graph, cfg.beta,
                sample_weight=None if label_w is None else label_w[cand],
            )
            comp_idx[cand] = org[res.labels]
            energy = (res.initial_energy, res.final_energy)
    dens = np.exp(vm_logpdf(theta, fit.means[comp_idx], kappas[comp_idx]))
    organized = (
        (kappas[comp_idx] >= cfg.kappa_min)
        & (dens >= cfg.density_floor)
        & (vectors.speeds >= cfg.stationary_px)
    )
    id_arr = np.asarray(ids)
    labels[organized] = id_arr[comp_idx[organized]]
    model = CohortModel(list(comps), ids, labels, aggregate_members(vectors, labels, ids), energy)
    return model, next_id


__all__ = [
    "CohortAggregate",
    "CohortConfig",
    "CohortModel",
    "UNORGANIZED",
    "VonMisesComponent",
    "aggregate_members",
    "fit_cohort_model",
]
