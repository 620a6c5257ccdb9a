"""Triplet link costs: equidistance, turning and cohort-conformity penalties."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

COMPONENTS = ("eq", "turn", "cohort")
VAR_FLOOR = 1e-6
WEIGHT_EPS = 1e-9
STATIONARY_PX = 0.25


@dataclass(frozen=True)
class Weights:
    w_eq: float = 1 / 3
    w_turn: float = 1 / 3
    w_cohort: float = 1 / 3
    var_eq: float = 1.0
    var_turn: float = 1.0
    var_cohort: float = 1.0

    def __post_init__(self):
        w = self.w
        if np.any(w < 0) or not math.isclose(w.sum(), 1.0, rel_tol=1e-9):
            raise ValueError("weights must be >= 0 and sum to 1")
        if np.any(self.var <= 0):
            raise ValueError("component variances must be > 0")

    @property
    def w(self):
        return np.array([self.w_eq, self.w_turn, self.w_cohort])

    @property
    def var(self):
        return np.array([self.var_eq, self.var_turn, self.var_cohort])

    @property
    def scale(self):
        """Per-component multiplier w_i / var_i applied to raw penalties."""
        return self.w / self.var

    def updated(self, components: np.ndarray, active=(True, True, True), damping=0.0) -> "Weights":
        """Re-estimate variances from accepted links' (n, 3) penalties, then precision weights.

        Components flagged inactive (no information this round) keep their
        previous variance. ``damping`` in [0, 1) keeps that share of the old
        variance in log space; fixed points do not depend on it.
        """
        if not 0.0 <= damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        var = self.var.copy()
        if len(components) >= 2:
            est = np.maximum(components.var(axis=0), VAR_FLOOR)
            est = np.exp(damping * np.log(var) + (1.0 - damping) * np.log(est))
            var = np.where(np.asarray(active), est, var)
        prec = 1.0 / (var + WEIGHT_EPS)
        w = prec / prec.sum()
        return replace(
            self, w_eq=w[0], w_turn=w[1], w_cohort=w[2], var_eq=var[0], var_turn=var[1], var_cohort=var[2]
        )


@dataclass(frozen=True)
class CostBreakdown:
    c_eq: float
    c_turn: float
    c_cohort: float
    total: float


def penalty_components(pred_disp, link_disp, cohort_means=None, stationary_px=STATIONARY_PX):
    """Vectorized raw penalties, each in [0, 1].

    ``pred_disp`` rows that are NaN mean "no predecessor" (equidistance and
    turn penalties are 0). ``cohort_means`` is a sequence of organized
    component mean directions; empty or None gives a zero conformity penalty.
    Returns an (n, 3) array (c_eq, c_turn, c_cohort).
    """
    link = np.asarray(link_disp, dtype=float).reshape(-1, 2)
    pred = np.asarray(pred_disp, dtype=float).reshape(-1, 2)
    n = len(link)
    out = np.zeros((n, 3))
    d2 = np.hypot(link[:, 0], link[:, 1])
    has_pred = ~np.isnan(pred[:, 0])
    if has_pred.any():
        p = pred[has_pred]
        l = link[has_pred]
        a = np.hypot(p[:, 0], p[:, 1])
        b = d2[has_pred]
        s = a + b
        # (sqrt a - sqrt b)^2 / (a + b) == 1 - 2 sqrt(ab) / (a + b), exactly 0 when a == b;
        # likewise |u - v|^2 / 4 == (1 - cos) / 2 for unit vectors u, v
        with np.errstate(divide="ignore", invalid="ignore"):
            ceq = np.where(s > 0, (np.sqrt(a) - np.sqrt(b)) ** 2 / s, 0.0)
            du = p / a[:, None] - l / b[:, None]
            cturn_raw = (du[:, 0] ** 2 + du[:, 1] ** 2) / 4.0
        moving = (a >= stationary_px) & (b >= stationary_px)
        cturn = np.where(moving, np.clip(cturn_raw, 0.0, 1.0), 0.0)
        out[has_pred, 0] = np.clip(ceq, 0.0, 1.0)
        out[has_pred, 1] = cturn
    if cohort_means is not None and len(cohort_means):
        theta = np.arctan2(link[:, 1], link[:, 0])
        mus = np.asarray(cohort_means, dtype=float)
        cc = np.min(np.sin((theta[:, None] - mus[None, :]) / 2.0) ** 2, axis=1)
        out[:, 2] = np.where(d2 >= stationary_px, cc, 0.0)
    return out


def total_cost(components, w: Weights):
    return np.asarray(components) @ w.scale


def link_cost(pred_disp, link_disp, cohort=None, w: Weights | None = None) -> CostBreakdown:
    """Cost of a single link given its predecessor displacement (or None).

    ``cohort`` is a CohortModel, a sequence of mean directions, or None.
    """
    w = w or Weights()
    pred = (np.nan, np.nan) if pred_disp is None else pred_disp
    means = _cohort_means(cohort)
    c = penalty_components([pred], [link_disp], means)[0]
    return CostBreakdown(float(c[0]), float(c[1]), float(c[2]), float(c @ w.scale))


def _cohort_means(cohort, kappa_min=0.0):
    if cohort is None:
        return None
    if hasattr(cohort, "organized"):
        return [mu for mu, _, _ in cohort.organized(kappa_min)]
    if hasattr(cohort, "components"):
        return [c.mu for c in cohort.components]
    return list(cohort)
