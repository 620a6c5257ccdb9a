"""Bi-objective (link count vs. total cost) frontier and utopia-point selection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import AssignmentSolution, solve_assignment

N_LAMBDA = 16


@dataclass
class ParetoFrontier:
    points: list  # (link_count, total_cost, lambda), ascending lambda
    chosen: int
    degenerate: bool = False

    @property
    def link_counts(self):
        return [p[0] for p in self.points]


def default_lambda_grid(costs, n=N_LAMBDA, lo=0.1, hi=10.0) -> np.ndarray:
    """``n`` log-spaced rewards spanning [lo, hi] times the median candidate cost."""
    costs = np.asarray(costs, dtype=float)
    pos = costs[costs > 0]
    med = float(np.median(pos)) if pos.size else 1.0
    return np.geomspace(lo * med, hi * med, n)


def utopia_index(counts, totals) -> tuple[int, bool]:
    """Point closest to (max links, zero cost) after min-max normalization.

    Ties go to the larger link count, then the earlier point.
    """
    counts = np.asarray(counts, dtype=float)
    totals = np.asarray(totals, dtype=float)
    span_n = counts.max() - counts.min()
    span_c = totals.max() - totals.min()
    degenerate = span_n == 0 and span_c == 0
    x = (counts - counts.min()) / span_n if span_n > 0 else np.ones_like(counts)
    y = (totals - totals.min()) / span_c if span_c > 0 else np.zeros_like(totals)
    dist = np.hypot(1.0 - x, y)
    best = 0
    for i in range(1, len(dist)):
        if dist[i] < dist[best] - 1e-12 or (abs(dist[i] - dist[best]) <= 1e-12 and counts[i] > counts[best]):
            best = i
    return best, degenerate


def pareto_select(candidates, costs, lambda_grid=None) -> tuple[ParetoFrontier, AssignmentSolution]:
    """Solve the assignment along a lambda grid and pick the utopia-nearest solution."""
    costs = np.asarray(costs, dtype=float)
    grid = default_lambda_grid(costs) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    if len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("lambda_grid needs at least two strictly increasing values")
    sols = [solve_assignment(candidates, costs, lam) for lam in grid]
    points = [(s.n_links, s.total_cost, float(lam)) for s, lam in zip(sols, grid)]
    best, degenerate = utopia_index([p[0] for p in points], [p[1] for p in points])
    if degenerate:
        best = len(points) - 1
    return ParetoFrontier(points, best, degenerate), sols[best]


def is_monotone(frontier: ParetoFrontier) -> bool:
    counts = frontier.link_counts
    return all(b >= a for a, b in zip(counts, counts[1:]))


