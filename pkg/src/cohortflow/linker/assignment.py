"""Exact one-to-one link selection maximizing sum(lambda - cost)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

DENSE_BATCH_ROWS = 128


@dataclass
class AssignmentSolution:
    selected: np.ndarray  # candidate indices, ascending
    src: np.ndarray
    dst: np.ndarray
    total_cost: float
    lam: float

    @property
    def n_links(self) -> int:
        return len(self.selected)

    @property
    def objective(self) -> float:
        return self.lam * len(self.selected) - self.total_cost

    def pairs(self):
        return set(zip(self.src.tolist(), self.dst.tolist()))


def empty_solution(lam=0.0):
    z = np.zeros(0, dtype=int)
    return AssignmentSolution(z, z, z, 0.0, float(lam))


def _components(n, a, b):
    """Component label per node for undirected edges (a, b), numbered by each component's smallest node.

    Union-find by hooking roots onto the smaller root, with pointer jumping;
    cheaper than building a sparse graph for the small per-frame problems.
    """
    parent = np.arange(n)
    while True:
        pa, pb = parent[a], parent[b]
        diff = pa != pb
        if not diff.any():
            break
        np.minimum.at(parent, np.maximum(pa[diff], pb[diff]), np.minimum(pa[diff], pb[diff]))
        while True:
            nxt = parent[parent]
            if np.array_equal(nxt, parent):
                break
            parent = nxt
    return np.unique(parent, return_inverse=True)[1]


def _first_per_group(groups, *keys):
    """Index of the lexicographically smallest (keys...) row within each group."""
    order = np.lexsort(tuple(reversed(keys)) + (groups,))
    g = groups[order]
    first = np.ones(len(g), dtype=bool)
    first[1:] = g[1:] != g[:-1]
    return order[first]


def solve_assignment(candidates, costs, lam) -> AssignmentSolution:
    """Maximize sum over selected links of (lam - cost), one-to-one on both frames.

    Links whose reward ``lam - cost`` is negative are never selected. The
    candidate graph is split into connected components; components that are
    a single link or a star are resolved directly and the rest go to a
    shortest-augmenting-path rectangular assignment solver, with one private
    "stay unlinked" column (reward 0) per source.
    """
    costs = np.asarray(costs, dtype=float)
    if len(candidates) != len(costs):
        raise ValueError("one cost per candidate is required")
    if not (np.all(np.isfinite(costs)) and math.isfinite(lam)):
        raise ValueError("costs and lambda must be finite")
    keep = np.flatnonzero(costs <= lam)
    if keep.size == 0:
        return empty_solution(lam)
    src = candidates.src[keep]
    dst = candidates.dst[keep]
    c = costs[keep]
    n0 = int(candidates.n_from)
    comp_of_node = _components(n0 + int(candidates.n_to), src, n0 + dst)
    comp = comp_of_node[src]

    chosen = []
    order = np.argsort(comp, kind="stable")
    comp_sorted = comp[order]
    bounds = np.flatnonzero(np.diff(comp_sorted)) + 1
    starts = np.r_[0, bounds]
    sizes = np.diff(np.r_[starts, len(order)])
    # count distinct sources / targets per component
    n_src = np.zeros(comp_of_node.max() + 1, dtype=int)
    n_dst = np.zeros_like(n_src)
    np.add.at(n_src, comp_of_node[np.unique(src)], 1)
    np.add.at(n_dst, comp_of_node[n0 + np.unique(dst)], 1)

    comp_ids = comp_sorted[starts]
    star = (n_src[comp_ids] == 1) | (n_dst[comp_ids] == 1)
    # single links and stars: the best single edge is optimal
    star_edges = np.isin(comp, comp_ids[star])
    if star_edges.any():
        idx = np.flatnonzero(star_edges)
        chosen.append(idx[_first_per_group(comp[idx], c[idx], src[idx], dst[idx])])
    # remaining components are independent; pack them block-diagonally into
    # bounded batches so each dense solve stays small
    batch, rows = [], 0
    for s, size, cid in zip(starts[~star], sizes[~star], comp_ids[~star]):
        batch.append(order[s:s + size])
        rows += n_src[cid]
        if rows >= DENSE_BATCH_ROWS:
            e = np.sort(np.concatenate(batch))
            chosen.append(e[_solve_dense(src[e], dst[e], c[e] - lam)])
            batch, rows = [], 0
    if batch:
        e = np.sort(np.concatenate(batch))
        chosen.append(e[_solve_dense(src[e], dst[e], c[e] - lam)])

    sel = np.sort(keep[np.concatenate(chosen)]) if chosen else np.zeros(0, dtype=int)
    sel_costs = costs[sel]
    return AssignmentSolution(
        sel, candidates.src[sel], candidates.dst[sel], math.fsum(sel_costs.tolist()), float(lam)
    )


def _solve_dense(src, dst, reduced):
    """Solve exactly over the given edges; returns local indices of the selected edges."""
    us, si = np.unique(src, return_inverse=True)
    ud, di = np.unique(dst, return_inverse=True)
    r, m = len(us), len(ud)
    mat = np.full((r, m + r), np.inf)
    mat[si, di] = reduced
    mat[np.arange(r), m + np.arange(r)] = 0.0
    rows, cols = linear_sum_assignment(mat)
    edge_at = np.full((r, m), -1)
    edge_at[si, di] = np.arange(len(si))
    real = cols < m
    return np.sort(edge_at[rows[real], cols[real]])
