"""Potts-smoothed relabeling of flow vectors over a spatial neighbour graph.

Labels are mixture components. The energy is

    E(l) = sum_i D_i(l_i) + beta * #{(i, j) in edges : l_i != l_j}

with D_i(l) the negative log of the weighted component density at the
vector's angle. It is minimized by label-expansion moves, each one a binary
submodular problem solved exactly as a minimum s-t cut.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, maximum_flow
from scipy.spatial import cKDTree

from .._validation import check_points
from .vonmises import log_i0

# scipy's max-flow works on int32 capacities
_INT_BUDGET = 2**30


@dataclass
class NeighborGraph:
    n_nodes: int
    edges: np.ndarray  # (m, 2), i < j, lexicographically sorted

    @property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)


def median_nn_distance(points) -> float:
    points = check_points(points)
    if len(points) < 2:
        return 0.0
    d, _ = cKDTree(points).query(points, k=2)
    return float(np.median(d[:, 1]))


def build_neighbor_graph(points, k_nn=8, radius=None) -> NeighborGraph:
    """Connect each point to up to ``k_nn`` nearest others within ``radius`` (inclusive), symmetrized.

    ``radius`` defaults to three times the median nearest-neighbour distance.
    """
    points = check_points(points)
    n = len(points)
    if radius is None:
        radius = 3.0 * median_nn_distance(points)
    if n < 2 or k_nn < 1 or radius <= 0:
        return NeighborGraph(n, np.zeros((0, 2), dtype=int))
    k = min(k_nn + 1, n)
    # nextafter makes the radius inclusive
    d, idx = cKDTree(points).query(points, k=k, distance_upper_bound=np.nextafter(radius, np.inf))
    d = d.reshape(n, k)
    idx = idx.reshape(n, k)
    rows = np.repeat(np.arange(n), k)
    cols = idx.ravel()
    ok = np.isfinite(d.ravel()) & (cols != rows) & (cols < n)
    a, b = rows[ok], cols[ok]
    pairs = np.column_stack([np.minimum(a, b), np.maximum(a, b)])
    if len(pairs) == 0:
        return NeighborGraph(n, np.zeros((0, 2), dtype=int))
    pairs = np.unique(pairs, axis=0)
    return NeighborGraph(n, pairs)


def data_term(angles, means, kappas, weights, sample_weight=None) -> np.ndarray:
    """(n, k) costs -log w_l - s_i (kappa_l cos(theta_i - mu_l) - log I0(kappa_l)).

    ``sample_weight`` s_i tempers each vector's likelihood the same way a
    weighted mixture fit does; the default s_i = 1 is the plain posterior.
    """
    angles = np.asarray(angles, dtype=float)
    means, kappas, weights = (np.asarray(v, dtype=float) for v in (means, kappas, weights))
    nll = -kappas[None, :] * np.cos(angles[:, None] - means[None, :]) + log_i0(kappas)[None, :]
    if sample_weight is not None:
        nll = nll * np.asarray(sample_weight, dtype=float).reshape(-1, 1)
    with np.errstate(divide="ignore"):
        return -np.log(weights)[None, :] + nll


def potts_energy(labels, unary, edges, beta) -> float:
    labels = np.asarray(labels)
    e = float(unary[np.arange(len(labels)), labels].sum())
    if len(edges):
        e += beta * float(np.count_nonzero(labels[edges[:, 0]] != labels[edges[:, 1]]))
    return e


def binary_cut(u0, u1, edges, pw):
    """Exactly minimize sum_i u_x(i) + sum_e pw[e][x_i, x_j] over x in {0,1}^n.

    ``pw`` is (m, 4) holding (E00, E01, E10, E11) per edge and must be
    submodular. Energies are quantized to integers for the flow solver.
    Returns the boolean assignment (True means x = 1).
    """
    n = len(u0)
    unary = np.asarray(u1, dtype=float) - np.asarray(u0, dtype=float)
    src, dst, cap = [], [], []
    if len(edges):
        A, B, C, D = pw.T
        i, j = edges[:, 0], edges[:, 1]
        np.add.at(unary, i, C - A)
        np.add.at(unary, j, D - C)
        w = B + C - A - D
        if np.any(w < -1e-9):
            raise ValueError("pairwise terms are not submodular")
        keep = w > 0
        src.append(i[keep])
        dst.append(j[keep])
        cap.append(w[keep])
    s, t = n, n + 1
    pos = unary > 0  # cost paid when x = 1: edge s -> i
    src += [np.full(pos.sum(), s), np.flatnonzero(~pos)]
    dst += [np.flatnonzero(pos), np.full((~pos).sum(), t)]
    cap += [unary[pos], -unary[~pos]]
    src, dst, cap = (np.concatenate(v) for v in (src, dst, cap))
    total = cap.sum()
    if total <= 0:
        return np.zeros(n, dtype=bool)
    scale = min(1e6, _INT_BUDGET / total)
    icap = np.rint(cap * scale).astype(np.int64)
    g = coo_matrix((icap, (src, dst)), shape=(n + 2, n + 2)).tocsr()
    g.sum_duplicates()
    res = maximum_flow(g.astype(np.int32), s, t)
    resid = (g - res.flow).tocsr()
    resid.data[resid.data < 0] = 0
    resid.eliminate_zeros()
    reach = breadth_first_order(resid, s, directed=True, return_predecessors=False)
    x = np.ones(n, dtype=bool)
    reach = reach[reach < n]
    x[reach] = False
    return x


@dataclass
class MRFResult:
    labels: np.ndarray
    initial_energy: float
    final_energy: float
    energy_trace: list = field(default_factory=list)
    n_moves: int = 0


def mrf_relabel(
    angles, mixture, graph: NeighborGraph, beta=1.0, init=None, max_sweeps=20, sample_weight=None
) -> MRFResult:
    """Potts-regularized labeling by label-expansion moves.

    ``mixture`` is a sequence of VonMisesComponent (or anything with mu,
    kappa and weight). Starts from the per-vector posterior argmax unless
    ``init`` is given. Only strictly improving moves are accepted, so the
    energy trace is non-increasing.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    comps = list(mixture)
    if not comps:
        raise ValueError("mixture needs at least one component")
    angles = np.asarray(angles, dtype=float)
    unary = data_term(
        angles, [c.mu for c in comps], [c.kappa for c in comps], [c.weight for c in comps], sample_weight
    )
    n, k = unary.shape
    labels = np.argmin(unary, axis=1) if init is None else np.asarray(init, dtype=int).copy()
    edges = graph.edges
    energy = potts_energy(labels, unary, edges, beta)
    trace = [energy]
    moves = 0
    if n == 0 or k == 1 or beta == 0 or len(edges) == 0:
        return MRFResult(labels, energy, energy, trace, 0)
    rows = np.arange(n)
    for _ in range(max_sweeps):
        improved = False
        for alpha in range(k):
            u0 = unary[rows, labels]
            u1 = unary[:, alpha]
            li, lj = labels[edges[:, 0]], labels[edges[:, 1]]
            pw = beta * np.column_stack(
                [li != lj, li != alpha, alpha != lj, np.zeros(len(edges), dtype=bool)]
            ).astype(float)
            x = binary_cut(u0, u1, edges, pw)
            proposal = np.where(x, alpha, labels)
            if np.array_equal(proposal, labels):
                continue
            e = potts_energy(proposal, unary, edges, beta)
            if e < energy - 1e-12 * max(1.0, abs(energy)):
                labels, energy = proposal, e
                trace.append(energy)
                moves += 1
                improved = True
        if not improved:
            break
    return MRFResult(labels, trace[0], energy, trace, moves)
