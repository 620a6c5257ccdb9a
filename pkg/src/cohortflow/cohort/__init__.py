from .model import CohortConfig, CohortModel, UNORGANIZED, fit_cohort_model
from .mrf import NeighborGraph, build_neighbor_graph, mrf_relabel
from .vonmises import (
    CircularKMeans,
    VonMisesComponent,
    VonMisesMixture,
    circular_kmeans,
    kappa_from_rbar,
    log_i0,
    vm_mixture_em,
)
from .window import sliding_window_aggregate

__all__ = [
    "CircularKMeans",
    "CohortConfig",
    "CohortModel",
    "NeighborGraph",
    "UNORGANIZED",
    "VonMisesComponent",
    "VonMisesMixture",
    "build_neighbor_graph",
    "circular_kmeans",
    "fit_cohort_model",
    "kappa_from_rbar",
    "log_i0",
    "mrf_relabel",
    "sliding_window_aggregate",
    "vm_mixture_em",
]
