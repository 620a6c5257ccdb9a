from .assignment import AssignmentSolution, solve_assignment
from .candidates import CandidateLink, Candidates, gen_candidates
from .cost import CostBreakdown, Weights, link_cost, penalty_components
from .pareto import ParetoFrontier, default_lambda_grid, pareto_select
from .tracker import FlowTracker, LinkerConfig, TrackResult, track_sequence

__all__ = [
    "AssignmentSolution",
    "CandidateLink",
    "Candidates",
    "CostBreakdown",
    "FlowTracker",
    "LinkerConfig",
    "ParetoFrontier",
    "TrackResult",
    "Weights",
    "default_lambda_grid",
    "gen_candidates",
    "link_cost",
    "pareto_select",
    "penalty_components",
    "solve_assignment",
    "track_sequence",
]
