"""Triplet-cost flow tracking and cohort discovery in crowded scenes."""
from .alert import (
    AlertConfig,
    AlertDeduplicator,
    AlertEvent,
    CohortReport,
    SensitiveLocation,
    check_alerts,
    cohort_report,
    density_map,
)
from .cohort import CohortConfig, CohortModel, VonMisesMixture, fit_cohort_model, vm_mixture_em
from .core import (
    CalibrationConfig,
    Detection,
    FlowVector,
    FrameVectors,
    angular_diff,
    mean_resultant,
    wrap_angle,
)
from .detect import DoGDetector, DetectorConfig, load_detections, write_detections
from .evaluate import EvalReport, evaluate
from .linker import FlowTracker, LinkerConfig, link_cost, pareto_select, solve_assignment, track_sequence
from .sim import ScenarioConfig, preset_scenario, simulate

__version__ = "0.1.0"

__all__ = [
    "AlertConfig",
    "AlertDeduplicator",
    "AlertEvent",
    "CalibrationConfig",
    "CohortConfig",
    "CohortModel",
    "CohortReport",
    "Detection",
    "DetectorConfig",
    "DoGDetector",
    "EvalReport",
    "FlowTracker",
    "FlowVector",
    "FrameVectors",
    "LinkerConfig",
    "ScenarioConfig",
    "SensitiveLocation",
    "VonMisesMixture",
    "angular_diff",
    "check_alerts",
    "cohort_report",
    "density_map",
    "evaluate",
    "fit_cohort_model",
    "link_cost",
    "load_detections",
    "write_detections",
    "mean_resultant",
    "pareto_select",
    "preset_scenario",
    "simulate",
    "solve_assignment",
    "track_sequence",
    "vm_mixture_em",
    "wrap_angle",
]
