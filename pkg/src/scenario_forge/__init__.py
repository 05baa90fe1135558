"""Multi-stage attack scenario reconstruction from NIDS alert streams."""

from .alert_model import (
    Alert,
    CandidateGroup,
    ClassifiedAlert,
    CorrelationMatrix,
    EvaluationReport,
    GroundTruth,
    HyperAlertGroup,
    ScenarioGraph,
    StageTaxonomy,
    validate_taxonomy,
)
from .correlation import build_count_series, build_scenario_graph, correlation_matrix, pearson
from .evaluation import evaluate
from .grouping import group_intra_stage, identify_related_alerts, merge_inter_stage
from .ingestion import IngestPolicy, classify_alerts, parse_alert_log
from .mapping import DemotedGroup, filter_late_alerts, map_to_scenarios, select_candidates
from .pipeline import PipelineConfig, run
from .synth import ScenarioSpec, generate

__version__ = "0.1.0"

__all__ = [
    "Alert", "CandidateGroup", "ClassifiedAlert", "CorrelationMatrix", "DemotedGroup",
    "EvaluationReport", "GroundTruth", "HyperAlertGroup", "IngestPolicy", "PipelineConfig",
    "ScenarioGraph", "ScenarioSpec", "StageTaxonomy", "build_count_series", "build_scenario_graph",
    "classify_alerts", "correlation_matrix", "evaluate", "filter_late_alerts", "generate",
    "group_intra_stage", "identify_related_alerts", "map_to_scenarios", "merge_inter_stage",
    "parse_alert_log", "pearson", "run", "select_candidates", "validate_taxonomy",
]
