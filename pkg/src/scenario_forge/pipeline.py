"""End-to-end composition: related alerts -> candidate groups -> scenario graphs."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .alert_model import Alert, CandidateGroup, CorrelationMatrix, HyperAlertGroup, ScenarioGraph, StageTaxonomy
from .correlation import (
    DEFAULT_BIN_WIDTH,
    DEFAULT_THETA,
    EdgeMode,
    SignMode,
    build_count_series,
    build_scenario_graph,
    correlation_matrix,
    pearson,
)
from .grouping import identify_related_alerts
from .ingestion import Classification, IngestPolicy, classify_alerts
from .mapping import MappingResult, ReferenceTime, map_to_scenarios


@dataclass(frozen=True)
class PipelineConfig:
    bin_width: float = DEFAULT_BIN_WIDTH
    theta: float = DEFAULT_THETA
    edge_mode: EdgeMode = EdgeMode.ADJACENT
    sign: SignMode = SignMode.ABS
    reference: ReferenceTime = ReferenceTime.MAX
    policy: IngestPolicy = field(default_factory=IngestPolicy)

    def __post_init__(self) -> None:
        object.__setattr__(self, "edge_mode", EdgeMode(self.edge_mode))
        object.__setattr__(self, "sign", SignMode(self.sign))
        object.__setattr__(self, "reference", ReferenceTime(self.reference))

    def to_dict(self) -> dict:
        return {
            "bin_width": self.bin_width,
            "theta": self.theta,
            "edge_mode": self.edge_mode.value,
            "sign": self.sign.value,
            "reference": self.reference.value,
            "unknown_type_action": self.policy.unknown_type_action.value,
            "dedup_exact": self.policy.dedup_exact,
        }


@dataclass
class PipelineResult:
    classification: Classification
    groups: list[HyperAlertGroup]
    mapping: MappingResult
    matrices: dict[str, CorrelationMatrix] = field(default_factory=dict)
    graphs: dict[str, ScenarioGraph] = field(default_factory=dict)

    @property
    def candidates(self) -> list[CandidateGroup]:
        return self.mapping.candidates


def candidate_matrix(candidate: CandidateGroup, bin_width: float) -> CorrelationMatrix:
    series = build_count_series(candidate, bin_width)
    if len(series) >= 2:
        return correlation_matrix(series)
    # a single alert type has nothing to correlate with
    diag = 1.0 if pearson(series[0], series[0]) is not None else np.nan
    return CorrelationMatrix((series[0].alert_type,), np.array([[diag]]), bin_width)


def construct_scenarios(
    candidates: Sequence[CandidateGroup], config: PipelineConfig
) -> tuple[dict[str, CorrelationMatrix], dict[str, ScenarioGraph]]:
    matrices, graphs = {}, {}
    for c in candidates:
        m = candidate_matrix(c, config.bin_width)
        matrices[c.target_ip] = m
        graphs[c.target_ip] = build_scenario_graph(c, m, config.theta,
                                                   edge_mode=config.edge_mode, sign=config.sign)
    return matrices, graphs


def run(alerts: Iterable[Alert], taxonomy: StageTaxonomy, config: PipelineConfig | None = None) -> PipelineResult:
    config = config or PipelineConfig()
    classification = classify_alerts(alerts, taxonomy, config.policy)
    groups = identify_related_alerts(classification.classified)
    mapping = map_to_scenarios(groups, taxonomy, config.reference)
    result = PipelineResult(classification, groups, mapping)
    result.matrices, result.graphs = construct_scenarios(mapping.candidates, config)
    return result
