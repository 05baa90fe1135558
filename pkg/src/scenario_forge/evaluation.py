"""Completeness and soundness of a reconstructed scenario."""

from __future__ import annotations

import json
import os
from collections.abc import Iterable

from .alert_model import CandidateGroup, EvaluationReport, GroundTruth, ScenarioGraph
from .errors import InputError, TargetMismatch


def correlated_alert_ids(graph: ScenarioGraph, candidate: CandidateGroup | None = None) -> set[str]:
    """Ids of alerts whose type has at least one non-self-loop edge.

    Without ``candidate`` the alert ids recorded on the graph nodes are used.
    """
    connected = graph.connected_types()
    if candidate is not None:
        return {a.id for a in candidate.alerts if a.alert_type in connected}
    return {i for n in graph.nodes if n.alert_type in connected for i in n.alert_ids}


def evaluate(graph: ScenarioGraph, candidate: CandidateGroup | None, truth: GroundTruth) -> EvaluationReport:
    if truth.target_ip != graph.target_ip or (candidate is not None and candidate.target_ip != truth.target_ip):
        raise TargetMismatch(
            f"ground truth targets {truth.target_ip} but the scenario targets {graph.target_ip}"
        )
    if candidate is None and graph.nodes and not any(n.alert_ids for n in graph.nodes):
        raise InputError("graph carries no alert ids; pass the candidate group")
    correlated = correlated_alert_ids(graph, candidate)
    correct = len(correlated & truth.related_alert_ids)
    related = len(truth.related_alert_ids)
    return EvaluationReport(
        completeness=correct / related if related else 0.0,
        soundness=correct / len(correlated) if correlated else 0.0,
        correctly_correlated=correct,
        related=related,
        correlated=len(correlated),
        target_ip=truth.target_ip,
        scenario_id=truth.scenario_id,
    )


def load_truth(path: str | os.PathLike) -> list[GroundTruth]:
    """Read a truth file holding one scenario object or a list of them."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc.msg})") from None
    items = data if isinstance(data, list) else [data]
    try:
        return [GroundTruth.from_dict(d) for d in items]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed ground truth ({exc})") from None


def format_table(reports: Iterable[EvaluationReport]) -> str:
    rows = [("scenario", "target", "Rc", "Rs", "correct", "related", "correlated")]
    for r in reports:
        rows.append((r.scenario_id, r.target_ip, f"{r.completeness:.2f}", f"{r.soundness:.2f}",
                     str(r.correctly_correlated), str(r.related), str(r.correlated)))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows) + "\n"
