"""Domain types shared by every pipeline phase.

Everything here is immutable after construction; constructors validate their
own invariants and raise ``InvariantViolation`` (or ``TaxonomyError`` for
taxonomy configs) when handed inconsistent data.
"""

from __future__ import annotations

import graphlib
import ipaddress
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .errors import InvariantViolation, TaxonomyError

__all__ = [
    "Alert",
    "CandidateGroup",
    "ClassifiedAlert",
    "CorrelationMatrix",
    "Edge",
    "EvaluationReport",
    "GroundTruth",
    "HyperAlertGroup",
    "Node",
    "ScenarioGraph",
    "StageTaxonomy",
    "normalize_ip",
    "validate_taxonomy",
]


def normalize_ip(value: str) -> str:
    """Canonical text form of an IPv4/IPv6 address.

    DARPA exports write octets zero-padded (``172.016.112.010``); those are
    read as decimal, so the result is ``172.16.112.10``.
    """
    text = str(value).strip()
    try:
        return str(ipaddress.ip_address(text))
    except ValueError:
        parts = text.split(".")
        if len(parts) == 4 and all(p.isdigit() and 0 < len(p) <= 3 for p in parts):
            try:
                return str(ipaddress.ip_address(".".join(str(int(p)) for p in parts)))
            except ValueError:
                pass
        raise ValueError(f"invalid IP address {value!r}") from None


@dataclass(frozen=True)
class Alert:
    id: str
    timestamp: float
    alert_type: str
    source_ip: str
    target_ip: str
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.timestamp, (int, float)) or not math.isfinite(self.timestamp):
            raise ValueError(f"alert {self.id}: timestamp must be finite, got {self.timestamp!r}")
        if self.timestamp < 0:
            raise ValueError(f"alert {self.id}: negative timestamp {self.timestamp}")
        if not self.alert_type:
            raise ValueError(f"alert {self.id}: empty alert_type")
        # millisecond resolution
        object.__setattr__(self, "timestamp", round(float(self.timestamp), 3))
        object.__setattr__(self, "source_ip", normalize_ip(self.source_ip))
        object.__setattr__(self, "target_ip", normalize_ip(self.target_ip))
        object.__setattr__(self, "attributes", dict(self.attributes))

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "ts": self.timestamp,
            "type": self.alert_type,
            "src": self.source_ip,
            "dst": self.target_ip,
            "attrs": dict(sorted(self.attributes.items())),
        }


class ClassifiedAlert(NamedTuple):
    alert: Alert
    stage: int


@dataclass(frozen=True)
class StageTaxonomy:
    """Ordered attack stages plus the alert-type to stage mapping.

    Stage indices are 1-based: ``stages[0]`` is stage 1.
    """

    stages: tuple[str, ...]
    type_to_stage: Mapping[str, int]
    required_stages: frozenset[int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "type_to_stage", dict(self.type_to_stage))
        object.__setattr__(self, "required_stages", frozenset(self.required_stages))
        if not self.stages:
            raise TaxonomyError("taxonomy has no stages")
        seen = set()
        for name in self.stages:
            if not isinstance(name, str) or not name:
                raise TaxonomyError(f"stage names must be non-empty strings, got {name!r}")
            if name in seen:
                raise TaxonomyError(f"duplicate stage name {name!r}")
            seen.add(name)
        j = len(self.stages)
        for alert_type, idx in self.type_to_stage.items():
            if not alert_type:
                raise TaxonomyError("empty alert type in mapping")
            if isinstance(idx, bool) or not isinstance(idx, int) or not 1 <= idx <= j:
                raise TaxonomyError(f"alert type {alert_type!r} mapped to unknown stage {idx!r}")
        if not self.required_stages:
            raise TaxonomyError("required_stages is empty")
        bad = sorted(s for s in self.required_stages if not 1 <= s <= j)
        if bad:
            raise TaxonomyError(f"required_stages reference unknown stage(s) {bad}")

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    def stage_of(self, alert_type: str) -> int | None:
        return self.type_to_stage.get(alert_type)

    def stage_name(self, index: int) -> str:
        return self.stages[index - 1]

    def stage_index(self, name: str) -> int:
        try:
            return self.stages.index(name) + 1
        except ValueError:
            raise TaxonomyError(f"unknown stage {name!r}") from None

    def with_required(self, required: Iterable[str | int]) -> StageTaxonomy:
        return StageTaxonomy(self.stages, self.type_to_stage, _resolve_stages(self.stages, required))

    def to_dict(self) -> dict[str, Any]:
        return {
            "stages": list(self.stages),
            "mapping": {t: self.stages[i - 1] for t, i in sorted(self.type_to_stage.items())},
            "required_stages": [self.stages[i - 1] for i in sorted(self.required_stages)],
        }


def _resolve_stage(stages: Sequence[str], ref: str | int) -> int:
    if isinstance(ref, bool):
        raise TaxonomyError(f"unknown stage {ref!r}")
    if isinstance(ref, int):
        if not 1 <= ref <= len(stages):
            raise TaxonomyError(f"unknown stage {ref} (taxonomy has {len(stages)} stages)")
        return ref
    if isinstance(ref, str) and ref in stages:
        return list(stages).index(ref) + 1
    raise TaxonomyError(f"unknown stage {ref!r}")


def _resolve_stages(stages: Sequence[str], refs: Iterable[str | int]) -> frozenset[int]:
    return frozenset(_resolve_stage(stages, r) for r in refs)


def validate_taxonomy(raw: Mapping[str, Any]) -> StageTaxonomy:
    """Build a taxonomy from a parsed JSON config.

    ``mapping`` values may be stage names or 1-based stage indices;
    ``required_stages`` defaults to every stage.
    """
    if not isinstance(raw, Mapping):
        raise TaxonomyError("taxonomy config must be a JSON object")
    stages = raw.get("stages")
    if not isinstance(stages, list) or not stages:
        raise TaxonomyError("'stages' must be a non-empty array of stage names")
    if len(set(stages)) != len(stages):
        dupes = sorted({s for s in stages if stages.count(s) > 1})
        raise TaxonomyError(f"duplicate stage name(s): {dupes}")
    mapping = raw.get("mapping")
    if not isinstance(mapping, Mapping):
        raise TaxonomyError("'mapping' must be an object of alert_type -> stage")
    type_to_stage = {}
    for alert_type, ref in mapping.items():
        try:
            type_to_stage[alert_type] = _resolve_stage(stages, ref)
        except TaxonomyError as exc:
            raise TaxonomyError(f"alert type {alert_type!r}: {exc}") from None
    required = raw.get("required_stages")
    if required is None:
        required_idx = frozenset(range(1, len(stages) + 1))
    else:
        if not isinstance(required, list):
            raise TaxonomyError("'required_stages' must be an array")
        required_idx = _resolve_stages(stages, required)
    unknown_keys = set(raw) - {"stages", "mapping", "required_stages"}
    if unknown_keys:
        raise TaxonomyError(f"unexpected taxonomy keys: {sorted(unknown_keys)}")
    return StageTaxonomy(tuple(stages), type_to_stage, required_idx)


@dataclass(frozen=True)
class HyperAlertGroup:
    """All alerts aimed at one target IP, possibly spanning several stages."""

    target_ip: str
    members: tuple[ClassifiedAlert, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(ClassifiedAlert(*m) for m in self.members))
        if not self.members:
            raise InvariantViolation(f"hyper alert group for {self.target_ip} is empty")
        for m in self.members:
            if m.alert.target_ip != self.target_ip:
                raise InvariantViolation(
                    f"alert {m.alert.id} targets {m.alert.target_ip}, not {self.target_ip}"
                )

    @property
    def alerts(self) -> list[Alert]:
        return [m.alert for m in self.members]

    @property
    def stages_present(self) -> frozenset[int]:
        return frozenset(m.stage for m in self.members)

    def __len__(self) -> int:
        return len(self.members)

    def to_dict(self) -> dict[str, Any]:
        return {
            "target_ip": self.target_ip,
            "stages_present": sorted(self.stages_present),
            "alert_count": len(self.members),
            "alerts": [{"id": m.alert.id, "type": m.alert.alert_type, "stage": m.stage}
                       for m in self.members],
        }


@dataclass(frozen=True)
class CandidateGroup:
    base: HyperAlertGroup
    removed_late_alerts: tuple[ClassifiedAlert, ...]
    last_stage_reference_time: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "removed_late_alerts",
                           tuple(ClassifiedAlert(*m) for m in self.removed_late_alerts))
        last = max(self.base.stages_present)
        for m in self.base.members:
            if m.stage < last and m.alert.timestamp > self.last_stage_reference_time:
                raise InvariantViolation(
                    f"alert {m.alert.id} (stage {m.stage}) at {m.alert.timestamp} is later "
                    f"than the last-stage reference time {self.last_stage_reference_time}"
                )

    @property
    def target_ip(self) -> str:
        return self.base.target_ip

    @property
    def members(self) -> tuple[ClassifiedAlert, ...]:
        return self.base.members

    @property
    def alerts(self) -> list[Alert]:
        return self.base.alerts

    @property
    def stages_present(self) -> frozenset[int]:
        return self.base.stages_present

    def to_dict(self) -> dict[str, Any]:
        out = self.base.to_dict()
        out["last_stage_reference_time"] = self.last_stage_reference_time
        out["removed_late_alerts"] = [
            {"id": m.alert.id, "type": m.alert.alert_type, "stage": m.stage, "ts": m.alert.timestamp}
            for m in self.removed_late_alerts
        ]
        return out


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Symmetric matrix of Pearson r values; ``NaN`` entries are undefined."""

    types: tuple[str, ...]
    entries: np.ndarray
    bin_width: float | None = None

    def __post_init__(self) -> None:
        types = tuple(self.types)
        arr = np.array(self.entries, dtype=float)
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "entries", arr)
        arr.setflags(write=False)
        k = len(types)
        if len(set(types)) != k:
            raise InvariantViolation("correlation matrix has duplicate type labels")
        if arr.shape != (k, k):
            raise InvariantViolation(f"matrix shape {arr.shape} does not match {k} types")
        defined = ~np.isnan(arr)
        if np.any(defined != defined.T) or np.any(arr[defined] != arr.T[defined]):
            raise InvariantViolation("correlation matrix is not symmetric")
        if np.any(np.abs(arr[defined]) > 1.0):
            raise InvariantViolation("correlation value outside [-1, 1]")
        diag = np.diag(arr)
        if np.any(~np.isnan(diag) & (diag != 1.0)):
            raise InvariantViolation("diagonal entries must be 1 or undefined")

    def index(self, alert_type: str) -> int:
        try:
            return self.types.index(alert_type)
        except ValueError:
            raise KeyError(alert_type) from None

    def r(self, a: str, b: str) -> float | None:
        value = self.entries[self.index(a), self.index(b)]
        return None if math.isnan(value) else float(value)

    def __contains__(self, alert_type: object) -> bool:
        return alert_type in self.types

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CorrelationMatrix):
            return NotImplemented
        return (self.types == other.types and self.bin_width == other.bin_width
                and np.array_equal(self.entries, other.entries, equal_nan=True))


class Node(NamedTuple):
    alert_type: str
    stage: int
    count: int
    alert_ids: tuple[str, ...] = ()


class Edge(NamedTuple):
    source: str
    target: str
    r: float


@dataclass(frozen=True)
class ScenarioGraph:
    target_ip: str
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    self_loops: frozenset[str]
    theta: float
    bin_width: float | None = None
    edge_mode: str = "adjacent"

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(Node(*n) for n in self.nodes))
        object.__setattr__(self, "edges", tuple(Edge(*e) for e in self.edges))
        object.__setattr__(self, "self_loops", frozenset(self.self_loops))
        stage = {n.alert_type: n.stage for n in self.nodes}
        if len(stage) != len(self.nodes):
            raise InvariantViolation("duplicate node in scenario graph")
        for e in self.edges:
            if e.source not in stage or e.target not in stage:
                raise InvariantViolation(f"edge {e.source}->{e.target} references a missing node")
            if stage[e.source] >= stage[e.target]:
                raise InvariantViolation(
                    f"edge {e.source}->{e.target} does not go to a later stage"
                )
        counts = {n.alert_type: n.count for n in self.nodes}
        for t in self.self_loops:
            if counts.get(t, 0) < 2:
                raise InvariantViolation(f"self-loop on {t!r} needs at least 2 occurrences")

    def node(self, alert_type: str) -> Node:
        for n in self.nodes:
            if n.alert_type == alert_type:
                return n
        raise KeyError(alert_type)

    def has_edge(self, source: str, target: str) -> bool:
        return any(e.source == source and e.target == target for e in self.edges)

    def connected_types(self) -> set[str]:
        """Types with at least one incident edge, self-loops excluded."""
        return {e.source for e in self.edges} | {e.target for e in self.edges}

    def topological_order(self) -> list[str]:
        ts = graphlib.TopologicalSorter({n.alert_type: set() for n in self.nodes})
        for e in self.edges:
            ts.add(e.target, e.source)
        return list(ts.static_order())

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": [{"type": n.alert_type, "stage": n.stage, "count": n.count,
                       "self_loop": n.alert_type in self.self_loops,
                       "alert_ids": list(n.alert_ids)} for n in self.nodes],
            "edges": [{"from": e.source, "to": e.target, "r": e.r} for e in self.edges],
            "meta": {"target_ip": self.target_ip, "theta": self.theta,
                     "bin_width": self.bin_width, "edge_mode": self.edge_mode},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ScenarioGraph:
        nodes = [Node(n["type"], int(n["stage"]), int(n["count"]), tuple(n.get("alert_ids", ())))
                 for n in data["nodes"]]
        meta = data.get("meta", {})
        loops = {n["type"] for n in data["nodes"]
                 if n.get("self_loop", int(n["count"]) >= 2)}
        return cls(
            target_ip=normalize_ip(meta["target_ip"]),
            nodes=tuple(nodes),
            edges=tuple(Edge(e["from"], e["to"], float(e["r"])) for e in data["edges"]),
            self_loops=frozenset(loops),
            theta=float(meta.get("theta", 0.5)),
            bin_width=meta.get("bin_width"),
            edge_mode=meta.get("edge_mode", "adjacent"),
        )


@dataclass(frozen=True)
class GroundTruth:
    scenario_id: str
    target_ip: str
    related_alert_ids: frozenset[str]
    # generator bookkeeping; empty for hand-labelled truth files
    late_alert_ids: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "target_ip", normalize_ip(self.target_ip))
        object.__setattr__(self, "related_alert_ids", frozenset(self.related_alert_ids))
        object.__setattr__(self, "late_alert_ids", frozenset(self.late_alert_ids))
        if not self.related_alert_ids:
            raise ValueError(f"ground truth {self.scenario_id!r} has no related alerts")

    def to_dict(self) -> dict[str, Any]:
        out = {
            "scenario_id": self.scenario_id,
            "target_ip": self.target_ip,
            "related_alert_ids": sorted(self.related_alert_ids),
        }
        if self.late_alert_ids:
            out["late_alert_ids"] = sorted(self.late_alert_ids)
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> GroundTruth:
        return cls(
            scenario_id=str(data["scenario_id"]),
            target_ip=data["target_ip"],
            related_alert_ids=frozenset(str(i) for i in data["related_alert_ids"]),
            late_alert_ids=frozenset(str(i) for i in data.get("late_alert_ids", ())),
        )


@dataclass(frozen=True)
class EvaluationReport:
    completeness: float
    soundness: float
    correctly_correlated: int
    related: int
    correlated: int
    target_ip: str = ""
    scenario_id: str = ""

    def __post_init__(self) -> None:
        if self.correctly_correlated > min(self.related, self.correlated):
            raise InvariantViolation("correctly correlated exceeds related or correlated count")
        for name in ("completeness", "soundness"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvariantViolation(f"{name} outside [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario_id": self.scenario_id,
            "target_ip": self.target_ip,
            "completeness": self.completeness,
            "soundness": self.soundness,
            "correctly_correlated": self.correctly_correlated,
            "related": self.related,
            "correlated": self.correlated,
        }
