"""Keep stage-complete hyper alert groups and drop alerts that arrive after
the final stage."""

from __future__ import annotations

from collections.abc import Iterable
from enum import Enum
from typing import NamedTuple

from .alert_model import CandidateGroup, HyperAlertGroup, StageTaxonomy
from .errors import ScenarioForgeError


class ReferenceTime(str, Enum):
    MAX = "max"
    MIN = "min"


class DemotedGroup(ScenarioForgeError):
    """Late-alert removal left a required stage empty.

    ``candidate`` holds the filtered group so callers can report it.
    """

    def __init__(self, candidate: CandidateGroup, missing: frozenset[int]):
        self.candidate = candidate
        self.missing = missing
        super().__init__(
            f"group {candidate.target_ip} lost required stage(s) {sorted(missing)} "
            f"after late-alert filtering"
        )


class MappingResult(NamedTuple):
    candidates: list[CandidateGroup]
    rejected: list[HyperAlertGroup]
    demoted: list[DemotedGroup]


def select_candidates(
    groups: Iterable[HyperAlertGroup], taxonomy: StageTaxonomy
) -> tuple[list[HyperAlertGroup], list[HyperAlertGroup]]:
    candidates, rejected = [], []
    for g in groups:
        (candidates if g.stages_present >= taxonomy.required_stages else rejected).append(g)
    return candidates, rejected


def filter_late_alerts(
    candidate: HyperAlertGroup | CandidateGroup,
    taxonomy: StageTaxonomy,
    reference: ReferenceTime | str = ReferenceTime.MAX,
) -> CandidateGroup:
    """Remove earlier-stage alerts timestamped after the last stage.

    The reference time is the latest (or, with ``reference="min"``, the
    earliest) timestamp among alerts of the highest stage present. Alerts at
    exactly the reference time are kept.
    """
    reference = ReferenceTime(reference)
    previous: tuple = ()
    if isinstance(candidate, CandidateGroup):
        previous = candidate.removed_late_alerts
        candidate = candidate.base
    last = max(candidate.stages_present)
    last_times = [m.alert.timestamp for m in candidate.members if m.stage == last]
    ref_time = max(last_times) if reference is ReferenceTime.MAX else min(last_times)

    kept, removed = [], []
    for m in candidate.members:
        (removed if m.stage < last and m.alert.timestamp > ref_time else kept).append(m)

    result = CandidateGroup(HyperAlertGroup(candidate.target_ip, tuple(kept)),
                            previous + tuple(removed), ref_time)
    missing = taxonomy.required_stages - result.stages_present
    if missing:
        raise DemotedGroup(result, frozenset(missing))
    return result


def map_to_scenarios(
    groups: Iterable[HyperAlertGroup],
    taxonomy: StageTaxonomy,
    reference: ReferenceTime | str = ReferenceTime.MAX,
) -> MappingResult:
    selected, rejected = select_candidates(groups, taxonomy)
    out = MappingResult([], rejected, [])
    for g in selected:
        try:
            out.candidates.append(filter_late_alerts(g, taxonomy, reference))
        except DemotedGroup as exc:
            out.demoted.append(exc)
    return out
