"""Group alerts by target IP, first inside each stage, then across stages."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .alert_model import ClassifiedAlert, HyperAlertGroup


@dataclass(frozen=True)
class IntraStageGroup:
    stage: int
    target_ip: str
    members: tuple[ClassifiedAlert, ...]

    def __len__(self) -> int:
        return len(self.members)


def group_intra_stage(classified: Iterable[ClassifiedAlert]) -> dict[int, list[IntraStageGroup]]:
    """Partition each stage's alerts by exact target IP.

    Stages come out in ascending order; groups within a stage in order of
    their first alert.
    """
    buckets: dict[int, dict[str, list[ClassifiedAlert]]] = {}
    for item in classified:
        item = ClassifiedAlert(*item)
        buckets.setdefault(item.stage, {}).setdefault(item.alert.target_ip, []).append(item)
    return {
        stage: [IntraStageGroup(stage, ip, tuple(members)) for ip, members in buckets[stage].items()]
        for stage in sorted(buckets)
    }


def merge_inter_stage(
    per_stage: Mapping[int, Sequence[IntraStageGroup]] | Iterable[HyperAlertGroup],
) -> list[HyperAlertGroup]:
    """Merge groups sharing a target IP into one hyper alert group each.

    Also accepts a list of hyper alert groups, which makes merging idempotent.
    Members are kept stage-major; output is ordered by lowest stage present,
    then the earliest timestamp, then target IP.
    """
    if isinstance(per_stage, Mapping):
        groups: Iterable = (g for stage in sorted(per_stage) for g in per_stage[stage])
    else:
        groups = per_stage

    by_target: dict[str, list[ClassifiedAlert]] = {}
    for g in groups:
        by_target.setdefault(g.target_ip, []).extend(g.members)

    merged = []
    for ip, members in by_target.items():
        members.sort(key=lambda m: m.stage)  # stable: keeps first-seen order within a stage
        merged.append(HyperAlertGroup(ip, tuple(members)))
    merged.sort(key=lambda g: (min(g.stages_present),
                               min(m.alert.timestamp for m in g.members),
                               g.target_ip))
    return merged


def identify_related_alerts(classified: Iterable[ClassifiedAlert]) -> list[HyperAlertGroup]:
    return merge_inter_stage(group_intra_stage(classified))
