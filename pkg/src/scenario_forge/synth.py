"""Synthetic multi-stage alert datasets with exact ground truth.

A planted scenario runs over ``rounds`` consecutive time slots of
``bin_width`` seconds. In each slot the attacker walks through the stages in
order, so every slot's alerts are laid out stage by stage starting at the
slot boundary. How many alerts of a type land in each slot follows one of two
occupancy profiles:

* ``"+1"`` (default): the palindromic profile ``[2, 1, ..., 1, 2]``. Types
  sharing it produce proportional count series, i.e. Pearson r = +1.
* ``"0"``: a step profile that is antisymmetric about the middle slot once
  centred, which makes its Pearson r against the palindromic profile exactly 0.

Counts that are multiples of the profile sum reproduce the profile exactly;
other counts are apportioned by largest remainder and only approximate it.
"""

from __future__ import annotations

import json
import logging
import os
import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .alert_model import Alert, GroundTruth, StageTaxonomy, normalize_ip
from .errors import InputError
from .ingestion import alerts_to_csv

log = logging.getLogger(__name__)

CORRELATIONS = ("+1", "0")


@dataclass(frozen=True)
class PlanEntry:
    alert_type: str
    count: int
    # True: one attacker retries from the same source; False: each alert from its own source
    repeat: bool = True
    correlation: str = "+1"


@dataclass(frozen=True)
class ScenarioSpec:
    hosts: tuple[str, ...]
    stage_plan: Mapping[str, tuple[PlanEntry, ...]]
    inter_stage_gap: float = 2.0
    noise_alerts: int = 0
    late_alerts: int = 0
    seed: int = 0
    noise_ips: int | None = None
    rounds: int = 4
    bin_width: float = 60.0
    start_time: float = 1_000_000_000.0
    attempt_spacing: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "hosts", tuple(normalize_ip(h) for h in self.hosts))
        object.__setattr__(self, "stage_plan", {
            stage: tuple(e if isinstance(e, PlanEntry) else PlanEntry(**e) for e in entries)
            for stage, entries in self.stage_plan.items()
        })
        if not self.hosts:
            raise InputError("spec needs at least one host")
        if len(set(self.hosts)) != len(self.hosts):
            raise InputError("spec hosts must be distinct")
        for name in ("noise_alerts", "late_alerts"):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be non-negative")
        if self.noise_ips is not None and (self.noise_ips < 1 or self.noise_ips > max(self.noise_alerts, 1)):
            raise InputError("noise_ips must lie in [1, noise_alerts]")
        if self.rounds < 3:
            raise InputError("rounds must be at least 3 so occupancy profiles are not constant")
        if not self.bin_width > 0 or self.inter_stage_gap < 0 or not self.attempt_spacing > 0:
            raise InputError("bin_width and attempt_spacing must be positive, inter_stage_gap non-negative")
        for stage, entries in self.stage_plan.items():
            for e in entries:
                if e.count < 0:
                    raise InputError(f"{e.alert_type}: negative count")
                if e.correlation not in CORRELATIONS:
                    raise InputError(f"{e.alert_type}: correlation must be one of {CORRELATIONS}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ScenarioSpec:
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise InputError(f"unexpected spec keys: {sorted(extra)}")
        try:
            plan = {stage: tuple(PlanEntry(**e) for e in entries)
                    for stage, entries in data["stage_plan"].items()}
            kwargs = dict(data)
            kwargs["stage_plan"] = plan
            kwargs["hosts"] = tuple(data["hosts"])
            return cls(**kwargs)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed scenario spec: {exc}") from None

    def to_dict(self) -> dict[str, Any]:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["hosts"] = list(self.hosts)
        out["stage_plan"] = {s: [vars(e) for e in entries] for s, entries in self.stage_plan.items()}
        return out


def load_spec(path: str | os.PathLike) -> ScenarioSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            return ScenarioSpec.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc.msg})") from None


def profile(kind: str, rounds: int) -> list[int]:
    if kind == "+1":
        return [2] + [1] * (rounds - 2) + [2]
    half = rounds // 2
    if rounds % 2 == 0:
        return [1] * half + [2] * half
    return [2] * half + [3] + [4] * half


def apportion(count: int, weights: Sequence[int]) -> list[int]:
    """Split ``count`` over slots proportionally to ``weights`` (largest remainder)."""
    total = sum(weights)
    quotas = [count * w / total for w in weights]
    shares = [int(q) for q in quotas]
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - shares[i]), i))
    for i in order[: count - sum(shares)]:
        shares[i] += 1
    return shares


def _resolve_plan(spec: ScenarioSpec, taxonomy: StageTaxonomy) -> list[tuple[int, PlanEntry]]:
    plan = []
    for stage_ref, entries in spec.stage_plan.items():
        stage = taxonomy.stage_index(stage_ref) if not str(stage_ref).isdigit() else int(stage_ref)
        if not 1 <= stage <= taxonomy.n_stages:
            raise InputError(f"stage_plan references unknown stage {stage_ref!r}")
        for e in entries:
            mapped = taxonomy.stage_of(e.alert_type)
            if mapped is None:
                raise InputError(f"{e.alert_type!r} is not in the taxonomy")
            if mapped != stage:
                raise InputError(f"{e.alert_type!r} belongs to stage {taxonomy.stage_name(mapped)!r}, "
                                 f"not {taxonomy.stage_name(stage)!r}")
            if e.count:
                plan.append((stage, e))
    covered = {s for s, _ in plan}
    missing = taxonomy.required_stages - covered
    if missing:
        names = [taxonomy.stage_name(s) for s in sorted(missing)]
        raise InputError(f"stage_plan misses required stage(s) {names}")
    plan.sort(key=lambda se: se[0])  # stable: plan order within a stage
    return plan


def _random_ip(rng: random.Random, first_octet: int, taken: set[str]) -> str:
    while True:
        ip = f"{first_octet}.{rng.randrange(256)}.{rng.randrange(256)}.{rng.randrange(1, 255)}"
        if ip not in taken:
            taken.add(ip)
            return ip


def generate(spec: ScenarioSpec, taxonomy: StageTaxonomy) -> tuple[list[Alert], list[GroundTruth]]:
    """Emit the planted scenarios plus noise and late alerts, in timestamp order.

    Each ``GroundTruth`` lists its scenario's planted alert ids; injected late
    alerts are recorded separately in ``late_alert_ids``.
    """
    plan = _resolve_plan(spec, taxonomy)
    rng = random.Random(spec.seed)
    last_stage = plan[-1][0]
    early_entries = [e for s, e in plan if s < last_stage]
    if spec.late_alerts and not early_entries:
        raise InputError("late alerts need at least one planted stage before the last")

    taken = set(spec.hosts)
    # (timestamp, seq, type, src, dst, role, host index)
    raw: list[tuple[float, int, str, str, str, str, int]] = []
    seq = 0
    window = (spec.rounds + 1) * spec.bin_width
    last_times: list[float] = []

    for h, host in enumerate(spec.hosts):
        attacker = _random_ip(rng, 202, taken)
        host_start = spec.start_time + h * window
        shares = [apportion(e.count, profile(e.correlation, spec.rounds)) for _, e in plan]
        if h == 0:
            for (_, e), sh in zip(plan, shares):
                if e.count and len(set(sh)) == 1:
                    log.warning("%s: %d alert(s) over %d rounds give a constant count series; "
                                "its correlation is undefined", e.alert_type, e.count, spec.rounds)
        last_active = max(k for k in range(spec.rounds) if any(sh[k] for sh in shares))
        if not any(sh[last_active] for (s, _), sh in zip(plan, shares) if s == last_stage):
            raise InputError(f"host {host}: the last stage has no alert in the final active round; "
                             f"raise its count")
        t_last = 0.0
        for k in range(spec.rounds):
            offset = 0.0
            prev_stage = None
            placed = False
            for (stage, e), sh in zip(plan, shares):
                if not sh[k]:
                    continue
                if placed and stage != prev_stage:
                    offset += spec.inter_stage_gap
                for _ in range(sh[k]):
                    if offset >= spec.bin_width:
                        raise InputError(f"round layout exceeds bin_width={spec.bin_width}s; "
                                         f"lower counts, inter_stage_gap or attempt_spacing")
                    ts = round(host_start + k * spec.bin_width + offset, 3)
                    src = attacker if e.repeat else _random_ip(rng, 198, taken)
                    raw.append((ts, seq, e.alert_type, src, host, "planted", h))
                    seq += 1
                    if stage == last_stage:
                        t_last = max(t_last, ts)
                    offset += spec.attempt_spacing
                placed, prev_stage = True, stage
        last_times.append(t_last)

    for i in range(spec.late_alerts):
        h = i % len(spec.hosts)
        e = rng.choice(early_entries)
        ts = round(last_times[h] + spec.attempt_spacing * (1 + i // len(spec.hosts)), 3)
        raw.append((ts, seq, e.alert_type, _random_ip(rng, 203, taken), spec.hosts[h], "late", h))
        seq += 1

    if spec.noise_alerts:
        noise_stages = list(range(1, taxonomy.n_stages + 1))
        if len(taxonomy.required_stages) < 2:
            noise_stages = [s for s in noise_stages if s not in taxonomy.required_stages]
        by_stage = {s: sorted(t for t, i in taxonomy.type_to_stage.items() if i == s) for s in noise_stages}
        noise_stages = [s for s in noise_stages if by_stage[s]]
        if not noise_stages:
            raise InputError("no stage can host noise alerts without completing a scenario")
        n_ips = spec.noise_ips or spec.noise_alerts
        ips = [_random_ip(rng, 10, taken) for _ in range(n_ips)]
        stage_of_ip = [rng.choice(noise_stages) for _ in ips]
        end = spec.start_time + len(spec.hosts) * window
        for i in range(spec.noise_alerts):
            j = i % n_ips
            ts = round(rng.uniform(spec.start_time, end), 3)
            alert_type = rng.choice(by_stage[stage_of_ip[j]])
            raw.append((ts, seq, alert_type, _random_ip(rng, 198, taken), ips[j], "noise", -1))
            seq += 1

    raw.sort()
    alerts = []
    related: list[list[str]] = [[] for _ in spec.hosts]
    late: list[list[str]] = [[] for _ in spec.hosts]
    width = len(str(len(raw)))
    for n, (ts, _, alert_type, src, dst, role, h) in enumerate(raw, 1):
        alert_id = f"a{n:0{max(width, 6)}d}"
        alerts.append(Alert(alert_id, ts, alert_type, src, dst, {"role": role}))
        if role == "planted":
            related[h].append(alert_id)
        elif role == "late":
            late[h].append(alert_id)
    truth = [GroundTruth(f"scenario-{h + 1}", host, frozenset(related[h]), frozenset(late[h]))
             for h, host in enumerate(spec.hosts)]
    return alerts, truth


def write_dataset(out_dir: str | os.PathLike, alerts: list[Alert], truth: list[GroundTruth]) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"alerts": out / "alerts.csv", "truth": out / "truth.json"}
    paths["alerts"].write_text(alerts_to_csv(alerts), encoding="utf-8")
    paths["truth"].write_text(json.dumps([t.to_dict() for t in truth], indent=2) + "\n", encoding="utf-8")
    return paths
