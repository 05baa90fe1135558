"""Alert log parsing and stage classification.

Two input formats are understood:

* CSV with columns ``id,timestamp,alert_type,src_ip,dst_ip[,attrs]`` where
  ``attrs`` is ``k=v;k=v``. The header row is optional.
* JSON lines with keys ``id``, ``ts``, ``type``, ``src``, ``dst`` and an
  optional ``attrs`` object.

Timestamps are decimal epoch seconds.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from enum import Enum
from typing import IO, Any, NamedTuple, Union

from .alert_model import Alert, ClassifiedAlert, StageTaxonomy
from .errors import InputError, ParseError, UnknownAlertType

log = logging.getLogger(__name__)

CSV_COLUMNS = ("id", "timestamp", "alert_type", "src_ip", "dst_ip")
FORMATS = ("csv", "jsonl")

Source = Union[str, os.PathLike, bytes, IO[bytes], IO[str]]


class UnknownTypeAction(str, Enum):
    DROP = "drop"
    ERROR = "error"
    QUARANTINE = "quarantine"


@dataclass(frozen=True)
class IngestPolicy:
    unknown_type_action: UnknownTypeAction = UnknownTypeAction.DROP
    dedup_exact: bool = False

    def __post_init__(self) -> None:
        try:
            action = UnknownTypeAction(self.unknown_type_action)
        except ValueError:
            raise InputError(
                f"unknown_type_action must be one of drop/error/quarantine, "
                f"got {self.unknown_type_action!r}"
            ) from None
        object.__setattr__(self, "unknown_type_action", action)


class Classification(NamedTuple):
    classified: list[ClassifiedAlert]
    dropped: list[Alert]
    quarantined: list[Alert]


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read().decode("utf-8")
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _parse_attrs(text: str) -> dict[str, str]:
    attrs = {}
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, sep, value = chunk.partition("=")
        if not sep:
            raise ValueError(f"attribute {chunk!r} is not k=v")
        attrs[key.strip()] = value.strip()
    return attrs


def _parse_timestamp(value: Any) -> float:
    if isinstance(value, bool):
        raise ValueError(f"malformed timestamp {value!r}")
    try:
        ts = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"malformed timestamp {value!r}") from None
    if not math.isfinite(ts) or ts < 0:
        raise ValueError(f"malformed timestamp {value!r}")
    return ts


def _make_alert(id_, ts, alert_type, src, dst, attrs) -> Alert:
    if id_ is None or str(id_).strip() == "":
        raise ValueError("missing id")
    if alert_type is None or str(alert_type).strip() == "":
        raise ValueError("missing alert type")
    return Alert(str(id_).strip(), _parse_timestamp(ts), str(alert_type).strip(),
                 src, dst, attrs)


def _csv_records(text: str) -> Iterator[tuple[int, str, Alert]]:
    lines = text.splitlines()
    rows = csv.reader(lines)
    header = None
    record = 0
    for line, row in zip(lines, rows):
        if not row or all(not cell.strip() for cell in row):
            continue
        if header is None and record == 0 and row[0].strip().lower() == "id":
            header = [c.strip().lower() for c in row]
            missing = [c for c in CSV_COLUMNS if c not in header]
            if missing:
                raise ParseError(f"missing required column(s) {missing}", record=0)
            continue
        record += 1
        try:
            if header is not None:
                if len(row) > len(header):
                    raise ValueError(f"{len(row)} fields but header has {len(header)}")
                cells = dict(zip(header, (c.strip() for c in row)))
                for col in CSV_COLUMNS:
                    if not cells.get(col):
                        raise ValueError(f"missing required column {col!r}")
                attr_text = cells.get("attrs", cells.get("attributes", ""))
                fields = [cells[c] for c in CSV_COLUMNS]
            else:
                if len(row) < len(CSV_COLUMNS):
                    raise ValueError(f"expected at least {len(CSV_COLUMNS)} fields, got {len(row)}")
                fields = [c.strip() for c in row[:5]]
                attr_text = ";".join(row[5:])
            alert = _make_alert(*fields, _parse_attrs(attr_text))
        except ValueError as exc:
            yield record, line, ParseError(str(exc), record=record)
            continue
        yield record, line, alert


def _jsonl_records(text: str) -> Iterator[tuple[int, str, Alert]]:
    record = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        record += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            yield record, line, ParseError(f"invalid JSON: {exc.msg}", record=record)
            continue
        try:
            if not isinstance(obj, dict):
                raise ValueError("record is not a JSON object")
            missing = [k for k in ("id", "ts", "type", "src", "dst") if k not in obj]
            if missing:
                raise ValueError(f"missing required field(s) {missing}")
            attrs = obj.get("attrs") or {}
            if not isinstance(attrs, dict):
                raise ValueError("'attrs' must be an object")
            attrs = {str(k): str(v) for k, v in attrs.items()}
            alert = _make_alert(obj["id"], obj["ts"], obj["type"], obj["src"], obj["dst"], attrs)
        except ValueError as exc:
            yield record, line, ParseError(str(exc), record=record)
            continue
        yield record, line, alert


def parse_alert_log(
    source: Source,
    format: str = "csv",
    *,
    strict: bool = False,
    dedup_exact: bool = False,
    errors: list[ParseError] | None = None,
) -> list[Alert]:
    """Parse an alert log into ``Alert`` records, preserving input order.

    With ``strict`` the first bad record raises ``ParseError``; otherwise bad
    records are skipped, logged, and appended to ``errors`` if given.
    ``dedup_exact`` drops records whose raw text repeats an earlier one.
    """
    if format not in FORMATS:
        raise InputError(f"unknown alert log format {format!r}; expected one of {FORMATS}")
    text = _read_text(source)
    records = _csv_records(text) if format == "csv" else _jsonl_records(text)

    alerts: list[Alert] = []
    seen_lines: set[str] = set()
    seen_ids: set[str] = set()
    for record, line, item in records:
        if dedup_exact:
            if line in seen_lines:
                continue
            seen_lines.add(line)
        if isinstance(item, Alert) and item.id in seen_ids:
            item = ParseError(f"duplicate alert id {item.id!r}", record=record)
        if isinstance(item, ParseError):
            if strict:
                raise item
            log.warning("skipping %s", item)
            if errors is not None:
                errors.append(item)
            continue
        seen_ids.add(item.id)
        alerts.append(item)
    return alerts


def classify_alerts(
    alerts: Iterable[Alert],
    taxonomy: StageTaxonomy,
    policy: IngestPolicy | None = None,
) -> Classification:
    """Pair every alert with its stage index; unknown types follow ``policy``."""
    policy = policy or IngestPolicy()
    out = Classification([], [], [])
    for alert in alerts:
        stage = taxonomy.stage_of(alert.alert_type)
        if stage is not None:
            out.classified.append(ClassifiedAlert(alert, stage))
        elif policy.unknown_type_action is UnknownTypeAction.ERROR:
            raise UnknownAlertType(f"alert {alert.id}: type {alert.alert_type!r} is not in the taxonomy")
        elif policy.unknown_type_action is UnknownTypeAction.QUARANTINE:
            out.quarantined.append(alert)
        else:
            out.dropped.append(alert)
    if out.dropped:
        log.info("dropped %d alert(s) of unknown type", len(out.dropped))
    return out


def write_alerts_csv(alerts: Iterable[Alert], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(list(CSV_COLUMNS) + ["attrs"])
    for a in alerts:
        attrs = ";".join(f"{k}={v}" for k, v in sorted(a.attributes.items()))
        writer.writerow([a.id, f"{a.timestamp:.3f}", a.alert_type, a.source_ip, a.target_ip, attrs])


def alerts_to_csv(alerts: Iterable[Alert]) -> str:
    buf = io.StringIO()
    write_alerts_csv(alerts, buf)
    return buf.getvalue()
