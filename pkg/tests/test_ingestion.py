import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenario_forge.ingestion import (
    IngestPolicy,
    alerts_to_csv,
    classify_alerts,
    parse_alert_log,
)
from scenario_forge.errors import InputError, ParseError, UnknownAlertType

from conftest import load_packaged_taxonomy


def test_headerless_csv_line_maps_fields():
    [a] = parse_alert_log(b"1,952364000.5,Sadmind_Ping,202.77.162.213,172.16.112.10\n")
    assert a.id == "1"
    assert a.alert_type == "Sadmind_Ping"
    assert a.source_ip == "202.77.162.213"
    assert a.target_ip == "172.16.112.10"
    assert a.timestamp == 952364000.5


def test_header_csv_with_attributes():
    text = "id,timestamp,alert_type,src_ip,dst_ip,attrs\n7,10.25,Rsh,1.1.1.1,2.2.2.2,port=514;proto=tcp\n"
    [a] = parse_alert_log(text.encode())
    assert a.attributes == {"port": "514", "proto": "tcp"}


def test_empty_file_gives_no_alerts(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_bytes(b"")
    assert parse_alert_log(p) == []
    assert parse_alert_log(b"", "jsonl") == []


def _rows(n, bad_at=None):
    lines = ["id,timestamp,alert_type,src_ip,dst_ip"]
    for i in range(n):
        ts = "not-a-time" if i == bad_at else f"{1000 + i}.0"
        lines.append(f"{i},{ts},Rsh,1.1.1.1,10.0.0.{i % 200 + 1}")
    return ("\n".join(lines) + "\n").encode()


def test_one_bad_timestamp_lenient():
    errors = []
    alerts = parse_alert_log(_rows(100, bad_at=41), errors=errors)
    assert len(alerts) == 99
    assert len(errors) == 1
    assert errors[0].record == 42
    assert "timestamp" in str(errors[0])


def test_one_bad_timestamp_strict():
    with pytest.raises(ParseError, match="record 42"):
        parse_alert_log(_rows(100, bad_at=41), strict=True)


@pytest.mark.parametrize("line, fragment", [
    ("1,5.0,Rsh,1.1.1.1,300.1.1.1", "invalid IP"),
    ("1,5.0,Rsh,1.1.1.1", "expected at least"),
    ("1,-5,Rsh,1.1.1.1,2.2.2.2", "timestamp"),
])
def test_malformed_records(line, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse_alert_log(line.encode(), strict=True)


def test_missing_header_column():
    with pytest.raises(ParseError, match="missing required column"):
        parse_alert_log(b"id,timestamp,alert_type,dst_ip\n1,2,X,1.1.1.1\n")


def test_jsonl_format():
    recs = [
        {"id": "a", "ts": 1.5, "type": "Admind", "src": "1.1.1.1", "dst": "2.2.2.2", "attrs": {"k": 1}},
        {"id": "b", "ts": 2, "type": "Rsh", "src": "1.1.1.1", "dst": "2.2.2.2"},
    ]
    text = "\n".join(json.dumps(r) for r in recs) + "\n\n"
    alerts = parse_alert_log(io.BytesIO(text.encode()), "jsonl")
    assert [a.id for a in alerts] == ["a", "b"]
    assert alerts[0].attributes == {"k": "1"}
    errors = []
    assert parse_alert_log(b'{"id": "x"}\nnot json\n', "jsonl", errors=errors) == []
    assert len(errors) == 2


def test_duplicate_ids_and_dedup():
    line = b"1,5.0,Rsh,1.1.1.1,2.2.2.2\n"
    errors = []
    assert len(parse_alert_log(line * 3, errors=errors)) == 1
    assert len(errors) == 2
    errors.clear()
    assert len(parse_alert_log(line * 3, dedup_exact=True, errors=errors)) == 1
    assert errors == []


def test_unknown_format():
    with pytest.raises(InputError):
        parse_alert_log(b"", "xml")


def test_csv_round_trip():
    alerts = parse_alert_log(_rows(20))
    assert parse_alert_log(alerts_to_csv(alerts).encode()) == alerts


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(0, 2e9), st.sampled_from(["Rsh", "Admind", "Foo"]),
                          st.integers(1, 254)), max_size=30))
def test_parsing_is_deterministic(rows):
    text = "".join(f"{i},{ts!r},{t},1.1.1.1,10.0.0.{h}\n" for i, (ts, t, h) in enumerate(rows)).encode()
    assert parse_alert_log(text) == parse_alert_log(text)


def test_classify_darpa_types(darpa_taxonomy):
    alerts = parse_alert_log(b"1,1.0,Rsh,1.1.1.1,2.2.2.2\n2,2.0,Foo_Bar,1.1.1.1,2.2.2.2\n")
    out = classify_alerts(alerts, darpa_taxonomy, IngestPolicy("drop"))
    [(a, stage)] = out.classified
    assert darpa_taxonomy.stage_name(stage) == "Protocol Signature"
    assert [a.id for a in out.dropped] == ["2"]
    assert out.quarantined == []


def test_classify_quarantine_and_error(darpa_taxonomy):
    alerts = parse_alert_log(b"2,2.0,Foo_Bar,1.1.1.1,2.2.2.2\n")
    out = classify_alerts(alerts, darpa_taxonomy, IngestPolicy("quarantine"))
    assert out.classified == [] and out.dropped == []
    assert [a.alert_type for a in out.quarantined] == ["Foo_Bar"]
    with pytest.raises(UnknownAlertType):
        classify_alerts(alerts, darpa_taxonomy, IngestPolicy("error"))
    with pytest.raises(InputError):
        IngestPolicy("ignore")


@given(st.lists(st.sampled_from(["Rsh", "Admind", "Foo", "Bar", "Mstream_Zombie"]), max_size=40),
       st.sampled_from(["drop", "quarantine"]))
def test_classification_conserves_alerts(types, action):
    tax = load_packaged_taxonomy("darpa_taxonomy.json")
    text = "".join(f"{i},{i}.0,{t},1.1.1.1,2.2.2.2\n" for i, t in enumerate(types)).encode()
    alerts = parse_alert_log(text)
    out = classify_alerts(alerts, tax, IngestPolicy(action))
    assert len(out.classified) + len(out.dropped) + len(out.quarantined) == len(alerts)
