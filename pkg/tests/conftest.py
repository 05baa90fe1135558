import json
from importlib import resources
from pathlib import Path

import pytest

from scenario_forge.alert_model import Alert, ClassifiedAlert, HyperAlertGroup, validate_taxonomy
from scenario_forge.mapping import filter_late_alerts

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_addoption(parser):
    parser.addoption(
        "--dataset-dir",
        default=None,
        help="directory with converted DARPA 2000 / ISCX 2012 alert logs for dataset-gated tests",
    )


def load_packaged_taxonomy(name):
    text = resources.files("scenario_forge").joinpath("data", name).read_text(encoding="utf-8")
    return validate_taxonomy(json.loads(text))


@pytest.fixture
def darpa_taxonomy():
    return load_packaged_taxonomy("darpa_taxonomy.json")


@pytest.fixture
def iscx_taxonomy():
    return load_packaged_taxonomy("iscx_taxonomy.json")


@pytest.fixture
def four_stage_taxonomy():
    return validate_taxonomy({
        "stages": ["probe", "access", "protocol", "ddos"],
        "mapping": {"P1": "probe", "P2": "probe", "A1": "access", "A2": "access",
                    "R1": "protocol", "R2": "protocol", "D1": "ddos", "D2": "ddos"},
    })


def alert(id, ts, type, dst, src="10.0.0.1"):
    return Alert(str(id), ts, type, src, dst)


def candidate_from(rows, taxonomy, target="172.16.112.10"):
    """Build a candidate from (timestamp, type) rows, dropping late alerts."""
    members = tuple(
        ClassifiedAlert(alert(f"c{i}", ts, t, target), taxonomy.stage_of(t))
        for i, (ts, t) in enumerate(rows)
    )
    group = HyperAlertGroup(target, members)
    return filter_late_alerts(group, taxonomy.with_required([max(group.stages_present)]))


@pytest.fixture
def locke_candidate(darpa_taxonomy):
    """Alert amounts of the locke host after late-alert filtering, in stage order."""
    rows = [(0.0, "Sadmind_Ping")]
    rows += [(100.0 + 10 * i, "Sadmind_Amslverify_Overflow") for i in range(4)]
    rows += [(200.0 + 10 * i, "Admind") for i in range(5)]
    rows += [(400.0, "Rsh"), (600.0, "Mstream_Zombie")]
    return candidate_from(rows, darpa_taxonomy)


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "_acceptance_results", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
