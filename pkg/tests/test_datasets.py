"""Published correlation tables as fixtures, plus checks against the real alert logs.

The dataset checks need converted alert logs (CSV in the package's alert format)
and run only with ``--dataset-dir DIR``. Expected files: ``lldos1.csv``,
``lldos2.csv`` and ``iscx2012.csv``.
"""

from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from conftest import FIXTURES, candidate_from, load_packaged_taxonomy
from scenario_forge.correlation import build_scenario_graph, matrix_from_csv
from scenario_forge.ingestion import parse_alert_log
from scenario_forge.pipeline import run

# Published per-type amounts after late-alert filtering.
FILTERED = {
    "172.16.112.50": {"FTP_Syst": 1, "Sadmind_Ping": 1, "Admind": 5, "Email_Ehlo": 10, "Email_Almail_Overflow": 2,
                      "Sadmind_Amslverify_Overflow": 4, "FTP_Pass": 2, "FTP_User": 2, "Rsh": 1,
                      "SSH_Detected": 1, "TelnetTerminaltype": 23, "Mstream_Zombie": 1},
    "172.16.112.10": {"Sadmind_Ping": 1, "Sadmind_Amslverify_Overflow": 4, "Admind": 5, "Rsh": 1,
                      "Mstream_Zombie": 1},
    "172.16.115.20": {"Admind": 2, "Sadmind_Amslverify_Overflow": 2, "FTP_Pass": 1, "FTP_Put": 1, "FTP_User": 1,
                      "TelnetTerminaltype": 3, "TelnetEnvAll": 1, "TelnetXdisplay": 1, "Mstream_Zombie": 2},
    "192.168.5.122": {"ICMP test": 3, "PROTOCOL-DNS potential dns cache poisoning attempt": 1356,
                      "PROTOCOL-DNS TMG Firewall Client entry exploit attempt": 1333,
                      "INFO SUSPICIOUS SMTP EXE - EXE SMTP Attachment": 1, "(http_inspect)": 1},
    "192.168.2.107": {"ICMP test": 3356, "ET POLICY PE EXE or DLL Windows file download HTTP": 1,
                      "ET INFO Executable Retrieved With Minimal HTTP Headers": 2, "(spp_frag3) Tiny fragment": 1},
}

# Published per-type amounts before filtering.
GROUPED = {
    "172.16.112.50": {"FTP_Syst": 2, "Sadmind_Ping": 1, "Admind": 5, "Email_Ehlo": 17, "Email_Almail_Overflow": 2,
                      "Sadmind_Amslverify_Overflow": 4, "FTP_Pass": 3, "FTP_User": 3, "Rsh": 1,
                      "SSH_Detected": 2, "TelnetTerminaltype": 31, "Mstream_Zombie": 1},
    "172.16.112.10": FILTERED["172.16.112.10"],
    "172.16.115.20": {"FTP_Syst": 1, "Admind": 2, "Sadmind_Amslverify_Overflow": 2, "FTP_Pass": 2, "FTP_Put": 1,
                      "FTP_User": 2, "TelnetTerminaltype": 4, "TelnetEnvAll": 1, "TelnetXdisplay": 1,
                      "Mstream_Zombie": 2},
    "192.168.5.122": {"ICMP test": 103, "PROTOCOL-DNS potential dns cache poisoning attempt": 7622,
                      "ET SCAN Potential SSH Scan": 2, "ET SCAN LibSSH Based Frequent SSH Connections": 8,
                      "PROTOCOL-DNS TMG Firewall Client entry exploit attempt": 7444, "FTP_TELNETET": 3526,
                      "INFO SUSPICIOUS SMTP EXE - EXE SMTP Attachment": 2, "(http_inspect)": 1},
    "192.168.2.107": FILTERED["192.168.2.107"],
}

MATRICES = {
    "172.16.112.10": ("lldos1_locke_matrix.csv", "darpa_taxonomy.json"),
    "172.16.112.50": ("lldos1_pascal_matrix.csv", "darpa_taxonomy.json"),
    "172.16.115.20": ("lldos2_mill_matrix.csv", "darpa_taxonomy.json"),
    "192.168.5.122": ("iscx_192.168.5.122_matrix.csv", "iscx_taxonomy.json"),
    "192.168.2.107": ("iscx_192.168.2.107_matrix.csv", "iscx_taxonomy.json"),
}


def _stand_in(ip, taxonomy):
    """Candidate with the published per-type amounts, stage by stage in time."""
    rows = []
    ordered = sorted(FILTERED[ip], key=taxonomy.stage_of)
    for k, t in enumerate(ordered):
        rows += [(1000.0 * taxonomy.stage_of(t) + k + j * 1e-3, t) for j in range(FILTERED[ip][t])]
    return candidate_from(rows, taxonomy, target=ip)


@pytest.mark.parametrize("ip", sorted(MATRICES))
def test_published_matrix_gives_dag(ip):
    name, tax_name = MATRICES[ip]
    taxonomy = load_packaged_taxonomy(tax_name)
    m = matrix_from_csv((FIXTURES / name).read_text())
    assert set(m.types) == set(FILTERED[ip])
    assert np.array_equal(m.entries, m.entries.T)
    g = build_scenario_graph(_stand_in(ip, taxonomy), m, 0.5)
    assert len(g.topological_order()) == len(g.nodes)
    assert {n.alert_type: n.count for n in g.nodes} == FILTERED[ip]
    assert g.self_loops == {t for t, n in FILTERED[ip].items() if n >= 2}


def test_pascal_weak_ssh_edges():
    taxonomy = load_packaged_taxonomy("darpa_taxonomy.json")
    m = matrix_from_csv((FIXTURES / "lldos1_pascal_matrix.csv").read_text())
    g = build_scenario_graph(_stand_in("172.16.112.50", taxonomy), m, 0.5)
    weak = [e for e in g.edges if "SSH_Detected" in (e.source, e.target)]
    strong = [e for e in g.edges if "SSH_Detected" not in (e.source, e.target)]
    assert len(weak) < len(strong)


def test_mill_all_strong():
    taxonomy = load_packaged_taxonomy("darpa_taxonomy.json")
    m = matrix_from_csv((FIXTURES / "lldos2_mill_matrix.csv").read_text())
    off = m.entries[~np.eye(len(m.types), dtype=bool)]
    g = build_scenario_graph(_stand_in("172.16.115.20", taxonomy), m, 0.5, edge_mode="any-forward")
    assert len(g.edges) == sum(1 for a in g.nodes for b in g.nodes if a.stage < b.stage
                               and abs(m.r(a.alert_type, b.alert_type)) >= 0.5)
    assert np.all(np.abs(off) >= 0.5)


# -- dataset-gated ------------------------------------------------------------------

@pytest.fixture
def dataset_dir(request):
    path = request.config.getoption("--dataset-dir")
    if not path:
        pytest.skip("needs --dataset-dir with converted DARPA 2000 / ISCX 2012 alert logs")
    return Path(path)


def _load(dataset_dir, name):
    p = dataset_dir / name
    if not p.is_file():
        pytest.skip(f"{p} not present")
    return parse_alert_log(p)


@pytest.mark.parametrize("log, tax_name, required, groups, candidates", [
    ("lldos1.csv", "darpa_taxonomy.json", None, 33, ["172.16.112.10", "172.16.112.50"]),
    ("lldos2.csv", "darpa_taxonomy.json", [2, 3, 4], 27, ["172.16.115.20"]),
    ("iscx2012.csv", "iscx_taxonomy.json", [1, 3, 4, 5], 363, ["192.168.2.107", "192.168.5.122"]),
])
def test_dataset_groups_and_amounts(dataset_dir, log, tax_name, required, groups, candidates):
    taxonomy = load_packaged_taxonomy(tax_name)
    if required:
        taxonomy = taxonomy.with_required(required)
    result = run(_load(dataset_dir, log), taxonomy)
    assert len(result.groups) == groups
    assert sorted(c.target_ip for c in result.candidates) == candidates
    by_ip = {g.target_ip: g for g in result.groups}
    for c in result.candidates:
        assert Counter(a.alert_type for a in by_ip[c.target_ip].alerts) == GROUPED[c.target_ip]
        assert Counter(a.alert_type for a in c.alerts) == FILTERED[c.target_ip]
