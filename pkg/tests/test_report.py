import json

from conftest import FIXTURES
from scenario_forge.cli import main
from scenario_forge.correlation import build_scenario_graph, matrix_from_csv
from scenario_forge.report import plot_matrix, plot_scenario

PNG = b"\x89PNG\r\n\x1a\n"


def test_figures_written(tmp_path, locke_candidate, darpa_taxonomy):
    m = matrix_from_csv((FIXTURES / "lldos1_locke_matrix.csv").read_text())
    g = build_scenario_graph(locke_candidate, m, 0.5)
    plot_matrix(m, tmp_path / "m.png", title="locke")
    plot_scenario(g, tmp_path / "g.png", darpa_taxonomy)
    for name in ("m.png", "g.png"):
        data = (tmp_path / name).read_bytes()
        assert data.startswith(PNG) and len(data) > 1000


def test_figures_are_reproducible(tmp_path, locke_candidate, darpa_taxonomy):
    m = matrix_from_csv((FIXTURES / "lldos1_locke_matrix.csv").read_text())
    plot_matrix(m, tmp_path / "a.png")
    plot_matrix(m, tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_cli_figures_flag(tmp_path, four_stage_taxonomy):
    (tmp_path / "tax.json").write_text(json.dumps(four_stage_taxonomy.to_dict()))
    spec = {"hosts": ["10.1.0.1"], "seed": 1, "stage_plan": {
        "probe": [{"alert_type": "P1", "count": 6}], "access": [{"alert_type": "A1", "count": 6}],
        "protocol": [{"alert_type": "R1", "count": 6}], "ddos": [{"alert_type": "D1", "count": 6}]}}
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    assert main(["synth", "--spec", str(tmp_path / "spec.json"), "--taxonomy", str(tmp_path / "tax.json"),
                 "--out", str(tmp_path / "d")]) == 0
    assert main(["all", "--alerts", str(tmp_path / "d" / "alerts.csv"), "--taxonomy", str(tmp_path / "tax.json"),
                 "--out", str(tmp_path / "o"), "--figures"]) == 0
    for name in ("matrix_10.1.0.1.png", "scenario_10.1.0.1.png"):
        assert (tmp_path / "o" / name).read_bytes().startswith(PNG)
