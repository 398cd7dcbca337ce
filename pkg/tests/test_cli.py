import csv
import io
import json
import pathlib

import pytest
import tomli

from bubbly import cli
from bubbly.errors import ConfigInvalid

SCENARIOS = sorted((pathlib.Path(__file__).parent.parent / "scenarios").glob("*.toml"))


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


SAM = """model = "samuelson"
run = "steady"
[params]
a = 3.0
b = 1.0
beta = 0.5
G = 1.2
G_d = 1.0
D0 = 0.01
"""


def test_twelve_scenarios():
    assert len(SCENARIOS) == 12


@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
def test_scenario_runs_and_is_deterministic(path, capsys):
    run_kind = cli.load_config(str(path))["run"]
    code1, out1, err1 = run([run_kind, "--config", str(path)], capsys)
    code2, out2, _ = run([run_kind, "--config", str(path)], capsys)
    assert code1 == 0, err1
    assert out1 == out2
    json.loads(out1)


def test_samuelson_steady_report(tmp_path, capsys):
    code, out, _ = run(["steady", "--config", write(tmp_path, SAM)], capsys)
    assert code == 0
    rep = json.loads(out)["steady"]
    text = json.dumps(rep)
    assert "0.33333333333333" in text


def test_leverage_determinacy_cobb_douglas(capsys):
    path = [p for p in SCENARIOS if p.stem == "leverage_determinacy"][0]
    code, out, _ = run(["determinacy", "--config", str(path)], capsys)
    rep = json.loads(out)["determinacy"]
    assert code == 0
    assert rep["bubbly"]["verdict"]["classification"] == "LocallyDeterminate"


def test_phi_at_least_one_is_config_error(tmp_path, capsys):
    cfg = """model = "leverage"
run = "steady"
[params]
beta = 0.96
pi = 0.5
lambda = 2.5
delta = 0.1
G = 1.02
[params.production]
kind = "cobb_douglas"
alpha = 0.3
"""
    code, _, err = run(["steady", "--config", write(tmp_path, cfg)], capsys)
    assert code == 2
    assert "phi" in err and "< 1" in err


def test_unknown_keys_rejected(tmp_path, capsys):
    code, _, err = run(["steady", "--config", write(tmp_path, SAM + "gamma = 2.0\n")], capsys)
    assert code == 2 and "gamma" in err
    code, _, err = run(["steady", "--config", write(tmp_path, "colour = 1\n" + SAM)], capsys)
    assert code == 2 and "colour" in err


def test_unknown_model(tmp_path, capsys):
    code, _, _ = run(["steady", "--config", write(tmp_path, SAM.replace("samuelson", "diamond"))],
                     capsys)
    assert code == 2


def test_empty_grid():
    cfg = tomli.loads(SAM + '[sweep]\nparameter = "G_d"\ngrid = []\n')
    with pytest.raises(ConfigInvalid):
        cli.run_scenario(cfg, "sweep")
    cfg = tomli.loads(SAM + '[sweep]\nparameter = "G_d"\nstart = 1.0\nstop = 0.9\nstep = 0.05\n')
    with pytest.raises(ConfigInvalid):
        cli.run_scenario(cfg, "sweep")


def test_decimal_grid():
    assert cli.sweep_grid({"parameter": "x", "start": 0.7, "stop": 1.3, "step": 0.05}) == \
        [round(0.7 + 0.05 * i, 10) for i in range(13)]


def _sweep(name, capsys):
    path = [p for p in SCENARIOS if p.stem == name][0]
    code, out, _ = run(["sweep", "--config", str(path)], capsys)
    assert code == 0
    return json.loads(out)["sweep"]["rows"]


def test_dividend_growth_sweep_eliminates_on_open_interval(capsys):
    rows = _sweep("samuelson_sweep_gd", capsys)
    grid = [r["G_d"] for r in rows]
    assert grid == sorted(grid) and len(grid) == 13
    for r in rows:
        assert r["eliminated"] == (0.8 < r["G_d"] < 1.2), r["G_d"]
    by = {round(r["G_d"], 10): r for r in rows}
    assert not by[0.8]["eliminated"] and not by[1.2]["eliminated"]
    assert by[1.0]["classification"] == "LocallyDeterminate"
    assert by[0.75]["classification"] == "Indeterminate"


def test_eis_sweep_flips_once(capsys):
    rows = _sweep("tirole_sweep_eis", capsys)
    eps = [r["utility.eps"] for r in rows]
    assert eps[0] == pytest.approx(0.1) and eps[-1] == pytest.approx(2.0)
    verdicts = [r["determinacy_predicted"] for r in rows]
    flips = sum(a != b for a, b in zip(verdicts, verdicts[1:]))
    assert flips == 1
    i = verdicts.index(True)
    assert rows[i - 1]["utility.eps"] < rows[i]["eis_bound"] < rows[i]["utility.eps"]


def test_sweep_row_errors_recorded(tmp_path, capsys):
    cfg = SAM + '[sweep]\nparameter = "b"\ngrid = [1.0, -1.0, 1.5]\n'
    code, out, _ = run(["sweep", "--config", write(tmp_path, cfg)], capsys)
    rows = json.loads(out)["sweep"]["rows"]
    assert [r["b"] for r in rows] == [1.0, -1.0, 1.5]
    assert rows[0]["error"] is None and rows[1]["error"] is not None
    assert code == 2


def test_csv_and_plot_script(tmp_path, capsys):
    path = [p for p in SCENARIOS if p.stem == "samuelson_sweep_gd"][0]
    out = tmp_path / "s.csv"
    plot = tmp_path / "plot.py"
    code, _, _ = run(["sweep", "--config", str(path), "--format", "csv", "--out", str(out),
                      "--plot-script", str(plot)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 13 and "eliminated" in rows[0]
    assert float(rows[0]["G_d"]) == 0.7
    src = plot.read_text()
    assert str(out) in src
    compile(src, str(plot), "exec")


def test_path_csv(tmp_path, capsys):
    path = [p for p in SCENARIOS if p.stem == "samuelson_path"][0]
    code, out, _ = run(["path", "--config", str(path), "--format", "csv", "--horizon", "150"],
                       capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 151 and {"t", "P"} <= set(rows[0])
    # too short to reach the bubbly state within the path tolerance
    code, _, err = run(["path", "--config", str(path), "--horizon", "20"], capsys)
    assert code == 3 and "ShootingFailed" in err


def test_plot_script_needs_csv(tmp_path, capsys):
    code, _, _ = run(["steady", "--config", write(tmp_path, SAM),
                      "--plot-script", str(tmp_path / "p.py")], capsys)
    assert code == 2


def test_verify_failure_exit_code(capsys):
    path = [p for p in SCENARIOS if p.stem == "samuelson_verify"][0]
    code, out, _ = run(["verify", "--config", str(path), "--tol", "1e-16"], capsys)
    assert code == 4
    assert json.loads(out)["verify"]["all_passed"] is False


def test_reduced_form_determinacy_is_config_error(capsys):
    path = [p for p in SCENARIOS if p.stem == "kocherlakota_steady"][0]
    code, _, _ = run(["determinacy", "--config", str(path)], capsys)
    assert code == 2


def test_json_numbers_have_full_precision():
    text = cli.to_json({"x": 0.1, "y": float("nan"), "z": float("inf"), "n": [1 / 3]})
    d = json.loads(text)
    assert d["x"] == 0.1 and d["y"] is None and d["z"] == "Infinity"
    assert "0.10000000000000001" in text and "0.33333333333333331" in text


def test_timing_only_on_request(tmp_path, capsys):
    cfg = write(tmp_path, SAM)
    _, out, _ = run(["steady", "--config", cfg], capsys)
    assert "timing" not in out
    _, out, _ = run(["steady", "--config", cfg, "--timing"], capsys)
    assert "timing_seconds" in json.loads(out)
