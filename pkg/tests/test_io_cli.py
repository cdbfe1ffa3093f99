import csv
import json

import numpy as np
import pytest

from chargeuq import io
from chargeuq.cli import main
from chargeuq.inputs import build_reference_space, restrict

SMALL_TOML = """
[space]
active = ["T_amb", "eps_p", "L_p"]

[protocol]
c_rate = 2.2
v_max = 4.1

[pce]
n_train = 24
degree = 1
n_surrogate_samples = 500
seed = 2

[solver]
rtol = 1e-6

[tune]
epsilon = 0.5
c_rates = [2.2, 2.0]
v_maxes = [4.1]
"""


@pytest.fixture
def small_toml(tmp_path):
    p = tmp_path / "cfg.toml"
    p.write_text(SMALL_TOML)
    return p


def test_toml_and_json_agree(small_toml, tmp_path):
    a = io.load_config(small_toml)
    j = tmp_path / "cfg.json"
    j.write_text(json.dumps(io.tomllib.loads(SMALL_TOML)))
    b = io.load_config(j)
    assert a.protocol == b.protocol and a.pce == b.pce and a.active == b.active
    cfg = a.campaign(seed=9, jobs=1)
    assert cfg.seed == 9 and cfg.subspace().names == ("T_amb", "L_p", "eps_p")
    assert a.tune.c_rates == (2.2, 2.0)


def test_space_from_file_and_collapse(tmp_path):
    sub = restrict(build_reference_space(), ["eps_p", "eps_n"])
    (tmp_path / "space.json").write_text(sub.to_json())
    cfg = io.parse_config({"space": {"file": "space.json", "collapse": True}}, tmp_path)
    assert cfg.space.names == ("eps_p", "eps_n")
    assert cfg.space.families == ("legendre", "legendre")


def test_config_rejects_unknown_keys(tmp_path):
    with pytest.raises(ValueError):
        io.parse_config({"protocl": {}})
    with pytest.raises(ValueError):
        io.parse_config({"pce": {"n_trian": 3}})
    with pytest.raises(ValueError):
        io.parse_config({"protocol": {"cc_rate": 3}})
    bad = tmp_path / "c.yaml"
    bad.write_text("x: 1")
    with pytest.raises(ValueError):
        io.load_config(bad)


def test_cli_simulate(tmp_path, capsys):
    assert main(["simulate", "--out-dir", str(tmp_path), "--c-rate", "2.0", "--set", "T_amb=299"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["termination"] == "soc_reached"
    rows = list(csv.DictReader(open(tmp_path / "simulation.csv")))
    assert rows[0]["temperature"] == "299.0" and len(rows) == 151


def test_cli_campaign_sobol_tune(small_toml, tmp_path, capsys):
    out = tmp_path / "camp"
    assert main(["campaign", "run", "--config", str(small_toml), "--out-dir", str(out)]) == 0
    for name in ("voltage.csv", "temperature.csv", "eta_pl.csv", "sobol.csv", "summary.json",
                 "models.json", "samples.csv", "space.json"):
        assert (out / name).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["seed"] == 2 and "violation" in summary and "screened" in summary
    before = (out / "sobol.csv").read_text()
    assert main(["sobol", str(out), "--out-dir", str(tmp_path / "s")]) == 0
    again = io.read_sobol_csv(tmp_path / "s" / "sobol.csv")
    orig = io.read_sobol_csv(out / "sobol.csv")
    for q in orig:
        np.testing.assert_allclose(again[q][2], orig[q][2], rtol=1e-12)
    assert before.splitlines()[0] == "qoi,time,T_amb,L_p,eps_p"

    assert main(["tune", "--config", str(small_toml), "--out-dir", str(tmp_path / "t")]) == 0
    doc = json.loads((tmp_path / "t" / "tune.json").read_text())
    assert doc["found"] and doc["selected"]["c_rate"] == 2.2
    assert "selected 2.2C" in capsys.readouterr().out


def test_cli_mc_and_compare(small_toml, tmp_path):
    assert main(["mc", "run", "--config", str(small_toml), "--n-runs", "100", "--screened",
                 "--out-dir", str(tmp_path)]) == 0
    head = (tmp_path / "mc_temperature.csv").read_text().splitlines()[0]
    assert head == "time,ci_lo,median,ci_hi"
    assert main(["compare", "--config", str(small_toml), "--n-runs", "100", "--out-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "compare.json").read_text())
    assert rep["mc_runs"] == 100 and rep["ratio"] > 0


def test_cli_reports_errors(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"pce": {"n_train": 5, "degree": 2}}))
    assert main(["campaign", "run", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err
