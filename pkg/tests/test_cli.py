import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from delaylab.cli import dumps, main
from delaylab.core import HistoryFunction


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def run_json(*argv):
    code, out, err = run(*argv)
    assert code == 0, err
    return json.loads(out)


def read_csv(text):
    lines = text.strip().splitlines()
    return lines[0].split(","), np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def test_dumps_full_precision():
    assert json.loads(dumps({"x": 0.1 + 0.2}))["x"] == 0.1 + 0.2
    assert dumps(math.nan) == "null"
    assert json.loads(dumps({"a": [1.0, 2.5], "b": {}, "c": [], "d": True}))["d"] is True


def test_simulate_hutchinson(tmp_path):
    code, out, err = run("simulate", "--model", "hutchinson", "--param", "gamma=1",
                         "--param", "k=1", "--param", "tau=1.4", "--t-end", "100",
                         "--step", "1e-3", "--output-step", "0.5")
    assert code == 0, err
    header, rows = read_csv(out)
    assert header == ["t", "x1"]
    assert rows[0, 0] == 0.0 and rows[-1, 0] == 100.0
    assert abs(rows[-1, 1] - 1.0) < 1e-3
    path = tmp_path / "traj.csv"
    assert run("simulate", "--model", "linear_scalar", "--param", "a=1", "--param", "b=0.5",
               "--param", "tau=1", "--t-end", "2", "--step", "0.1", "--csv", str(path))[0] == 0
    assert path.read_text().startswith("t,x1\n")


def test_simulate_model_file(tmp_path):
    doc = {"schema_version": 1,
           "model": {"type": "linear", "A0": [[-1.0]], "terms": [{"tau": 1.0, "A": [[1.0]]}]},
           "history": HistoryFunction.polynomial([1.0, -2.0, 1.0], -1.0).to_dict(),
           "options": {"step": 1e-3, "t_end": 1.0}}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    code, out, err = run("simulate", "--model-file", str(path))
    assert code == 0, err
    _, rows = read_csv(out)
    assert rows[-1, 1] == pytest.approx(5 - 9 / math.e, abs=1e-9)


def test_hopf():
    d = run_json("hopf", "--a", "1", "--b", "2")
    assert d["tau0"] == pytest.approx(1.20920, abs=1e-5)
    assert d["period"] == pytest.approx(3.6276, abs=1e-4)
    assert len(d["family"]) == 4


def test_hopf_no_root_is_config_error():
    code, _, err = run("hopf", "--a", "2", "--b", "1")
    assert code == 2 and "b" in err


def test_oscillation():
    d = run_json("oscillation", "--a", "1", "--tau", "0.5")
    assert d["tag"] == "Oscillatory"
    assert d["justification"]["parameters"]["a_e_tau"] == pytest.approx(1.359, abs=1e-3)
    assert d["justification"]["criterion"] == "linear_oscillation_proposition"


def test_oscillation_empirical():
    d = run_json("oscillation", "--a", "1", "--tau", "0.2", "--empirical")
    assert d["tag"] == "Nonoscillatory"
    assert d["empirical"]["tag"] == "Nonoscillatory"


def test_analyze_prey_predator():
    d = run_json("analyze", "--model", "prey_predator", "--param", "gamma=1", "--param", "k=2",
                 "--param", "a=1", "--param", "b=1", "--param", "c=1", "--param", "m=0.5",
                 "--param", "tau=1")
    assert d["verdict"]["tag"] == "LocallyStable"
    assert d["max_real_part"] < 0
    assert d["neutral"] is False


def test_analyze_neutral_flag():
    d = run_json("analyze", "--model", "neutral_example", "--param", "tau=0.1",
                 "--re-min", "-1", "--re-max", "8", "--im-max", "400")
    assert d["neutral"] is True
    assert d["max_real_part"] > 0


def test_sweep(tmp_path):
    path = tmp_path / "s.csv"
    d = run_json("sweep", "--a", "1", "--b", "2", "--tau-max", "3", "--csv", str(path))
    assert len(d["events"]) == 1
    assert d["events"][0]["tau_star"] == pytest.approx(1.2092, abs=1e-4)
    header, rows = read_csv(path.read_text())
    assert header == ["tau", "max_real_part"] and rows.shape == (61, 2)


def test_sweep_cooperative_has_no_switch():
    d = run_json("sweep", "--model", "cooperative", "--param", "r1=1", "--param", "r2=1",
                 "--param", "k1=1", "--param", "k2=2", "--param", "alpha1=2",
                 "--param", "alpha2=3", "--param", "tau1=0", "--param", "tau2=0",
                 "--tau-max", "5", "--grid", "21")
    assert d["events"] == []


def test_reduce_roundtrip(tmp_path):
    doc = {"schema_version": 1,
           "model": {"type": "lv_distributed", "b": [3.0], "A": [[-2.0]], "B": [[-1.0]],
                     "alpha": 1.0},
           "history": {"constant": [0.5], "span_start": -1.0},
           "options": {"step": 0.01, "t_end": 30}}
    src, dst = tmp_path / "lv.json", tmp_path / "red.json"
    src.write_text(json.dumps(doc))
    assert run("reduce", "--model-file", str(src), "-o", str(dst))[0] == 0
    red = json.loads(dst.read_text())
    assert red["model"]["type"] == "lv_reduced"
    assert red["steady_state"] == [1.0, 1.0]
    assert red["equations"]["dimension"] == 2
    code, out, err = run("simulate", "--model-file", str(dst))
    assert code == 0, err
    _, rows = read_csv(out)
    assert abs(rows[-1, 1] - 1.0) < 1e-6


@pytest.mark.parametrize("argv,tag,crit", [
    (("hutchinson", "--gamma", "2", "--tau", "3/4"), "GloballyStable", "hutchinson_3/2"),
    (("hutchinson", "--gamma", "1", "--tau", "1.52"), "GloballyStable", "hutchinson_37/24"),
    (("stepan", "--a0", "2", "--a1", "3", "--b", "1", "--delay", "1"), "AbsolutelyStableInDelays",
     "stepan_discrete/A"),
    (("stepan", "--a0", "2", "--a1", "1", "--theta", "-0.5", "-1.5", "--weight", "0.4", "0.4"),
     "AbsolutelyStableInDelays", "stepan_distributed/A"),
    (("cooperative", "--r", "1", "1", "--k", "1", "2", "--alpha", "2", "3"),
     "AbsolutelyStableInDelays", "cooperative_absolute"),
    (("routh", "--p", "-1", "--q", "1"), "Unstable", "routh_hurwitz_2"),
    (("competition", "--param", "beta1=2", "--param", "beta2=2", "--param", "c11=3",
      "--param", "c12=1", "--param", "c21=1", "--param", "c22=3"),
     "AbsolutelyStableInDelays", "competition_delay_independent"),
])
def test_check(argv, tag, crit):
    d = run_json("check", *argv)
    assert d["tag"] == tag
    assert d["justification"]["criterion"] == crit


@pytest.mark.parametrize("argv", [
    ("simulate", "--model", "nope"),
    ("simulate", "--model", "hutchinson", "--param", "gamma=1"),
    ("simulate", "--model", "hutchinson", "--param", "gamma=1", "--param", "k=1",
     "--param", "tau=0.5", "--t-end", "1", "--step", "1"),
    ("simulate", "--model-file", "/nonexistent/model.json"),
    ("check", "routh", "--p", "1"),
    ("hopf", "--a", "1"),
    ("frobnicate",),
    ("simulate", "--bogus"),
])
def test_configuration_errors(argv):
    code, out, err = run(*argv)
    assert code == 2
    assert out == ""
    assert err.startswith("delaylab: configuration error")


def test_schema_mismatch(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"schema_version": 99, "model": "hutchinson"}))
    code, _, err = run("simulate", "--model-file", str(path))
    assert code == 2 and "schema_version" in err


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blowup_is_numeric_failure(tmp_path):
    doc = {"schema_version": 1,
           "model": {"type": "linear", "A0": [[60.0]], "terms": [{"tau": 0.5, "A": [[0.0]]}]},
           "options": {"step": 0.01, "t_end": 20.0}}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    code, _, err = run("simulate", "--model-file", str(path))
    assert code == 3 and "numeric failure" in err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "delaylab.cli", "hopf", "--a", "0", "--b", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["tau0"] == pytest.approx(math.pi / 2)
