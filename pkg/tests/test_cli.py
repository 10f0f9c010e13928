import csv
import io
import json

import numpy as np
import pytest

from hormander.cli import default_config_path, main
from hormander.harness import SUITES, ExperimentConfig
from hormander.sampled import GridFunction, load_csv, save_csv

BUMP = '{"kind": "bump", "params": {"center": 1.0, "radius": 2.0}}'


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def bump_csv(tmp_path):
    from hormander.sampled import generate

    p = tmp_path / "f.csv"
    save_csv(generate("bump", {"center": 1.0, "radius": 2.0}, 16.0, 256), p)
    return p


def test_signed_option_values(capsys):
    code, out, _ = run(capsys, "young", "evaluate", "--phi", '{"variant": "linear"}', "--t", "-0.0,2")
    assert code == 0 and json.loads(out)["values"][1]["value"] == 2.0


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys)[0] == 2
    assert run(capsys, "young", "evaluate")[0] == 2  # --phi missing
    assert run(capsys, "--help")[0] == 0


def test_young(capsys):
    code, out, _ = run(capsys, "young", "evaluate", "--phi", '{"variant": "power", "r": 2}', "--t", "1,3")
    assert code == 0
    assert [r["value"] for r in json.loads(out)["values"]] == [1.0, 9.0]
    code, out, _ = run(capsys, "young", "invert", "--phi", '{"variant": "power", "r": 2}', "--t", "9", "--format", "csv")
    assert code == 0 and list(csv.DictReader(io.StringIO(out)))[0]["value"] == "3.0"
    code, out, _ = run(capsys, "young", "complement", "--phi", '{"variant": "power", "r": 2}')
    assert code == 0 and "function" in json.loads(out)


def test_lux(capsys, bump_csv):
    code, out, _ = run(capsys, "lux", str(bump_csv), "--phi", '{"variant": "linear"}', "--interval", "-1,3")
    assert code == 0
    d = json.loads(out)
    f = load_csv(bump_csv)
    from hormander.sampled import Interval

    assert d["value"] == pytest.approx(f.abs().average(Interval.from_endpoints(-1.0, 3.0)), rel=1e-10)


def test_lux_needs_input(capsys):
    code, _, err = run(capsys, "lux", "--phi", '{"variant": "linear"}')
    assert code == 2 and "error" in err


def test_bad_csv_is_a_usage_error(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,value\n0.5,oops\n")
    code, _, err = run(capsys, "maximal", str(p))
    assert code == 2 and "line 2" in err


@pytest.mark.parametrize(
    "extra",
    [[], ["--kind", "iterated", "--k", "2"], ["--kind", "orlicz", "--phi", '{"variant": "powerlog", "r": 1, "beta": 1}'],
     ["--kind", "fractional", "--phi", '{"variant": "linear"}'], ["--kind", "sharp"], ["--kind", "sharp-delta"]],
)
def test_maximal(capsys, tmp_path, bump_csv, extra):
    code, _, _ = run(capsys, "maximal", str(bump_csv), "--out", str(tmp_path / "o"), *extra)
    assert code == 0
    (out,) = (tmp_path / "o").glob("maximal_*.csv")
    g = load_csv(out)
    assert g.N == 256 and np.all(g.samples >= 0)


def test_maximal_generated_to_stdout(capsys):
    code, out, _ = run(capsys, "maximal", "--generate", BUMP, "--grid", "8,64")
    assert code == 0
    assert out.splitlines()[0] == "x,value" and len(out.splitlines()) == 65


@pytest.mark.parametrize("constant", ["ap", "a1", "apq", "bmo"])
def test_weights(capsys, constant):
    code, out, _ = run(capsys, "weights", "--generate", '{"kind": "power", "params": {"a": 0.5}}',
                       "--grid", "16,256", "--constant", constant)
    assert code == 0
    d = json.loads(out)
    assert d["kind"] == constant and d["constant"] > 0


def test_weights_rejects_nonpositive(capsys, tmp_path):
    p = tmp_path / "w.csv"
    save_csv(GridFunction(1.0, np.array([1.0, 0.0, 1.0, 1.0])), p)
    assert run(capsys, "weights", str(p))[0] == 2


@pytest.mark.parametrize(
    "query",
    [
        {"query": "dagger", "phi": {"variant": "exppower", "gamma": 1.0, "offset": 1}, "x": 0.2, "R": 1.0, "m_max": 30},
        {"query": "plain", "phi": {"variant": "exppower", "gamma": 1.0, "offset": 1}, "levels": [-10, 10]},
        {"query": "prop3", "phi": {"variant": "linear"}},
        {"query": "s-alpha", "phi": {"variant": "linear"}, "alpha": 0.5, "s_values": [1.0, 2.0]},
    ],
    ids=lambda q: q["query"],
)
def test_hormander(capsys, query):
    code, out, _ = run(capsys, "hormander", json.dumps(query))
    assert code == 0
    d = json.loads(out)
    assert d["query"] == query["query"]


def test_hormander_errors(capsys):
    assert run(capsys, "hormander", '{"query": "nope"}')[0] == 2
    # the gate R > c_A |x|
    assert run(capsys, "hormander", '{"phi": {"variant": "linear"}, "x": 1.0, "R": 1.0}')[0] == 2
    assert run(capsys, "hormander", "{not json")[0] == 2


def test_operator(capsys, tmp_path, bump_csv):
    code, out, _ = run(capsys, "operator", str(bump_csv), "--levels", "-2,3")
    assert code == 0
    rows = out.splitlines()
    assert rows[0].split(",") == ["x"] + [f"level_{l}" for l in range(-2, 4)]
    assert len(rows) == 257
    code, _, _ = run(capsys, "operator", str(bump_csv), "--levels", "-2,3", "--norm", "--out", str(tmp_path / "n"))
    assert code == 0 and load_csv(tmp_path / "n" / "operator_norm.csv").N == 256
    code, _, _ = run(capsys, "operator", str(bump_csv), "--levels", "-2,3", "--k", "1",
                     "--symbol", '{"kind": "log-abs"}', "--out", str(tmp_path / "c"))
    assert code == 0 and (tmp_path / "c" / "operator_levels.csv").exists()


def test_operator_errors(capsys, bump_csv):
    assert run(capsys, "operator", str(bump_csv), "--k", "1")[0] == 2
    # level -9 resolves a scale below half a cell
    assert run(capsys, "operator", str(bump_csv), "--levels", "-9,3")[0] == 2
    assert run(capsys, "operator", str(bump_csv), "--X", '{"variant": "counterexample"}')[0] == 2


def test_shipped_configs_load():
    for name in SUITES:
        cfg = ExperimentConfig.load(default_config_path(name))
        assert cfg.suite == name and cfg.N == 2**16


SMALL_TOML = """
suite = "kolmogorov"
L = 64.0
N = 2048
l_max = 5
dilations = [0.5, 1.0, 2.0]
"""


def test_suite_and_report(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL_TOML)
    outs = []
    for name in ("kolmogorov", "comparability"):
        out = tmp_path / name
        code, _, err = run(capsys, "suite", name, "--config", str(cfg), "--no-regression", "--out", str(out))
        assert code == 0, err
        assert f"{name}: finite: pass" in err
        outs.append(out / f"report_{name}.json")
    code, out, _ = run(capsys, "report", *map(str, outs), "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    n = sum(len(json.loads(p.read_text())["cases"]) for p in outs)
    assert len(rows) == n
    assert {r["suite"] for r in rows} == {"kolmogorov", "comparability"}


def test_suite_gate_failure_exit_code(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL_TOML)
    store = tmp_path / "wrong.json"
    store.write_text(json.dumps({"kolmogorov/l2": 1e6}))
    code, _, err = run(capsys, "suite", "--config", str(cfg), "--regression", str(store))
    assert code == 1 and "regression: FAIL" in err


def test_suite_regression_record(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL_TOML)
    store = tmp_path / "store.json"
    assert run(capsys, "suite", "--config", str(cfg), "--regression", str(store), "--record")[0] == 0
    locked = json.loads(store.read_text())
    assert locked and all(k.startswith("kolmogorov/") for k in locked)
    code, out, err = run(capsys, "suite", "--config", str(cfg), "--regression", str(store))
    assert code == 0 and "regression: pass" in err


def test_report_rejects_garbage(capsys, tmp_path):
    p = tmp_path / "r.json"
    p.write_text("not json")
    assert run(capsys, "report", str(p))[0] == 2
    p.write_text(json.dumps({"suite": "x", "passed": False, "cases": []}))
    assert run(capsys, "report", str(p))[0] == 1
