import csv
import json
import subprocess
import sys

import pytest

from restless_asr.cli import CSV_HEADER, ExperimentConfig, main, run_experiment
from restless_asr.markov import ConfigurationError, ValidationError
from restless_asr.scenarios import PRESETS, load_scenario


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_preset_parameters():
    s = load_scenario("fig_5arm")
    assert [a.transition[0, 1] for a in s.arms] == [0.1, 0.1, 0.5, 0.1, 0.1]
    assert [a.transition[1, 0] for a in s.arms] == [0.2, 0.3, 0.1, 0.4, 0.5]
    assert all(list(a.rewards) == [0.1, 1.0] for a in s.arms)
    b = load_scenario("fig_bursty")
    assert [a.transition[0, 1] for a in b.arms] == [0.04, 0.05, 0.36, 0.05, 0.06]
    assert [a.transition[1, 0] for a in b.arms] == [0.08, 0.15, 0.09, 0.05, 0.18]
    assert len(load_scenario("fig_10arm").arms) == 10
    twenty = load_scenario("fig_20state")
    assert len(twenty.arms) == 5 and all(a.n_states == 20 for a in twenty.arms)
    assert "reconstruction" in twenty.description
    assert set(PRESETS) == {"fig_5arm", "fig_10arm", "fig_closegap", "fig_20state", "fig_bursty"}


def test_custom_scenario_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"arms": [
        {"rewards": [0.1, 1.0], "transition": [[0.9, 0.1], [0.2, 0.8]]},
        {"rewards": [0.1, 1.0], "transition": [[0.9, 0.1], [0.2, 0.7]]},
    ]}))
    with pytest.raises(ValidationError, match="row 1"):
        load_scenario(bad)
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    with pytest.raises(ValidationError, match="malformed"):
        load_scenario(junk)
    with pytest.raises(ValidationError, match="unknown scenario"):
        load_scenario("fig_nope")


def test_csv_schema_and_sidecar(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["--scenario", "fig_5arm", "--policies", "asr,dsee,rca", "--horizon", "3000", "--runs", "3",
                 "--seed", "7", "--checkpoints", "100,1000,3000", "--output", str(out)])
    assert code == 0
    rows = read_rows(out)
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 1 + 3 * 3
    assert [r[1] for r in rows[1:]] == ["asr"] * 3 + ["dsee"] * 3 + ["rca"] * 3
    side = json.loads((tmp_path / "r.csv.json").read_text())
    assert side["config"]["master_seed"] == 7 and len(side["scenario_arms"]) == 5


def test_rerun_is_byte_identical(tmp_path):
    args = ["--scenario", "fig_closegap", "--policies", "asr,rca,random", "--horizon", "4000", "--runs", "4",
            "--seed", "3", "--threads", "3"]
    main(args + ["-o", str(tmp_path / "a.csv")])
    main(args + ["-o", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    main(["--from-config", str(tmp_path / "a.csv.json"), "-o", str(tmp_path / "c.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()


def test_sidecar_reproduces_custom_scenario(tmp_path):
    scen = tmp_path / "s.json"
    scen.write_text(json.dumps(load_scenario("fig_5arm").to_dict()))
    main(["--scenario", str(scen), "--policies", "rca", "--horizon", "2000", "--runs", "2", "-o", str(tmp_path / "a.csv")])
    scen.unlink()
    main(["--from-config", str(tmp_path / "a.csv.json"), "-o", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_oracle_rows_are_zero():
    res = run_experiment(ExperimentConfig("fig_5arm", policies=["oracle"], horizon=2000, runs=2))
    assert all(r[2] == 0.0 for r in res.rows)


def test_bound_rows():
    cfg = ExperimentConfig("fig_5arm", policies=["oracle"], horizon=2000, runs=1, epsilon=0.01, delta=0.1,
                           bound=True, bound_offset=1.5, checkpoints=[100, 2000])
    res = run_experiment(cfg)
    bound = [r for r in res.rows if r[1] == "bound"]
    assert [r[0] for r in bound] == [100, 2000] and bound[1][2] > bound[0][2]
    with pytest.raises(ConfigurationError):
        run_experiment(ExperimentConfig("fig_5arm", policies=["oracle"], horizon=100, runs=1, bound=True))


@pytest.mark.parametrize("flags", [
    ["--scenario", "fig_5arm", "--policies", "asr,ucb"],
    ["--scenario", "fig_5arm", "--mode", "theoretical"],
    ["--scenario", "fig_5arm", "--runs", "0"],
    ["--scenario", "fig_5arm", "--delta", "0.3"],
    ["--scenario", "fig_5arm", "--checkpoints", "10,5"],
    ["--scenario", "missing.json"],
    [],
])
def test_validation_failures_exit_nonzero(flags, capsys):
    assert main(flags + ["--horizon", "500"]) != 0
    assert "error:" in capsys.readouterr().err


def test_stdout_and_module_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "restless_asr", "--scenario", "fig_5arm", "--policies", "oracle",
         "--horizon", "300", "--runs", "1", "--checkpoints", "100,300"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.splitlines()[0] == ",".join(CSV_HEADER)
    assert len(proc.stdout.splitlines()) == 3
    listed = subprocess.run([sys.executable, "-m", "restless_asr", "--list-scenarios"], capture_output=True, text=True)
    assert "fig_20state" in listed.stdout
