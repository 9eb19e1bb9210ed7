import csv
import json
import subprocess
import sys

import pytest

from moran_duality.cli import DEFAULT_CONFIG, SUITES, main
from moran_duality.fixtures import load_bundled

# reduced sizes for the slow suites; the full sizes run in the acceptance tests
QUICK = {
    "duality-mc": ["--set", "duality_mc.replicates=2000"],
    "sde-duality": ["--set", "sde_duality.replicates=5000", "--set", "sde_duality.dt=0.01"],
    "compat-oracle": ["--set", "compat_oracle.count=40"],
    "path-average": ["--set", "path_average.count=15"],
    "generator-convergence": ["--set", "generator_convergence.N_list=[50,100,200]"],
}
ZERO_MODEL = ["--set", 'model={"N":4,"r":0,"kappa":0,"s":[],"u":0,"nu0":0.5,"nu1":null}',
              "--set", 'sde={"r":0,"kappa":0,"sigma":[],"theta":0,"nu0":0.5,"nu1":null}']


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("suite", SUITES)
def test_suites_pass(suite, tmp_path):
    code, out = run(["verify", suite, *QUICK.get(suite, [])], tmp_path)
    doc = json.loads((out / f"{suite}.json").read_text())
    assert code == 0 and doc["passed"] is True and doc["suite"] == suite


def test_duality_exact_report_and_csv(tmp_path):
    code, out = run(["verify", "duality-exact", "--format", "csv"], tmp_path)
    assert code == 0
    doc = json.loads((out / "duality-exact.json").read_text())
    assert [r["N"] for r in doc["results"]["results"]] == [3, 5, 8]
    assert all(r["max_residual"] < 1e-10 for r in doc["results"]["results"])
    rows = read_csv(out / "duality-exact-N5.csv")
    assert rows[0][:4] == ["schema_version", "t", "i", "n"]
    assert len(rows) == 1 + 4 * 6 * 7
    assert (out / "duality-exact-N5.csv").read_bytes().count(b"\r\n") == len(rows)


def test_simulate_writes_four_csvs(tmp_path):
    code, out = run(["simulate", "--seed", "3"], tmp_path)
    assert code == 0
    for name in ("x_counts.csv", "z_counts.csv", "sde.csv", "z_limit.csv"):
        rows = read_csv(out / name)
        assert rows[0][0] == "schema_version" and all(r[0] == "1" for r in rows[1:])
        assert float(rows[1][1]) == 0.0


def test_zero_rates_give_constant_trajectories(tmp_path):
    code, out = run(["simulate", *ZERO_MODEL, "--set", "simulate.horizon=10"], tmp_path)
    assert code == 0
    assert read_csv(out / "x_counts.csv")[1:] == [["1", "0.0", "2"]]
    assert read_csv(out / "z_counts.csv")[1:] == [["1", "0.0", "3"]]
    assert read_csv(out / "z_limit.csv")[1:] == [["1", "0.0", "3"]]
    assert {r[2] for r in read_csv(out / "sde.csv")[1:]} == {"0.3"}


def test_simulate_to_stdout(capsys):
    assert main(["simulate", "--set", "simulate.horizon=0.2"]) == 0
    text = capsys.readouterr().out
    assert "# x_counts.csv" in text and "# z_limit.csv" in text


def test_large_forward_run(tmp_path):
    import time

    start = time.perf_counter()
    code, _ = run(["simulate", "--set", "model.N=100", "--set", "simulate.horizon=100",
                   "--set", "simulate.i0=50", "--set", "simulate.dt=0.1"], tmp_path)
    assert code == 0 and time.perf_counter() - start < 5.0


@pytest.mark.parametrize(
    "args",
    [
        ["verify", "nope"],
        ["verify", "rates", "--set", "rates.bogus=1"],
        ["verify", "rates", "--set", "no_equals_sign"],
        ["verify", "rates", "--set", "model.N=0"],
        ["verify", "rates", "--set", "model.nu0=2"],
        ["verify", "rates", "--seed", "-1"],
        ["verify", "rates", "--jobs", "0"],
        ["simulate", "--set", "simulate.i0=99"],
        ["simulate", "--set", "model=3"],
        ["fixture", "replay"],
        ["fixture", "replay", "/nonexistent/fixture.json"],
        [],
    ],
)
def test_config_errors_exit_2(args, tmp_path):
    assert main([*args, "--out", str(tmp_path)] if args else args) == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"identity": {"max_N": 4}}))
    assert main(["verify", "identity", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    cfg.write_text(json.dumps({"identity": {"max_n": 4}}))
    assert main(["verify", "identity", "--config", str(cfg)]) == 2
    cfg.write_text("{not json")
    assert main(["verify", "identity", "--config", str(cfg)]) == 2


def test_fixture_record_and_replay(tmp_path):
    code, out = run(["fixture", "record", "--seed", "5"], tmp_path)
    assert code == 0
    path = out / "fixture-seed5.json"
    assert main(["fixture", "replay", str(path), "--out", str(tmp_path / "r")]) == 0
    assert json.loads((tmp_path / "r" / "replay.json").read_text())["passed"] is True


@pytest.mark.parametrize("name", ["pairwise", "two-events"])
def test_bundled_fixture_replay(name, tmp_path):
    assert main(["fixture", "replay", "--bundled", name, "--out", str(tmp_path)]) == 0


def test_tampered_fixture_exits_1(tmp_path):
    doc = load_bundled("two-events").to_dict()
    doc["expected"]["paths"]["down,up"]["messy"][0][1] = "(1 2)"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["fixture", "replay", str(path), "--out", str(tmp_path)]) == 1
    report = json.loads((tmp_path / "replay.json").read_text())
    assert report["passed"] is False and report["differences"]


def test_corrupted_fixture_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"schema_version": 1, "N": 3')
    assert main(["fixture", "replay", str(path)]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_failing_verification_exits_1(tmp_path):
    # an absurd tolerance turns the exact duality check into a failure
    assert main(["verify", "duality-exact", "--set", "duality_exact.tol=0", "--out", str(tmp_path)]) == 1


def test_defaults_are_json_serializable():
    json.dumps(DEFAULT_CONFIG)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "moran_duality", "verify", "frankenstein-tables"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["passed"] is True
