import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from daccox.bench import strip_timings
from daccox.cli import main


def _schema(name):
    return json.loads(resources.files("daccox").joinpath(f"schemas/{name}.schema.json").read_text())


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim") / "d.csv"
    assert main(["simulate", "--scenario", "I", "--n0", "3000", "--p", "12", "--seed", "7", "--out", str(out)]) == 0
    return out


def test_simulate_writes_csv_and_manifest(sim):
    lines = sim.read_text().splitlines()
    assert lines[0].startswith("id,stop,event,z1") and len(lines) == 3001
    manifest = json.loads(sim.with_suffix(".json").read_text())
    jsonschema.validate(manifest, _schema("manifest"))
    assert manifest["n_subjects"] == 3000 and manifest["config"]["p"] == 12


def test_simulate_time_dependent(tmp_path):
    out = tmp_path / "iv.csv"
    rc = main(["simulate", "--scenario", "IV", "--n0", "500", "--p-ind", "10", "--p-dep", "10",
               "--seed", "1", "--out", str(out)])
    assert rc == 0
    manifest = json.loads(out.with_suffix(".json").read_text())
    jsonschema.validate(manifest, _schema("manifest"))
    assert out.read_text().startswith("id,start,stop,event")
    assert len(out.read_text().splitlines()) == manifest["n_rows"] + 1


def test_simulate_is_bitwise_reproducible(tmp_path, sim):
    again = tmp_path / "again.csv"
    main(["simulate", "--scenario", "I", "--n0", "3000", "--p", "12", "--seed", "7", "--workers", "3",
          "--out", str(again)])
    assert again.read_bytes() == sim.read_bytes()


def test_fit_json_and_thread_invariance(tmp_path, sim):
    outs = []
    for threads in ("1", "8"):
        out = tmp_path / f"fit{threads}.json"
        assert main(["fit", "--data", str(sim), "--k-shards", "5", "--threads", threads, "--out", str(out)]) == 0
        outs.append(json.loads(out.read_text()))
    for payload in outs:
        jsonschema.validate(payload, _schema("fit_result"))
    a, b = ({k: v for k, v in o.items() if k != "timings"} for o in outs)
    assert a == b
    assert set(outs[0]["active_set"]) == set(range(9))


def test_fit_full_estimator(tmp_path, sim):
    out = tmp_path / "full.json"
    assert main(["fit", "--data", str(sim), "--estimator", "full", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    jsonschema.validate(payload, _schema("fit_result"))
    assert payload["estimator"] == "full_lin" and payload["k_shards"] == 1


def test_fit_to_stdout(capsys, sim):
    assert main(["fit", "--data", str(sim), "--k-shards", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "fit_result"


def test_bench_report_reproducible(tmp_path):
    reports = []
    for i, par in enumerate(("1", "2")):
        out = tmp_path / f"b{i}.json"
        args = ["bench", "--scenario", "I", "--n0", "2000", "--p", "12", "--reps", "2", "--seed", "3",
                "--estimators", "dac_i1,dac_i2,full_lin", "--parallel-reps", par, "--out", str(out)]
        assert main(args) == 0
        reports.append(json.loads(out.read_text()))
        assert (tmp_path / f"b{i}.txt").read_text().startswith("scenario I")
    jsonschema.validate(reports[0], _schema("bench_report"))
    assert reports[0]["complete"] is True
    assert strip_timings(reports[0]) == strip_timings(reports[1])


def test_exit_codes(tmp_path, sim):
    assert main(["fit", "--data", str(tmp_path / "missing.csv")]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("id,stop,event,z1\n0,1.0,1,0.5\n0,2.0,0,0.1\n")
    assert main(["fit", "--data", str(bad)]) == 3
    # p below the number of nonzero coefficients is a configuration error
    assert main(["simulate", "--scenario", "I", "--n0", "100", "--p", "3", "--out", str(tmp_path / "x.csv")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["fit"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--scenario", "I", "--n0", "100", "--estimators", "nope", "--out", str(tmp_path / "b.json")])
    assert exc.value.code == 2
    # more shards than subjects
    assert main(["fit", "--data", str(sim), "--k-shards", "5000"]) == 3


def test_separated_data_is_numerical_failure(tmp_path):
    path = tmp_path / "sep.csv"
    rows = ["id,stop,event,z1"] + [f"{i},{i + 1},1,{(50 - i) / 50}" for i in range(50)]
    path.write_text("\n".join(rows) + "\n")
    assert main(["fit", "--data", str(path), "--estimator", "full"]) == 4


def test_console_script_module_entry():
    res = subprocess.run([sys.executable, "-m", "daccox.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "daccox" in res.stdout
