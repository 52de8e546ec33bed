import json

import numpy as np
import pytest

from mafclt.cli import main
from mafclt.ma_paths import StepPath


@pytest.fixture
def config_file(tmp_path):
    cfg = {
        "tail": {"alpha": 1.5, "p": 0.5, "r": 0.5, "sv": {"kind": "constant", "c": 1.0}},
        "coeffs": {"kind": "deterministic", "values": [1.0, 0.5, 0.25]},
        "n_grid": [50, 200],
        "reps": 8,
        "seed": 3,
        "metric_tol": 1e-3,
        "ks_threshold": 0.9,
    }
    f = tmp_path / "config.json"
    f.write_text(json.dumps(cfg))
    return f


def test_fclt_subcommand(tmp_path, config_file, capsys):
    out = tmp_path / "out"
    code = main(["fclt", "--config", str(config_file), "--out", str(out)])
    assert code == 0
    payload = json.loads((out / "report.json").read_text())
    assert payload["experiment"] == "fclt"
    assert (out / "fclt.csv").exists()
    assert "PASS" in capsys.readouterr().out


def test_metric_gap_subcommand(tmp_path, config_file):
    out = tmp_path / "gap"
    code = main(["metric-gap", "--config", str(config_file), "--out", str(out), "--workers", "2"])
    assert code in (0, 2)
    assert (out / "metric-gap.csv").exists()


def test_appendix_subcommand(tmp_path, config_file):
    # appendix reuses the tail and grid from the config
    cfg = json.loads(config_file.read_text())
    cfg["n_grid"] = [10 ** 10, 10 ** 20]
    config_file.write_text(json.dumps(cfg))
    out = tmp_path / "apx"
    code = main(["appendix", "--config", str(config_file), "--out", str(out)])
    assert code == 0
    payload = json.loads((out / "report.json").read_text())
    assert payload["rows"][0]["q_n"] == 10


def test_check_coeffs_subcommand(tmp_path, config_file):
    cfg = json.loads(config_file.read_text())
    cfg["n_grid"] = [10, 20, 40]
    cfg["reps"] = 30
    config_file.write_text(json.dumps(cfg))
    out = tmp_path / "cc"
    assert main(["check-coeffs", "--config", str(config_file), "--out", str(out)]) == 0


def test_karamata_subcommand(tmp_path, config_file):
    cfg = json.loads(config_file.read_text())
    cfg["n_grid"] = [10 ** 4, 10 ** 8]
    config_file.write_text(json.dumps(cfg))
    out = tmp_path / "ka"
    assert main(["karamata", "--config", str(config_file), "--out", str(out)]) == 0


def test_metric_subcommand(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    v1 = np.zeros(11)
    v1[5:] = 1.0
    v2 = np.zeros(11)
    v2[6:] = 1.0
    StepPath(10, v1).to_csv(a)
    StepPath(10, v2).to_csv(b)
    code = main(["metric", str(a), str(b), "--tol", "1e-6"])
    assert code == 0
    out = capsys.readouterr().out
    dm2 = float(out.splitlines()[0].split("=")[1])
    du = float(out.splitlines()[1].split("=")[1])
    assert dm2 == pytest.approx(0.1, abs=1e-6)
    assert du == 1.0


def test_simulate_path_subcommand(tmp_path, config_file):
    out = tmp_path / "paths"
    assert main(["simulate-path", "--config", str(config_file), "--out", str(out)]) == 0
    path = StepPath.from_csv(out / "partial_sum_path.csv")
    assert path.n == 200
    assert StepPath.from_csv(out / "limit_path.csv").values[0] == 0.0


def test_seed_override_changes_results(tmp_path, config_file):
    out1, out2, out3 = tmp_path / "r1", tmp_path / "r2", tmp_path / "r3"
    main(["fclt", "--config", str(config_file), "--out", str(out1)])
    main(["fclt", "--config", str(config_file), "--out", str(out2), "--seed", "99"])
    main(["fclt", "--config", str(config_file), "--out", str(out3)])
    r1 = json.loads((out1 / "report.json").read_text())
    r2 = json.loads((out2 / "report.json").read_text())
    r3 = json.loads((out3 / "report.json").read_text())
    assert r1["rows"] != r2["rows"]
    assert r1["rows"] == r3["rows"]


def test_error_exit_code(tmp_path):
    missing = tmp_path / "nope.json"
    assert main(["fclt", "--config", str(missing)]) == 1


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["fclt"])  # missing --config
    assert exc.value.code == 1
