import hashlib
import json
import math
import os

import numpy as np
import pytest

from locuncert import load_dictionary, save_dictionary
from locuncert.cli import EXIT_MISSING, EXIT_OK, EXIT_USAGE, main


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def dict_file(tmp_path_factory, dictionary):
    path = tmp_path_factory.mktemp("cli") / "dict.json"
    save_dictionary(dictionary, path)
    return path


def test_build_dict_roundtrip_and_determinism(tmp_path, capsys):
    out1 = tmp_path / "d1.json"
    out2 = tmp_path / "d2.json"
    args = ["build-dict", "--duration-ms", "20", "--repetitions", "2"]
    assert main(args + ["--out", str(out1)]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "h_min" in printed
    assert "seeds" in printed

    loaded = load_dictionary(out1)
    resaved = tmp_path / "resaved.json"
    save_dictionary(loaded, resaved)
    assert sha256(out1) == sha256(resaved)

    assert main(args + ["--out", str(out2)]) == EXIT_OK
    assert sha256(out1) == sha256(out2)


def test_build_dict_missing_hrir_file(tmp_path, capsys):
    code = main(
        [
            "build-dict",
            "--hrir",
            str(tmp_path / "nothere.json"),
            "--out",
            str(tmp_path / "d.json"),
        ]
    )
    assert code == EXIT_MISSING
    assert "nothere.json" in capsys.readouterr().err


def test_analyze_prints_diagnostics(tmp_path, dict_file, capsys):
    code = main(
        [
            "analyze",
            "--dict",
            str(dict_file),
            "--ictd-ms",
            "0",
            "--icld-db",
            "5",
            "--x-m",
            "0.10",
            "--out-dir",
            str(tmp_path),
        ]
    )
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "-0.2915 ms, 4.7829 dB" in out
    assert "h_bar = " in out
    line = next(l for l in out.splitlines() if l.startswith("h_bar"))
    float(line.split("=")[1])  # formatted as a plain decimal
    csvs = [p for p in os.listdir(tmp_path) if p.startswith("likelihood")]
    assert len(csvs) == 1
    header = (tmp_path / csvs[0]).read_text().splitlines()[0]
    assert header == "theta_deg,likelihood"


def test_analyze_symmetric_condition_argmax(tmp_path, dict_file, capsys):
    code = main(
        ["analyze", "--dict", str(dict_file), "--out-dir", str(tmp_path)]
    )
    assert code == EXIT_OK
    csvs = [p for p in os.listdir(tmp_path) if p.startswith("likelihood")]
    rows = (tmp_path / csvs[0]).read_text().splitlines()[1:]
    data = np.array([[float(v) for v in r.split(",")] for r in rows])
    assert abs(data[np.argmax(data[:, 1]), 0]) <= 5.0


def test_analyze_invalid_number_exits_usage(dict_file, capsys):
    code = main(["analyze", "--dict", str(dict_file), "--icld-db", "loud"])
    assert code == EXIT_USAGE


def test_analyze_missing_dictionary(tmp_path, capsys):
    code = main(["analyze", "--dict", str(tmp_path / "absent.json")])
    assert code == EXIT_MISSING


def test_sweep_spatial_writes_results(tmp_path, dict_file, capsys):
    code = main(
        [
            "sweep",
            "spatial",
            "--dict",
            str(dict_file),
            "--x-range-cm",
            "0",
            "0",
            "1",
            "--out-dir",
            str(tmp_path),
        ]
    )
    assert code == EXIT_OK
    names = os.listdir(tmp_path)
    assert any(n.startswith("spatial") and n.endswith(".csv") for n in names)
    assert any(n.startswith("spatial") and n.endswith(".json") for n in names)
    assert "min=" in capsys.readouterr().out


def test_sweep_grid_custom_ranges(tmp_path, dict_file, capsys):
    code = main(
        [
            "sweep",
            "grid",
            "--dict",
            str(dict_file),
            "--ictd-range-ms",
            "-0.4",
            "0.4",
            "0.4",
            "--icld-range-db",
            "-6",
            "6",
            "6",
            "--out-dir",
            str(tmp_path),
        ]
    )
    assert code == EXIT_OK
    json_path = next(p for p in os.listdir(tmp_path) if p.startswith("grid") and p.endswith(".json"))
    doc = json.loads((tmp_path / json_path).read_text())
    assert np.array(doc["values"]).shape == (3, 3)


def test_design_psr_header_echo(tmp_path, capsys):
    code = main(["design", "psr", "--d-cm", "18.7", "--out-dir", str(tmp_path)])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "ictd_max = 0.2726 ms" in out
    assert "beta" in out
    path = next(p for p in os.listdir(tmp_path) if p.startswith("psr-curve"))
    header = (tmp_path / path).read_text().splitlines()[0]
    assert header == "theta_s_deg,ictd_ms,icld_db"


def test_design_arrangement_coverage(tmp_path, capsys):
    code = main(["design", "arrangement", "--arrangement", "ortf", "--out-dir", str(tmp_path)])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    coverage = float(out.split("=")[1].split("deg")[0])
    assert coverage == pytest.approx(94.0, abs=10.0)


def test_geometry_commands(capsys):
    assert main(["geometry", "tau-overlap"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "0.2729 ms" in out
    assert "18.72 cm" in out

    assert main(["geometry", "relative", "--icld-db", "5", "--x-m", "0.10"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "-0.2915 ms" in out

    assert main(["geometry", "coverage", "--arrangement", "blumlein"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "coverage angle" in out


def test_config_file_unknown_key_rejected(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"setup": {"base_angle_deg": 60}, "nonsense": 1}))
    code = main(["geometry", "tau-overlap", "--config", str(config)])
    assert code == EXIT_USAGE
    assert "unknown config key" in capsys.readouterr().err


def test_config_file_flag_override(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"setup": {"base_angle_deg": 90.0}}))
    assert main(["geometry", "tau-overlap", "--config", str(config)]) == EXIT_OK
    tau_90 = capsys.readouterr().out
    assert "0.2729" not in tau_90  # 90-degree base angle changes tau_o

    code = main(
        [
            "geometry",
            "tau-overlap",
            "--config",
            str(config),
            "--base-angle-deg",
            "60",
        ]
    )
    assert code == EXIT_OK
    assert "0.2729 ms" in capsys.readouterr().out  # flag wins over file


def test_missing_config_file(capsys):
    assert main(["geometry", "tau-overlap", "--config", "/no/such/file.json"]) == EXIT_MISSING
