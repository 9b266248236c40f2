"""Config grammar, CLI subcommands, exit codes, reproducibility, cache."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import susyquench as sq
from susyquench.cli import main
from susyquench.config import parse_config


GOOD = """
# a survival run
experiment = survival
L = 4.0
to_level = 3          # partner level
N = 6
temperatures = 0, 0.05
t_max = 1.0
t_points = 11
format = csv
"""


def test_parse_happy_path():
    cfg = parse_config(GOOD)
    assert cfg.experiment == "survival"
    assert cfg.to_level == 3
    assert cfg.temperatures == (0.0, 0.05)
    assert cfg.t_points == 11
    assert cfg.include_quarters is True


def test_parse_errors_carry_line_numbers():
    with pytest.raises(sq.ConfigError) as ei:
        parse_config("experiment = survival\nbogus = 1\n")
    assert "line 2" in str(ei.value) and "bogus" in str(ei.value)
    with pytest.raises(sq.ConfigError) as ei:
        parse_config("experiment = survival\njust some words\n")
    assert "line 2" in str(ei.value)
    with pytest.raises(sq.ConfigError) as ei:
        parse_config("experiment = survival\nN = lots\n")
    assert "line 2" in str(ei.value)
    with pytest.raises(sq.ConfigError):
        parse_config("experiment = survival\nN =\n")


def test_semantic_validation():
    with pytest.raises(sq.ConfigError, match="trivial"):
        parse_config("experiment = survival\nto_level = 1\nfrom_level = 1\n")
    with pytest.raises(sq.ConfigError, match="non-negative"):
        parse_config("experiment = survival\ntemperatures = -0.1\n")
    with pytest.raises(sq.ConfigError, match="csv or json"):
        parse_config("experiment = survival\nformat = xml\n")
    with pytest.raises(sq.ConfigError, match="expand"):
        parse_config("experiment = survival\nL_initial = 5.0\nL = 4.0\n")
    with pytest.raises(sq.ConfigError, match="experiment"):
        parse_config("L = 4.0\n")
    with pytest.raises(sq.ConfigError):
        parse_config("experiment = work-scan\nalpha_list = 2, 7\n")


def test_exit_code_config_error(tmp_path):
    rc = main(["survival", "--to-level", "1", "--out", str(tmp_path)])
    assert rc == 2


def test_exit_code_truncation(tmp_path):
    rc = main(["survival", "--N", "5", "--to-level", "2", "--m-cap", "80",
               "--out", str(tmp_path)])
    assert rc == 3


def test_exit_code_combinatorial_cap(tmp_path):
    rc = main(["wpd", "--N", "6", "--to-level", "2", "--M", "600",
               "--threshold", "1e-14", "--candidate-cap", "1000",
               "--out", str(tmp_path)])
    assert rc == 4


def test_error_class_exit_codes():
    assert sq.ConfigError("x").exit_code == 2
    assert sq.TruncationError("x").exit_code == 3
    assert sq.CombinatorialCapError("x").exit_code == 4
    assert sq.NumericalError("x").exit_code == 5


def test_survival_run_and_outputs(tmp_path):
    rc = main(["survival", "--N", "4", "--to-level", "2", "--t-points", "9",
               "--temperatures", "0,0.05", "--out", str(tmp_path)])
    assert rc == 0
    csv0 = (tmp_path / "survival_T0.csv").read_text().splitlines()
    assert csv0[0] == "t,t_over_tr,F,logF,classification"
    first = csv0[1].split(",")
    assert float(first[0]) == 0.0 and first[4] == "true revival"
    # 17 significant digits round-trip exactly
    tr = sq.revival_time(sq.BoxGeometry(4.0))
    quarter_rows = [r for r in csv0[1:] if r.split(",")[1] == "0.25"]
    assert quarter_rows and float(quarter_rows[0].split(",")[0]) == tr / 4
    assert (tmp_path / "survival_T0.05.csv").exists()
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["experiment"] == "survival"
    assert man["version"] == sq.__version__
    assert "wall_time_s" in man
    assert man["config"]["N"] == 4
    assert len(man["truncation"]) == 2
    assert {"K", "M", "max_defect"} <= set(man["truncation"][0])
    assert sorted(man["outputs"]) == ["survival_T0.05.csv", "survival_T0.csv"]


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        rc = main(["survival", "--N", "3", "--to-level", "3", "--t-points", "7",
                   "--out", str(out)])
        assert rc == 0
    assert (a / "survival_T0.csv").read_bytes() == (b / "survival_T0.csv").read_bytes()
    # manifests may differ only in wall time and the output path itself
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    for m in (ma, mb):
        m.pop("wall_time_s")
        m["config"].pop("out")
    assert ma == mb


def test_cache_roundtrip(tmp_path):
    args = ["survival", "--N", "3", "--to-level", "2", "--t-points", "5",
            "--cache", "--out", str(tmp_path)]
    assert main(args) == 0
    first = (tmp_path / "survival_T0.csv").read_bytes()
    cache_files = list((tmp_path / ".cache").glob("*.npz"))
    assert len(cache_files) == 1
    assert main(args) == 0
    assert (tmp_path / "survival_T0.csv").read_bytes() == first
    assert list((tmp_path / ".cache").glob("*.npz")) == cache_files


def test_wpd_cli(tmp_path):
    rc = main(["wpd", "--N", "4", "--to-level", "2", "--M", "400",
               "--threshold", "1e-8", "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "wpd_T0.csv").read_text().splitlines()
    assert lines[0] == "W,W_over_E1,P,order,final_occupation"
    ground = lines[1].split(",")
    assert ground[1] == "24" and ground[3] == "0" and ground[4] == "1;2;3;4"
    man = json.loads((tmp_path / "manifest.json").read_text())
    t = man["truncation"][0]
    assert t["total_probability"] > 0.999
    assert t["records"] == len(lines) - 1


def test_wpd_cli_finite_T_json(tmp_path):
    rc = main(["wpd", "--N", "4", "--to-level", "2", "--M", "300",
               "--temperatures", "0.05", "--threshold", "1e-7",
               "--format", "json", "--out", str(tmp_path)])
    assert rc == 0
    data = json.loads((tmp_path / "wpd_T0.05.json").read_text())
    assert data["total_probability"] > 0.99
    assert all({"W", "P", "order", "final_occupation"} <= set(r) for r in data["records"])


def test_work_scan_cli(tmp_path):
    rc = main(["work-scan", "--alpha-list", "2,3", "--N-min", "1", "--N-max", "4",
               "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "work_scan.csv").read_text().splitlines()
    assert lines[0] == "N,alpha,average_work,irreversible_work"
    assert len(lines) == 1 + 2 * 4
    E1 = sq.BoxGeometry(4.0).energy_unit
    row = lines[1].split(",")
    assert row[:2] == ["1", "2"] and float(row[2]) == pytest.approx(4 * E1, rel=1e-12)


def test_phases_cli(tmp_path):
    rc = main(["phases", "--N", "4", "--to-level", "3", "--t-over-tr", "0.25,0.5",
               "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "phases.csv").read_text().splitlines()
    assert lines[0] == "t_over_tr,k,re,im,phase_rad,classification"
    assert len(lines) == 1 + 2 * 4
    first = lines[1].split(",")
    assert abs(float(first[4])) < 1e-6 and first[5] == "true revival"


def test_basis_dump_cli(tmp_path):
    rc = main(["basis-dump", "--level", "2", "--n-states", "3", "--x-points", "21",
               "--out", str(tmp_path)])
    assert rc == 0
    states = (tmp_path / "basis_states.csv").read_text().splitlines()
    assert states[0] == "m,n,energy,energy_over_E1,parity"
    assert states[1].split(",")[1] == "2"     # level 2, m=1 -> n=2
    prof = (tmp_path / "basis_profiles.csv").read_text().splitlines()
    assert prof[0].startswith("x,superpotential,potential,psi_1")
    assert len(prof) == 22


def test_talbot_cli(tmp_path):
    rc = main(["survival", "--L-initial", "3.9", "--L", "4.0", "--from-level", "1",
               "--to-level", "1", "--N", "4", "--t-points", "5",
               "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "survival_T0.csv").read_text().splitlines()
    labels = {r.split(",")[4] for r in lines[1:]}
    assert "quasi revival" in labels


def test_config_file_with_flag_override(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(GOOD)
    out = tmp_path / "o"
    rc = main(["survival", "--config", str(cfgfile), "--t-points", "5",
               "--temperatures", "0", "--out", str(out)])
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["t_points"] == 5          # flag wins
    assert man["config"]["to_level"] == 3          # file survives


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "susyquench.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert sq.__version__ in out.stdout
