import csv
import json
import subprocess
import sys

import pytest

from isinglab.cli import main


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_verify_exact(tmp_path):
    assert main(["verify", "exact", "--betas", "2", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "exact.csv")
    assert rows and all(r["verdict"] == "pass" for r in rows)
    assert {r["graph_id"] for r in rows} == {"single_edge", "path3", "triangle", "cycle4", "grid2x3", "grid2x4"}
    echo = json.loads((tmp_path / "exact.config.json").read_text())
    assert echo["betas"] == 2


def test_verify_htpath(tmp_path):
    assert main(["verify", "htpath", "--graphs", "cycle4,triangle", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "htpath.csv")
    assert list(rows[0]) == ["graph_id", "A", "x", "y", "gamma_id", "p_extracted", "p_formula", "verdict"]


def test_walk_tables(tmp_path):
    assert main(["walk", "tables", "--d", "2", "--nmax", "16", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "walk_tables.csv")
    assert len(rows) == 17
    assert float(rows[1]["u"]) == pytest.approx(1 / 3, abs=1e-16) and float(rows[1]["f"]) == pytest.approx(1 / 3)


def test_walk_verify_small(tmp_path):
    assert main(["walk", "verify", "--models", "pure-lazy", "--nmax", "64", "--census-max", "3",
                 "--out", str(tmp_path)]) == 0
    reports = json.loads((tmp_path / "walk_verify.json").read_text())
    assert all(r["verdict"] is not False for r in reports)


def test_walk_mc(tmp_path):
    assert main(["walk", "mc", "--L", "16,32", "--samples", "2000", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "walk_mc.csv")
    assert [int(r["L"]) for r in rows] == [16, 32]


def test_mc_validate_reproducible(tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / str(k)
        argv = ["mc", "validate", "--graphs", "triangle", "--betas", "0.3", "--sweeps", "2000", "--seed", "4",
                "--out", str(d)]
        assert main(argv) == 0
        outs.append((d / "mc_validate.csv").read_bytes())
    assert outs[0] == outs[1]


def test_mc_xi_requires_beta(tmp_path):
    assert main(["mc", "xi", "--out", str(tmp_path)]) == 2


def test_report(tmp_path):
    assert main(["walk", "tables", "--nmax", "512", "--out", str(tmp_path)]) == 0
    assert main(["report", str(tmp_path / "walk_tables.csv"), "--out", str(tmp_path)]) == 0
    reps = json.loads((tmp_path / "report.json").read_text())
    assert [r["verdict"] for r in reps] == [True, True, None]


def test_unknown_flag():
    proc = subprocess.run([sys.executable, "-m", "isinglab", "walk", "tables", "--bogus"], capture_output=True,
                          text=True)
    assert proc.returncode == 2 and "usage" in proc.stderr


def test_config_file(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("nmax: 8\nmodel: geom\n")
    assert main(["walk", "tables", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert len(read_csv(tmp_path / "walk_tables.csv")) == 9
    bad = tmp_path / "bad.yaml"
    bad.write_text("nonsense_key: 1\n")
    assert main(["walk", "tables", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_invalid_model(tmp_path):
    assert main(["walk", "tables", "--model", "nope", "--out", str(tmp_path)]) == 2
    assert main(["walk", "tables", "--delta", "0.9", "--out", str(tmp_path)]) == 2
