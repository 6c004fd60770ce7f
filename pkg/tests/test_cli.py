import json

import numpy as np
import pytest

from bosepair import checks
from bosepair.cli import main


def _run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def _two_level_file(tmp_path):
    path = tmp_path / "levels.txt"
    path.write_text("# epsilon omega nu\n0 1 0\n1 1 0\n")
    return path


def test_oracle_two_level(tmp_path):
    # g_bare = 2 on two levels gives g_eff = 1
    lv_file = _two_level_file(tmp_path)
    assert _run(tmp_path, "oracle", f"spectrum_file={lv_file}", "M=1", "g_start=2") == 0
    text = (tmp_path / "oracle_eigenvalues.csv").read_text()
    assert "-1.414213562373095" in text
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["subcommand"] == "oracle" and manifest["config"]["M"] == 1


def test_invalid_spectrum_file_is_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 1 0\n0 1 0\n")
    assert _run(tmp_path, "oracle", f"spectrum_file={bad}", "M=1") == 2
    assert "configuration error" in capsys.readouterr().err


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("L = 3\nM = 2  # pairs\ng_start = 0.5\ng_end = 1.5\npoints = 3\n")
    assert main(["oracle", "--config", str(cfg), "points=2", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "oracle_eigenvalues.csv").read_text().splitlines()[1:]
    assert len({r.split(",")[0] for r in rows}) == 2


@pytest.mark.parametrize("args", [["L=3", "M=1", "tol=1e-20"], ["L=3", "M=1", "bogus=1"], ["L=3", "M=1", "points=0"],
                                  ["L=3", "M=1", "g_start=abc"], ["L=40", "M=30"]])
def test_config_errors(tmp_path, args):
    assert _run(tmp_path, "oracle", *args) == 2


def test_richardson_with_verify(tmp_path, capsys):
    code = _run(tmp_path, "richardson", "L=4", "M=2", "g_start=0.1", "g_end=2", "points=5", "--verify")
    assert code == 0
    out = capsys.readouterr().out
    assert "max |dE|" in out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["verify"]["max_abs_diff"] <= 1e-8
    roots = (tmp_path / "richardson_roots.csv").read_text().splitlines()
    assert len(roots) == 1 + 5 * 2


def test_richardson_empty_sector(tmp_path):
    lv_file = tmp_path / "lv.txt"
    lv_file.write_text("0 1 1\n0.5 1 0\n1 1 1\n")
    assert _run(tmp_path, "richardson", f"spectrum_file={lv_file}", "M=0", "nu=1,0,1", "g_start=0.7") == 0
    row = (tmp_path / "richardson_energy.csv").read_text().splitlines()[1].split(",")
    assert float(row[2]) == pytest.approx(1.0)


def test_continuum_sweep_flips_branch(tmp_path):
    assert _run(tmp_path, "continuum", "rho=1", "g_start=0.1", "g_end=3", "points=30") == 0
    rows = [r.split(",") for r in (tmp_path / "continuum_sweep.csv").read_text().splitlines()[1:]]
    gs = np.array([float(r[0]) for r in rows])
    strong = np.array([r[2] == "Strong" for r in rows])
    first = np.argmax(strong)
    assert not strong[:first].any() and strong[first:].all()
    assert gs[first] > 1.820478 and gs[first - 1] <= 1.820478
    assert float(rows[0][-1]) == pytest.approx(1.820478, abs=1e-6)


def test_continuum_single_point(tmp_path):
    assert _run(tmp_path, "continuum", "rho=1", "g_start=3") == 0
    row = (tmp_path / "continuum_sweep.csv").read_text().splitlines()[1].split(",")
    assert float(row[4]) == pytest.approx(2.6103, abs=1e-4)
    assert float(row[5]) == pytest.approx(2.5506, abs=1e-4)


def test_continuum_rejects_zero_coupling(tmp_path):
    assert _run(tmp_path, "continuum", "rho=1", "g_start=0.0") == 2


def test_meanfield_rows(tmp_path):
    assert _run(tmp_path, "meanfield", "L=200", "rho=1", "g_start=0.5", "dump_occupations=1") == 0
    rows = [r.split(",") for r in (tmp_path / "meanfield.csv").read_text().splitlines()[1:]]
    assert rows[0][1:3] == ["naive", "NoStationaryPoint"]
    assert rows[1][1:3] == ["modified", "Solved"] and float(rows[1][6]) > 0
    assert (tmp_path / "meanfield_occupations.csv").exists()


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out, jobs in ((a, "1"), (b, "2")):
        assert main(["richardson", "L=5", "M=3", "g_start=0.2", "g_end=1", "points=4", "--jobs", jobs,
                     "--out", str(out)]) == 0
    for name in ("richardson_energy.csv", "richardson_roots.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_verify_default_passes(tmp_path):
    assert _run(tmp_path, "verify") == 0
    assert "0" not in {line.split(",")[-1] for line in (tmp_path / "verify.csv").read_text().splitlines()[1:]}


def test_verify_tampered_tolerance_names_check(tmp_path, capsys):
    assert _run(tmp_path, "verify", "check.critical_coupling=1e-20") == 4
    assert "critical_coupling" in capsys.readouterr().err


def test_unknown_check_name_is_config_error(tmp_path):
    assert _run(tmp_path, "verify", "check.nonexistent=1") == 2


def test_run_checks_reports_crash_as_failure(monkeypatch):
    def boom(seed):
        raise RuntimeError("broken")

    monkeypatch.setitem(checks.CHECKS, "critical_coupling", (boom, 1e-6))
    res = {r.name: r for r in checks.run_checks(only=["critical_coupling"])}
    assert not res["critical_coupling"].passed and "broken" in res["critical_coupling"].detail
