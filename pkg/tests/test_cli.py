import json

import numpy as np
import pytest

from cht_fvm import suites
from cht_fvm.cli import EXIT_INPUT, EXIT_OK, EXIT_SOLVER, EXIT_SUITE, main, worker_count
from cht_fvm.output import RunManifest, read_csv, sha256


@pytest.fixture
def diffusion_run_dir(tmp_path):
    out = tmp_path / "a"
    assert main(["run", "diffusion-3", "--h", "8", "--out", str(out)]) == EXIT_OK
    return out


def test_run_writes_artifacts_with_checksums(diffusion_run_dir, capsys):
    out = diffusion_run_dir
    names = {p.name for p in out.iterdir()}
    assert {"case.yaml", "fields_fluid.csv", "fields_solid.csv", "fields_fluid.vtk", "fields_solid.vtk",
            "iterations.csv", "manifest.json"} <= names
    m = RunManifest.read(out)
    assert m.case == "diffusion-3"
    for name, digest in m.files.items():
        assert sha256(out / name) == digest
    assert m.iterations == {"coupling": "ob", "iterations": 1}
    assert {"wall", "total"} <= set(m.timings)
    assert m.versions["numpy"] == np.__version__


def test_field_csv_layout(diffusion_run_dir):
    cols = read_csv(diffusion_run_dir / "fields_solid.csv")
    assert list(cols) == ["i", "j", "x", "y", "T", "error"]
    assert cols["x"].size == 64
    assert cols["y"].min() == pytest.approx(1 + 1 / 16)
    assert np.abs(cols["error"]).max() < 1e-2


def test_vtk_layout(diffusion_run_dir):
    lines = (diffusion_run_dir / "fields_fluid.vtk").read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2:6] == ["ASCII", "DATASET STRUCTURED_GRID", "DIMENSIONS 9 9 1", "POINTS 81 double"]
    assert lines[6] == "0.0 0.0 0.0"
    assert lines[87] == "CELL_DATA 64"
    assert lines[88:90] == ["SCALARS T double 1", "LOOKUP_TABLE default"]


def test_reruns_are_byte_identical(diffusion_run_dir, tmp_path):
    again = tmp_path / "b"
    assert main(["run", "diffusion-3", "--h", "8", "--out", str(again)]) == EXIT_OK
    ma, mb = RunManifest.read(diffusion_run_dir), RunManifest.read(again)
    assert ma.files == mb.files and ma.spec_digest == mb.spec_digest
    for name in ma.files:
        assert (diffusion_run_dir / name).read_bytes() == (again / name).read_bytes()


def test_compare_with_itself_is_zero(diffusion_run_dir, tmp_path, capsys):
    report = tmp_path / "report.json"
    code = main(["compare", str(diffusion_run_dir), str(diffusion_run_dir), "--tol", "0", "--out", str(report)])
    assert code == EXIT_OK
    data = json.loads(report.read_text())
    assert data["passed"] and all(v["max"] == 0.0 for v in data["report"].values())
    assert "fluid.T: max 0.0 l2 0.0 PASS" in capsys.readouterr().out


def test_compare_needs_interpolation_across_grids(diffusion_run_dir, tmp_path):
    fine = tmp_path / "fine"
    assert main(["run", "diffusion-3", "--h", "16", "--out", str(fine)]) == EXIT_OK
    assert main(["compare", str(diffusion_run_dir), str(fine)]) == EXIT_INPUT
    assert main(["compare", str(diffusion_run_dir), str(fine), "--interpolate", "--tol", "1e-2"]) == EXIT_OK
    assert main(["compare", str(diffusion_run_dir), str(fine), "--interpolate", "--tol", "1e-12"]) == EXIT_SUITE


def test_compare_rejects_non_runs(tmp_path):
    assert main(["compare", str(tmp_path), str(tmp_path)]) == EXIT_INPUT


def test_solver_failure_exit_code(tmp_path, capsys):
    code = main(["run", "cavity-re100", "--method", "simple", "--set", "solver.simple_max_iters=1",
                 "--set", "solver.simple_tol=1e-30", "--set", "geometry.fluid.cells=[6, 6]",
                 "--out", str(tmp_path / "r")])
    assert code == EXIT_SOLVER
    assert "solver failure" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["run", "no-such-case"],
    ["run", "diffusion-3", "--set", "novalue"],
    ["run", "diffusion-3", "--cfl", "0.5"],
    ["run", "diffusion-3", "--coupling", "gauss"],
    ["cases", "--show", "no-such-case"],
    ["suite", "no-such-suite"],
    [],
])
def test_invalid_input_exit_code(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == EXIT_INPUT


def test_cases_listing(capsys):
    assert main(["cases"]) == EXIT_OK
    names = capsys.readouterr().out.split()
    assert "cavity-re100" in names and "natural-convection-2" in names
    assert main(["cases", "--show", "diffusion-2"]) == EXIT_OK
    assert "mean-temperature" in capsys.readouterr().out


def test_stability_without_mach_is_neutral(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["stability", "--cm-min", "0", "--cm-max", "0", "--cm-steps", "1", "--theta-steps", "5",
                 "--out", str(out)]) == EXIT_OK
    assert "max modulus 1.0 stable" in capsys.readouterr().out
    cols = read_csv(out / "stability.csv")
    assert np.all(cols["max_modulus"] == 1.0)


def test_stability_flags_unstable_mach(tmp_path, capsys):
    assert main(["stability", "--cm-max", "2", "--cm-steps", "5", "--cs", "10", "--theta-steps", "9",
                 "--out", str(tmp_path)]) == EXIT_OK
    assert "UNSTABLE" in capsys.readouterr().out


def test_random_stability_records_seed(tmp_path, capsys):
    assert main(["stability", "--random", "50", "--seed", "7", "--out", str(tmp_path)]) == EXIT_OK
    line = capsys.readouterr().out
    assert line.strip().endswith("seed 7") and "lemma mismatches 0" in line


@pytest.mark.parametrize("argv", [
    ["stability", "--random", "-1"],
    ["stability", "--cm-steps", "0"],
    ["stability", "--cm-min", "1", "--cm-max", "0"],
])
def test_empty_sweep(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_INPUT


def test_suite_exit_codes(monkeypatch, tmp_path, capsys):
    ok = lambda: [suites.Check("0", "fine", True, "ok")]
    bad = lambda: [suites.Check("0", "broken", False, "no")]
    monkeypatch.setattr(suites, "SUITES", {"good": [ok], "bad": [ok, bad]})
    assert main(["suite", "good"]) == EXIT_OK
    assert main(["suite", "bad", "--out", str(tmp_path)]) == EXIT_SUITE
    out = capsys.readouterr().out
    assert "PASS [0] fine: ok" in out and "FAIL [0] broken: no" in out and "1/2 checks passed" in out
    assert (tmp_path / "suite.csv").read_text().splitlines()[-1] == "0,broken,0,no"


def test_worker_count(monkeypatch):
    monkeypatch.delenv("CHT_FVM_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("CHT_FVM_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("CHT_FVM_THREADS", "0")
    assert main(["suite", "table1"]) == EXIT_INPUT
