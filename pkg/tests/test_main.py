import json

import pytest

import src.tools
from main import main
from src.diffraction import Atom, DiffractionSpectrum
from src.pipeline import EXIT_FAILED, EXIT_INVALID, EXIT_PASSED
from src.tools import write_spectrum


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    root = tmp_path.resolve()
    monkeypatch.setattr(src.tools, "ARTIFACT_DIR", root)
    return root


def test_no_command():
    assert main([]) == EXIT_INVALID


def test_selftest_list(capsys):
    assert main(["selftest", "--list"]) == EXIT_PASSED
    assert "diffraction: Poisson summation on [0, 2^12)" in capsys.readouterr().out


def test_topology_needs_input():
    assert main(["topology", "flc"]) == EXIT_INVALID


def test_run_rejects_negative_epsilon(workdir):
    path = workdir / "bad.json"
    path.write_text(json.dumps({"generator": {"kind": "lattice", "params": {}}, "epsilon": -1.0}), encoding="utf-8")
    assert main(["run", "--config", str(path)]) == EXIT_INVALID


def test_generate_then_flc(workdir):
    comb = str(workdir / "comb.csv")
    assert main(["generate", "--example", "lattice", "--window", "0,50", "--out", comb]) == EXIT_PASSED
    assert main(["topology", "flc", "--in", comb, "--radius", "2"]) == EXIT_PASSED


def test_generate_outside_artifacts(workdir, tmp_path_factory):
    outside = tmp_path_factory.mktemp("elsewhere") / "comb.csv"
    assert main(["generate", "--example", "lattice", "--window", "0,5", "--out", str(outside)]) == EXIT_INVALID


def test_autocorr_and_purity_gate(workdir, capsys):
    gamma = str(workdir / "gamma.csv")
    spectrum = str(workdir / "spectrum.csv")
    common = ["--example", "thue-morse", "--base", "64", "--n-max", "3"]
    assert main(["autocorr", *common, "--R", "3", "--out", gamma]) == EXIT_PASSED
    assert main(["diffract", *common, "--k-range=-0.5,0.5", "--out", spectrum]) == EXIT_PASSED
    capsys.readouterr()
    assert main(["purity", "--gamma", gamma, "--spectrum", spectrum, "--min", "0.98"]) == EXIT_FAILED
    assert json.loads(capsys.readouterr().out)["purity"] == 0.0


def test_fell_trials():
    assert main(["topology", "fell", "--samples", "50"]) == EXIT_PASSED


def test_eigengroup_below_purity_gate_fails(workdir, capsys):
    spectrum = DiffractionSpectrum((Atom((0.0,), 1.0, 0.0),), {"dim": 1, "box": [[0.0], [64.0]],
                                                               "k_range": [[-0.5], [0.5]]}, purity=0.5)
    path = str(workdir / "half.csv")
    write_spectrum(spectrum, path)
    capsys.readouterr()
    code = main(["verify", "eigengroup", "--example", "lattice", "--base", "16", "--n-max", "2", "--spectrum", path])
    assert code == EXIT_FAILED
    record = json.loads(capsys.readouterr().out)
    assert record == {"purity": 0.5, "tolerance": 0.95, "gate": ">=", "passed": False}


def test_spectralmass_off_atom_fails(workdir, capsys):
    code = main(["verify", "spectralmass", "--example", "lattice", "--base", "64", "--n-max", "3", "--k", "0.5"])
    assert code == EXIT_FAILED
    record = json.loads(capsys.readouterr().out)
    assert record["rejected"] and not record["passed"]
    assert record["gate"] == "<="
