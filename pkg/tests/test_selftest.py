import src.generators
from src.selftest import list_checks, run_selftest


def test_list_checks():
    names = list_checks()
    assert len(names) == len(set(names))
    assert "diffraction: Poisson summation on [0, 2^12)" in names


def test_selftest_passes(capsys):
    assert run_selftest() == 0
    out = capsys.readouterr().out
    assert out.startswith(f"1..{len(list_checks())}")
    assert "not ok" not in out


def test_selftest_detects_rounded_slope(monkeypatch, capsys):
    monkeypatch.setitem(src.generators.SLOPES, "golden", 1.618)
    assert run_selftest() == 1
    assert "# failed: generators: fibonacci gaps are units of Z[tau]" in capsys.readouterr().out
