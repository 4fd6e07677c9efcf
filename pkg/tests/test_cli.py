import os

import pytest

from spdcwg.cli import main


def test_validate_default(capsys):
    assert main(["validate"]) == 0
    assert "valid" in capsys.readouterr().out


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand(capsys):
    assert main([]) == 1


def test_help_exits_zero(capsys):
    assert main(["hom", "--help"]) == 0
    assert "--seed" in capsys.readouterr().out


def test_validation_error_exit_code(capsys):
    assert main(["validate", "--set", "filters.if11.fwhm_nm=-1", "--set", "pump.bogus=2"]) == 1
    err = capsys.readouterr().err
    assert "filters.if11.fwhm_nm" in err and "pump.bogus" in err


def test_runtime_error_exit_code(tmp_path, capsys):
    assert main(["hom", "-o", str(tmp_path), "--set", "pump.wavelength_nm=300"]) == 2
    assert "hom/spectrum" in capsys.readouterr().err


def test_io_error_exit_code(tmp_path, capsys):
    assert main(["hom", "-c", str(tmp_path / "missing.toml"), "-o", str(tmp_path)]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["modes", "-o", str(blocker)]) == 3


def test_hom_repeatable(tmp_path):
    args = ["hom", "--set", "pump.wavelength_nm=400.63", "--seed", "7"]
    assert main(args + ["-o", str(tmp_path / "a")]) == 0
    assert main(args + ["-o", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a/hom/data.csv").read_bytes() == (tmp_path / "b/hom/data.csv").read_bytes()


def test_writes_only_inside_output_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["experiment", "-o", "results"]) == 0
    assert os.listdir(tmp_path) == ["results"]
    assert sorted(os.listdir(tmp_path / "results")) == sorted(
        ["bands", "islands", "heralded", "hom", "fringes", "summary"])


@pytest.mark.parametrize("cmd", [["modes", "--wavelength", "801"], ["spectra"], ["tune-pump", "--filter", "if3"],
                                 ["bands", "--set", "scenarios.bands.grid_n=11"], ["islands"], ["fringes"],
                                 ["summary", "--noiseless"]])
def test_subcommands_run(tmp_path, cmd):
    assert main(cmd + ["-o", str(tmp_path)]) == 0


def test_tune_pump_unknown_filter(tmp_path):
    assert main(["tune-pump", "--filter", "if99", "-o", str(tmp_path)]) == 1
