from pathlib import Path

import pytest
from click.testing import CliRunner

from acoustic_microgen._cli import _create_device
from acoustic_microgen._cli import cli as root_cli
from acoustic_microgen.exceptions import DeviceFileError


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def cli():
    return root_cli


@pytest.fixture(autouse=True)
def mock_create_device(mocker, device):
    patch = mocker.patch("acoustic_microgen._cli._create_device")
    patch.return_value = device
    return patch


def data_rows(output):
    lines = [line for line in output.splitlines() if line and line[0] in "-0123456789"]
    return lines


def test_help(runner, cli):
    result = runner.invoke(cli, ("--help",))
    assert result.exit_code == 0
    for command in ("modal", "flux", "emf", "sweep", "simulate", "fit", "optimize", "report"):
        assert command in result.output


def test_modal(runner, cli, mock_create_device):
    result = runner.invoke(cli, ("modal",))
    assert result.exit_code == 0, result.output
    assert "# units: N/m,kg,Hz,Hz,Hz" in result.output
    assert "natural_frequency" in result.output
    assert len(data_rows(result.output)) == 1
    mock_create_device.assert_called_once_with(None)


def test_device_path(runner, cli, mock_create_device):
    result = runner.invoke(cli, ("modal", "--device", "device.toml"))
    assert result.exit_code == 0, result.output
    mock_create_device.assert_called_once_with(Path("device.toml"))


def test_bad_device(runner, cli, mock_create_device):
    error = DeviceFileError("Missing key 'count' in [beam]", key="beam.count")
    mock_create_device.side_effect = error
    result = runner.invoke(cli, ("modal",))
    assert result.exit_code == 2
    assert "ERROR [parse]: Missing key 'count' in [beam] (key 'beam.count')" in result.output


def test_emf_array(runner, cli):
    result = runner.invoke(cli, ("emf", "--n-series", "3"))
    assert result.exit_code == 0, result.output
    assert "array_emf_pp" in result.output


def test_emf_copper(runner, cli):
    result = runner.invoke(cli, ("emf", "--coil-material", "copper"))
    assert result.exit_code == 0, result.output


def test_sweep(runner, cli):
    arguments = ("--points", "5", "--log", "--f-lo", "100", "--f-hi", "1e4")
    result = runner.invoke(cli, ("sweep", *arguments))
    assert result.exit_code == 0, result.output
    rows = data_rows(result.output)
    assert len(rows) == 5
    assert rows[2].startswith("1000,")


def test_sweep_bad_range(runner, cli):
    result = runner.invoke(cli, ("sweep", "--f-lo", "2000", "--f-hi", "100"))
    assert result.exit_code == 2
    assert "ERROR [domain]" in result.output


def test_flux_bad_range(runner, cli):
    result = runner.invoke(cli, ("flux", "--offset-min", "1e-6", "--offset-max", "-1e-6"))
    assert result.exit_code == 2
    assert "ERROR [domain]" in result.output


def test_simulate(runner, cli):
    result = runner.invoke(cli, ("simulate",))
    assert result.exit_code == 0, result.output
    displacements = [float(row.split(",")[1]) for row in data_rows(result.output)]
    # The drive's 50 um stroke is clamped to half the 10 um coil gap.
    assert 0 < max(abs(z) for z in displacements) < 10e-6


def test_simulate_amplitude_reaches_coil(runner, cli):
    result = runner.invoke(cli, ("simulate", "--amplitude", "20e-6"))
    assert result.exit_code == 2
    assert "reaches the coil" in result.output


def test_fit(runner, cli):
    result = runner.invoke(cli, ("fit", "--target-hz", "470"))
    assert result.exit_code == 0, result.output
    assert "beam_thickness" in result.output


def test_fit_out_of_reach(runner, cli):
    arguments = ("--variable", "beam_thickness", "--lo", "5e-6", "--hi", "15e-6")
    result = runner.invoke(cli, ("fit", "--target-hz", "2000", *arguments))
    assert result.exit_code == 3
    assert "ERROR [infeasible]" in result.output


def test_fit_unknown_variable(runner, cli):
    result = runner.invoke(cli, ("fit", "--target-hz", "470", "--variable", "beam_color"))
    assert result.exit_code == 2
    assert "ERROR [domain]: Unknown Parameter 'beam_color'" in result.output


def test_fit_requires_target(runner, cli):
    result = runner.invoke(cli, ("fit",))
    assert result.exit_code == 2
    assert "--target-hz" in result.output


def test_optimize_unmatched_bound(runner, cli):
    result = runner.invoke(cli, ("optimize", "--lo", "1e-6"))
    assert result.exit_code == 2
    assert "matching --variable" in result.output


def test_stress_out(runner, cli, temp_path):
    out = temp_path / "stress.csv"
    result = runner.invoke(cli, ("stress", "--amplitude", "2.8e-6", "--out", str(out)))
    assert result.exit_code == 0, result.output
    assert f"Wrote 1 row(s) to '{out}'." in result.output
    text = out.read_text()
    assert text.startswith("# units: m,Pa,1,1,1\n")
    assert len(data_rows(text)) == 1


def test_report(runner, cli, temp_path):
    measured = temp_path / "measured.toml"
    measured.write_text("[measured]\nresonance = 470.0\n")
    result = runner.invoke(cli, ("report", "--measured", str(measured)))
    assert result.exit_code == 0, result.output
    assert "natural_frequency,Hz" in result.output


def test_report_missing_measurements(runner, cli, temp_path):
    result = runner.invoke(cli, ("report", "--measured", str(temp_path / "missing.toml")))
    assert result.exit_code == 2
    assert "ERROR [parse]: Cannot read" in result.output


def test_create_device(temp_path, nominal_text):
    assert _create_device().natural_frequency == pytest.approx(1007.6, abs=1)
    path = temp_path / "device.toml"
    path.write_text(nominal_text.replace("count = 4", "count = 2"))
    assert _create_device(path).stiffness == pytest.approx(375)
