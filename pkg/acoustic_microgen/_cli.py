import logging
import sys
from pathlib import Path
from typing import Optional

import click

from acoustic_microgen._base import Device
from acoustic_microgen._utils import get_log_level
from acoustic_microgen.coil import CoilMaterial
from acoustic_microgen.commands import Command, CommandOptions, design_variable, run_command
from acoustic_microgen.devicefile import load_bundled, parse_device, parse_measured
from acoustic_microgen.exceptions import DomainError, MicrogenException
from acoustic_microgen.types import Grid


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log numerical progress")
def cli(verbose):
    """
    Acoustic microgenerator simulator
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else get_log_level(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def device_option():
    return click.option(
        "--device",
        "device_path",
        type=click.Path(path_type=Path),
        help="Device file (defaults to the bundled nominal device)",
    )


def out_option():
    return click.option(
        "--out",
        type=click.Path(dir_okay=False, path_type=Path),
        help="Write the CSV here instead of stdout",
    )


def coil_material_option():
    return click.option(
        "--coil-material",
        type=click.Choice([m.value for m in CoilMaterial], case_sensitive=False),
        callback=lambda c, p, v: CoilMaterial.init(v) if v else None,
        help="Override the coil resistivity with a material preset",
    )


def variable_options(multiple: bool):
    def decorator(fn):
        fn = click.option(
            "--hi", type=float, multiple=multiple, help="Upper bound (SI units)"
        )(fn)
        fn = click.option(
            "--lo", type=float, multiple=multiple, help="Lower bound (SI units)"
        )(fn)
        return click.option(
            "--variable",
            "variables",
            multiple=multiple,
            help="Parameter to vary, e.g. beam_thickness",
        )(fn)

    return decorator


def common_options(fn):
    for option in (coil_material_option(), out_option(), device_option()):
        fn = option(fn)

    return fn


def _design_variables(names, los, his) -> tuple:
    names = [names] if isinstance(names, str) else list(names or [])
    los = [los] if isinstance(los, float) else list(los or [])
    his = [his] if isinstance(his, float) else list(his or [])
    if len(los) > len(names) or len(his) > len(names):
        raise DomainError("Every --lo/--hi needs a matching --variable.")

    los += [None] * (len(names) - len(los))
    his += [None] * (len(names) - len(his))
    return tuple(design_variable(n, lo, hi) for n, lo, hi in zip(names, los, his))


def _run(command: Command, device_path: Optional[Path], out: Optional[Path], **options):
    try:
        device = _create_device(device_path)
        table = run_command(command, device, CommandOptions.create(**options))
    except MicrogenException as err:
        click.echo(f"ERROR [{err.category}]: {err}", err=True)
        sys.exit(err.exit_code)

    if out:
        table.write(out)
        click.echo(f"Wrote {len(table)} row(s) to '{out}'.", err=True)
    else:
        click.echo(table.to_csv(), nl=False)


@cli.command()
@common_options
def modal(device_path, out, coil_material):
    """
    Stiffness, moving mass and first-mode frequency
    """
    _run(Command.MODAL, device_path, out, coil_material=coil_material)


@cli.command()
@common_options
@click.option("--points", type=int, help="Number of displacements")
@click.option("--offset-min", type=float, help="Smallest magnet displacement toward the coil")
@click.option("--offset-max", type=float, help="Largest magnet displacement toward the coil")
def flux(device_path, out, coil_material, points, offset_min, offset_max):
    """
    Coil flux and flux gradient versus magnet displacement
    """
    _run(
        Command.FLUX,
        device_path,
        out,
        coil_material=coil_material,
        points=points,
        offset_min=offset_min,
        offset_max=offset_max,
    )


@cli.command()
@common_options
@click.option("--n-series", type=int, help="Report an array of N units in series")
def emf(device_path, out, coil_material, n_series):
    """
    EMF and load power at the device's drive
    """
    _run(Command.EMF, device_path, out, coil_material=coil_material, n_series=n_series)


@cli.command()
@common_options
@click.option("--f-lo", type=float, default=100.0, show_default=True)
@click.option("--f-hi", type=float, default=2000.0, show_default=True)
@click.option("--points", type=int, help="Number of frequencies  [default: 191]")
@click.option("--log", "log_grid", is_flag=True, help="Space frequencies logarithmically")
def sweep(device_path, out, coil_material, f_lo, f_hi, points, log_grid):
    """
    Steady-state response over a frequency range
    """
    _run(
        Command.SWEEP,
        device_path,
        out,
        coil_material=coil_material,
        f_lo=f_lo,
        f_hi=f_hi,
        points=points,
        grid=Grid.LOG if log_grid else Grid.LINEAR,
    )


@cli.command()
@common_options
@click.option("--dt", type=float, help="Time step in seconds")
@click.option("--duration", type=float, help="Simulated time in seconds")
@click.option(
    "--amplitude",
    type=float,
    help="Steady stroke in meters (defaults to the drive's, clamped to half the coil gap)",
)
def simulate(device_path, out, coil_material, dt, duration, amplitude):
    """
    Time-domain response to the device's drive
    """
    _run(
        Command.SIMULATE,
        device_path,
        out,
        coil_material=coil_material,
        dt=dt,
        duration=duration,
        amplitude=amplitude,
    )


@cli.command()
@common_options
@click.option("--target-hz", type=float, required=True)
@variable_options(multiple=False)
@click.option("--tol", type=float, default=0.1, show_default=True, help="Tolerance in Hz")
def fit(device_path, out, coil_material, target_hz, variables, lo, hi, tol):
    """
    Match the first-mode frequency to a target
    """
    try:
        design_variables = _design_variables(variables, lo, hi)
    except MicrogenException as err:
        click.echo(f"ERROR [{err.category}]: {err}", err=True)
        sys.exit(err.exit_code)

    _run(
        Command.FIT,
        device_path,
        out,
        coil_material=coil_material,
        target_hz=target_hz,
        variables=design_variables,
        tol=tol,
    )


@cli.command()
@common_options
@variable_options(multiple=True)
@click.option("--target-hz", type=float, help="Match this frequency instead of maximizing EMF")
@click.option("--band-lo", type=float, default=200.0, show_default=True)
@click.option("--band-hi", type=float, default=1500.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--budget", type=int, default=2000, show_default=True)
@click.option("--extra-starts", type=int, default=0, show_default=True)
@click.option("--die-size", type=float, default=3e-3, show_default=True)
def optimize(
    device_path,
    out,
    coil_material,
    variables,
    lo,
    hi,
    target_hz,
    band_lo,
    band_hi,
    seed,
    budget,
    extra_starts,
    die_size,
):
    """
    Search for the largest EMF within the constraints
    """
    try:
        design_variables = _design_variables(variables, lo, hi)
    except MicrogenException as err:
        click.echo(f"ERROR [{err.category}]: {err}", err=True)
        sys.exit(err.exit_code)

    _run(
        Command.OPTIMIZE,
        device_path,
        out,
        coil_material=coil_material,
        variables=design_variables,
        target_hz=target_hz,
        band_lo=band_lo,
        band_hi=band_hi,
        seed=seed,
        budget=budget,
        extra_starts=extra_starts,
        die_size=die_size,
    )


@cli.command()
@common_options
@click.option(
    "--measured",
    "measured_path",
    type=click.Path(path_type=Path),
    help="Measurement file (defaults to the bundled measurements)",
)
def report(device_path, out, coil_material, measured_path):
    """
    Compare the model against measurements
    """
    measured = None
    if measured_path:
        try:
            measured = parse_measured(measured_path)
        except MicrogenException as err:
            click.echo(f"ERROR [{err.category}]: {err}", err=True)
            sys.exit(err.exit_code)

    _run(Command.REPORT, device_path, out, coil_material=coil_material, measured=measured)


@cli.command()
@common_options
@click.option("--amplitude", type=float, help="Deflection in meters (defaults to the drive's)")
def stress(device_path, out, coil_material, amplitude):
    """
    Bending stress and yield margin
    """
    _run(Command.STRESS, device_path, out, coil_material=coil_material, amplitude=amplitude)


def _create_device(path: Optional[Path] = None) -> Device:
    # Abstracted for testing purposes.
    return parse_device(path) if path else load_bundled()
