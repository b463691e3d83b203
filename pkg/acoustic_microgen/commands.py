"""
The commands behind the CLI. Each takes a parsed device and options and
returns a :class:`~acoustic_microgen.devicefile.ResultTable`.
"""

import logging
import math
from enum import Enum
from typing import Optional, Union

import numpy as np
from pydantic import NonNegativeInt, PositiveInt

from acoustic_microgen._base import Device
from acoustic_microgen.coil import CoilMaterial, coil_flux_table
from acoustic_microgen.design import (
    consistency_report,
    match_frequency,
    maximize_emf,
)
from acoustic_microgen.devicefile import ResultTable, bundled_path, parse_measured
from acoustic_microgen.exceptions import DomainError
from acoustic_microgen.response import (
    array_series,
    drive_amplitude,
    drive_force,
    frequency_sweep,
    load_power,
    pp_to_rms,
    response_at,
    sinusoid,
    steady_amplitude,
    time_simulate,
)
from acoustic_microgen.suspension import max_bending_stress, yield_margin
from acoustic_microgen.types import (
    DesignVariable,
    DriveSpec,
    Finite,
    Grid,
    LoadCircuit,
    MeasuredReference,
    NonNegative,
    Parameter,
    Positive,
    SearchConfig,
    Spec,
    TargetBand,
)

logger = logging.getLogger(__name__)

DEFAULT_BOUNDS: dict[Parameter, tuple[float, float]] = {
    Parameter.BEAM_LENGTH: (200e-6, 2e-3),
    Parameter.BEAM_WIDTH: (20e-6, 200e-6),
    Parameter.BEAM_THICKNESS: (5e-6, 40e-6),
    Parameter.PLATE_SIDE: (1e-3, 3e-3),
    Parameter.MAGNET_THICKNESS: (100e-6, 1e-3),
    Parameter.COIL_TURNS: (1, 20),
    Parameter.COIL_GAP: (5e-6, 100e-6),
    Parameter.YOUNGS_MODULUS: (100e9, 300e9),
}
DEFAULT_SEARCH = (Parameter.BEAM_THICKNESS, Parameter.COIL_TURNS)
SWEEP_POINTS = 191
FLUX_POINTS = 21
SIMULATION_PERIODS = 20
STEPS_PER_PERIOD = 100
MAX_STROKE_FRACTION = 0.5


class Command(Enum):
    MODAL = "modal"
    """Stiffness, moving mass, and first-mode frequency."""

    FLUX = "flux"
    """Coil flux and its gap derivative over a range of magnet displacements."""

    EMF = "emf"
    """EMF and load power at the device's drive."""

    SWEEP = "sweep"
    """Steady-state response over a frequency grid."""

    SIMULATE = "simulate"
    """Time-domain trace under sinusoidal forcing."""

    FIT = "fit"
    """Match the first-mode frequency to a target by varying one parameter."""

    OPTIMIZE = "optimize"
    """Search for the design with the largest EMF under constraints."""

    REPORT = "report"
    """Compare the model against measured values."""

    STRESS = "stress"
    """Beam bending stress and yield margin at an amplitude."""

    @classmethod
    def init(cls, identifier: Union[str, "Command"]) -> "Command":
        if isinstance(identifier, Command):
            return identifier

        elif isinstance(identifier, str):
            if "." in identifier:
                # Click being weird, value like "command.modal".
                identifier = identifier.split(".")[-1]

            try:
                return Command(identifier.lower())
            except ValueError as err:
                raise DomainError(f"Unknown command '{identifier}'.") from err

        # Unexpected.
        raise TypeError(identifier)


class CommandOptions(Spec):
    """
    Options shared by all commands. Each command reads the ones it needs.
    """

    f_lo: Positive = 100.0
    f_hi: Positive = 2000.0
    points: Optional[PositiveInt] = None
    grid: Grid = Grid.LINEAR
    target_hz: Optional[Positive] = None
    tol: Positive = 0.1
    variables: tuple[DesignVariable, ...] = ()
    band_lo: Positive = 200.0
    band_hi: Positive = 1500.0
    seed: int = 0
    budget: PositiveInt = 2000
    extra_starts: NonNegativeInt = 0
    die_size: Positive = 3e-3
    n_series: Optional[PositiveInt] = None
    coil_material: Optional[CoilMaterial] = None
    amplitude: Optional[NonNegative] = None
    offset_min: Optional[Finite] = None
    offset_max: Optional[Finite] = None
    duration: Optional[Positive] = None
    dt: Optional[Positive] = None
    measured: Optional[MeasuredReference] = None


def design_variable(
    name: Union[Parameter, str], lo: Optional[float] = None, hi: Optional[float] = None
) -> DesignVariable:
    """
    A design variable, with bounds defaulting to the parameter's usual range.
    """
    parameter = Parameter.init(name)
    default_lo, default_hi = DEFAULT_BOUNDS[parameter]
    return DesignVariable.create(
        name=parameter,
        lo=default_lo if lo is None else lo,
        hi=default_hi if hi is None else hi,
    )


def _modal(device: Device, options: CommandOptions) -> ResultTable:
    low, high = device.frequency_band
    table = ResultTable(
        columns=(
            "stiffness_total",
            "effective_mass",
            "natural_frequency",
            "f1_modulus_low",
            "f1_modulus_high",
        ),
        units=("N/m", "kg", "Hz", "Hz", "Hz"),
    )
    table.append(device.stiffness, device.mass, device.natural_frequency, low, high)
    return table


def _flux(device: Device, options: CommandOptions) -> ResultTable:
    gap = device.coil.plane_height
    lo = -gap / 2 if options.offset_min is None else options.offset_min
    hi = gap / 2 if options.offset_max is None else options.offset_max
    if lo > hi:
        raise DomainError(f"offset_min ({lo}) must not exceed offset_max ({hi}).")

    offsets = np.linspace(lo, hi, options.points or FLUX_POINTS)
    flux, gradient = coil_flux_table(device.magnet, device.coil, offsets, config=device.quadrature)
    table = ResultTable(
        columns=("offset", "gap", "flux", "flux_gradient"), units=("m", "m", "Wb", "Wb/m")
    )
    for offset, phi, slope in zip(offsets, flux, gradient):
        table.append(float(offset), gap - float(offset), float(phi), float(slope))

    return table


def _emf(device: Device, options: CommandOptions) -> ResultTable:
    point = response_at(device)
    columns = [
        "frequency",
        "amplitude",
        "velocity_peak",
        "flux_gradient",
        "emf_pp",
        "coil_resistance",
        "load_resistance",
        "load_power",
    ]
    units = ["Hz", "m", "m/s", "Wb/m", "V", "ohm", "ohm", "W"]
    row = [
        point.frequency,
        point.amplitude,
        point.velocity_peak,
        device.flux_gradient,
        point.emf_pp,
        device.coil_resistance,
        device.load_resistance,
        point.load_power,
    ]
    if options.n_series:
        array_emf, array_resistance = array_series(
            point.emf_pp, device.coil_resistance, options.n_series
        )
        matched = LoadCircuit(coil_resistance=array_resistance, load_resistance=array_resistance)
        columns += ["n_series", "array_emf_pp", "array_resistance", "array_matched_power"]
        units += ["1", "V", "ohm", "W"]
        row += [
            options.n_series,
            array_emf,
            array_resistance,
            load_power(pp_to_rms(array_emf), matched),
        ]

    return ResultTable(columns=tuple(columns), units=tuple(units), rows=[tuple(row)])


def _sweep(device: Device, options: CommandOptions) -> ResultTable:
    curve = frequency_sweep(
        device,
        device.drive,
        options.f_lo,
        options.f_hi,
        options.points or SWEEP_POINTS,
        grid=options.grid,
    )
    table = ResultTable(
        columns=("frequency", "amplitude", "velocity_peak", "emf_pp", "load_power"),
        units=("Hz", "m", "m/s", "V", "W"),
    )
    for p in curve.points:
        table.append(p.frequency, p.amplitude, p.velocity_peak, p.emf_pp, p.load_power)

    return table


def _simulated_force(device: Device, drive: DriveSpec, options: CommandOptions) -> float:
    force = drive_force(device, drive)
    target = options.amplitude
    stroke = drive_amplitude(device, drive)
    limit = MAX_STROKE_FRACTION * device.coil.plane_height
    if target is None and stroke > limit:
        logger.warning(
            "Drive stroke of ±%.3g m clamped to ±%.3g m, half the %.3g m coil gap. "
            "Pass an amplitude to override.",
            stroke,
            limit,
            device.coil.plane_height,
        )
        target = limit

    if target is None:
        return force

    per_newton = steady_amplitude(device.oscillator, 1.0, drive.frequency)
    if not math.isfinite(per_newton):
        raise DomainError("The steady stroke is unbounded at this drive and cannot be scaled.")

    return target / per_newton


def _simulate(device: Device, options: CommandOptions) -> ResultTable:
    if device.drive is None:
        raise DomainError("The device has no drive to simulate.")

    frequency = device.drive.frequency
    dt = options.dt or 1 / (STEPS_PER_PERIOD * max(frequency, device.natural_frequency))
    duration = options.duration or SIMULATION_PERIODS / frequency
    forcing = sinusoid(_simulated_force(device, device.drive, options), frequency)
    trace = time_simulate(
        device.oscillator,
        device.magnet,
        device.coil,
        forcing,
        dt,
        duration,
        config=device.quadrature,
    )
    table = ResultTable(
        columns=("time", "displacement", "velocity", "emf", "force"),
        units=("s", "m", "m/s", "V", "N"),
    )
    for row in zip(trace.time, trace.displacement, trace.velocity, trace.emf, trace.force):
        table.append(*(float(v) for v in row))

    return table


def _fit(device: Device, options: CommandOptions) -> ResultTable:
    if options.target_hz is None:
        raise DomainError("'fit' needs a target frequency.")

    variable = options.variables[0] if options.variables else design_variable(
        Parameter.BEAM_THICKNESS
    )
    value = match_frequency(device, variable, options.target_hz, tol=options.tol)
    fitted = device.with_value(variable.name, value)
    table = ResultTable(
        columns=("parameter", "value", "natural_frequency", "target"),
        units=("-", "SI", "Hz", "Hz"),
    )
    table.append(variable.name.value, value, fitted.natural_frequency, options.target_hz)
    return table


def _optimize(device: Device, options: CommandOptions) -> ResultTable:
    variables = options.variables or tuple(design_variable(p) for p in DEFAULT_SEARCH)
    result = maximize_emf(
        device,
        variables,
        TargetBand.create(f_lo=options.band_lo, f_hi=options.band_hi),
        config=SearchConfig.create(
            budget=options.budget,
            seed=options.seed,
            extra_starts=options.extra_starts,
            die_size=options.die_size,
        ),
        target_hz=options.target_hz,
    )
    columns = [v.name.value for v in result.variables] + [
        "natural_frequency",
        "emf_pp",
        "amplitude",
        "yield_margin_low",
        "footprint",
        "evaluations",
        "status",
    ]
    units = ["SI"] * len(result.variables) + ["Hz", "V", "m", "1", "m", "1", "-"]
    row = list(result.values) + [
        result.natural_frequency,
        result.emf_pp,
        result.amplitude,
        result.margin.low,
        result.footprint,
        len(result.evaluations),
        result.label,
    ]
    return ResultTable(columns=tuple(columns), units=tuple(units), rows=[tuple(row)])


def _report(device: Device, options: CommandOptions) -> ResultTable:
    measured = options.measured or parse_measured(bundled_path("measured"))
    report = consistency_report(device, measured)
    table = ResultTable(
        columns=(
            "quantity",
            "unit",
            "model_nominal",
            "model_measured_thickness",
            "measured",
            "ratio",
            "discrepancy",
            "available",
        ),
        units=("-", "-", "unit", "unit", "unit", "1", "1", "1"),
    )
    for row in report:
        table.append(
            row.quantity,
            row.unit,
            row.model_nominal,
            row.model_measured_thickness,
            row.measured,
            row.ratio,
            row.discrepancy,
            int(row.available),
        )

    return table


def _stress(device: Device, options: CommandOptions) -> ResultTable:
    if options.amplitude is not None:
        deflection = options.amplitude
    elif device.drive is not None:
        deflection = drive_amplitude(device, device.drive)
    else:
        raise DomainError("'stress' needs an amplitude or a device drive.")

    if not math.isfinite(deflection):
        raise DomainError("The drive amplitude is unbounded; pass an explicit amplitude.")

    stress = max_bending_stress(device.material, device.beam, deflection)
    margin = yield_margin(stress, device.material)
    table = ResultTable(
        columns=("deflection", "stress", "yield_margin_low", "yield_margin_high", "at_risk"),
        units=("m", "Pa", "1", "1", "1"),
    )
    table.append(deflection, stress, margin.low, margin.high, int(margin.at_risk))
    return table


_HANDLERS = {
    Command.MODAL: _modal,
    Command.FLUX: _flux,
    Command.EMF: _emf,
    Command.SWEEP: _sweep,
    Command.SIMULATE: _simulate,
    Command.FIT: _fit,
    Command.OPTIMIZE: _optimize,
    Command.REPORT: _report,
    Command.STRESS: _stress,
}


def run_command(
    command: Union[Command, str], device: Device, options: Optional[CommandOptions] = None
) -> ResultTable:
    """
    Run one command against a device.

    Args:
        command (:class:`~acoustic_microgen.commands.Command` | str): The command.
        device (:class:`~acoustic_microgen.Device`): The parsed device.
        options (:class:`~acoustic_microgen.commands.CommandOptions` | None): Command
          options. ``coil_material`` overrides the coil resistivity for every
          command.

    Raises:
        :class:`~acoustic_microgen.exceptions.MicrogenException`: The
          category of the failure decides the CLI exit code.

    Returns:
        :class:`~acoustic_microgen.devicefile.ResultTable`
    """
    command = Command.init(command)
    options = options or CommandOptions()
    if options.coil_material is not None:
        device = device.replace(coil=options.coil_material.apply(device.coil))

    logger.debug("Running '%s'.", command.value)
    return _HANDLERS[command](device, options)
