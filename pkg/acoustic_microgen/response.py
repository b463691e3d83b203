"""
Forced response of the suspended magnet and the voltage it induces in
the coil: harmonic steady state, explicit time integration, frequency
sweeps, load power, and series arrays.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline

from acoustic_microgen._utils import require_finite, require_positive
from acoustic_microgen.coil import coil_flux_profile
from acoustic_microgen.exceptions import DomainError, NumericalError
from acoustic_microgen.types import (
    CoilSpec,
    DriveKind,
    DriveSpec,
    Grid,
    LoadCircuit,
    MagnetSpec,
    OscillatorParams,
    PlateSpec,
    QuadratureConfig,
    ResponseCurve,
    ResponsePoint,
)

if TYPE_CHECKING:
    from acoustic_microgen._base import Device

logger = logging.getLogger(__name__)

REFERENCE_PRESSURE = 20e-6
"""Pressure amplitude of 0 dB SPL, in pascals."""

STEPS_PER_PERIOD_MIN = 20
ENERGY_GROWTH_LIMIT = 0.01
PROFILE_MARGIN = 1.1

Forcing = Callable[[np.ndarray], Union[np.ndarray, float]]


def spl_to_pressure(spl: float) -> float:
    require_finite(spl=spl)
    return REFERENCE_PRESSURE * 10 ** (spl / 20)


def acoustic_force(
    pressure: float, plate: Optional[PlateSpec] = None, area: Optional[float] = None
) -> float:
    """
    Force amplitude in newtons of ``pressure`` acting on ``area``, which
    defaults to the plate footprint.
    """
    require_finite(pressure=pressure)
    if pressure < 0:
        raise DomainError(f"Pressure must be non-negative (got {pressure}).")

    if area is None:
        if plate is None:
            raise DomainError("Either a plate or an effective area is required.")

        area = plate.footprint

    require_positive(area=area)
    return pressure * area


def _dynamic_factor(osc: OscillatorParams, f: float) -> float:
    r = f / osc.natural_frequency
    return math.hypot(1 - r * r, 2 * osc.damping_ratio * r)


def steady_amplitude(osc: OscillatorParams, force_amplitude: float, f: float) -> float:
    """
    Steady-state displacement amplitude in meters under a sinusoidal force.

    Args:
        osc (:class:`~acoustic_microgen.types.OscillatorParams`): The oscillator.
        force_amplitude (float): Force amplitude, in newtons.
        f (float): Drive frequency, in Hz.

    Returns:
        float: ``math.inf`` for an undamped oscillator driven exactly at
        resonance.
    """
    require_positive(frequency=f)
    require_finite(force_amplitude=force_amplitude)
    if force_amplitude < 0:
        raise DomainError(f"Force amplitude must be non-negative (got {force_amplitude}).")

    static = force_amplitude / osc.stiffness
    if (factor := _dynamic_factor(osc, f)) == 0:
        if static == 0:
            return 0.0

        logger.warning("Undamped oscillator driven at resonance: amplitude is unbounded.")
        return math.inf

    return static / factor


def emf_pp(flux_gradient: float, z0: float, f: float) -> float:
    """
    Peak-to-peak EMF in volts, ``2 |dΦ/dz| z0 2πf``.
    """
    require_finite(flux_gradient=flux_gradient, frequency=f)
    if z0 < 0 or f < 0:
        raise DomainError("Amplitude and frequency must be non-negative.")
    elif flux_gradient == 0 or z0 == 0 or f == 0:
        return 0.0

    return 2 * abs(flux_gradient) * z0 * 2 * math.pi * f


def load_power(emf_rms: float, circuit: LoadCircuit) -> float:
    """
    Power in watts delivered to the load, ``V² R_L / (R_c + R_L)²``.
    """
    if emf_rms == 0 or circuit.load_resistance == 0:
        return 0.0

    total = circuit.coil_resistance + circuit.load_resistance
    return emf_rms**2 * circuit.load_resistance / total**2


def array_series(unit_emf: float, unit_resistance: float, n: int) -> tuple[float, float]:
    """
    EMF and resistance of ``n`` identical units wired in series, in phase.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"Series count must be a positive integer (got {n!r}).")

    return n * unit_emf, n * unit_resistance


def pp_to_rms(value: float) -> float:
    return value / (2 * math.sqrt(2))


def drive_force(device: "Device", drive: DriveSpec) -> float:
    """
    Sinusoidal force amplitude in newtons for a drive. A prescribed
    displacement maps to the force that produces it in steady state.
    """
    if drive.kind is DriveKind.DISPLACEMENT:
        return drive.value * device.stiffness * _dynamic_factor(device.oscillator, drive.frequency)

    pressure = drive.value if drive.kind is DriveKind.PRESSURE else spl_to_pressure(drive.value)
    return acoustic_force(pressure, area=device.effective_area)


def drive_amplitude(device: "Device", drive: DriveSpec) -> float:
    if drive.kind is DriveKind.DISPLACEMENT:
        return drive.value

    return steady_amplitude(device.oscillator, drive_force(device, drive), drive.frequency)


def response_at(device: "Device", drive: Optional[DriveSpec] = None) -> ResponsePoint:
    """
    Steady-state response of ``device`` under ``drive`` (defaults to the
    device's own drive).
    """
    drive = drive or device.drive
    if drive is None:
        raise DomainError("No drive given and the device has none.")

    f = drive.frequency
    z0 = drive_amplitude(device, drive)
    emf = emf_pp(device.flux_gradient, z0, f)
    return ResponsePoint(
        frequency=f,
        amplitude=z0,
        velocity_peak=2 * math.pi * f * z0,
        emf_pp=emf,
        load_power=load_power(pp_to_rms(emf), device.load_circuit),
    )


def frequency_sweep(
    device: "Device",
    drive: Optional[DriveSpec],
    f_lo: float,
    f_hi: float,
    n_points: int,
    grid: Union[Grid, str] = Grid.LINEAR,
) -> ResponseCurve:
    """
    Steady-state response at ``n_points`` frequencies from ``f_lo`` to ``f_hi``.

    Args:
        device (:class:`~acoustic_microgen.Device`): The device.
        drive (:class:`~acoustic_microgen.types.DriveSpec` | None): Sets the drive
          kind and level; its frequency is replaced by the grid.
        f_lo (float): Lowest frequency, in Hz.
        f_hi (float): Highest frequency, in Hz.
        n_points (int): Number of grid points, at least 2.
        grid (:class:`~acoustic_microgen.types.Grid`): Linear or logarithmic spacing.

    Returns:
        :class:`~acoustic_microgen.types.ResponseCurve`
    """
    require_positive(f_lo=f_lo, f_hi=f_hi)
    if f_lo >= f_hi:
        raise DomainError(f"f_lo ({f_lo}) must be below f_hi ({f_hi}).")
    elif n_points < 2:
        raise DomainError(f"A sweep needs at least 2 points (got {n_points}).")

    drive = drive or device.drive
    if drive is None:
        raise DomainError("No drive given and the device has none.")

    frequencies = Grid.init(grid).points(f_lo, f_hi, n_points)
    points = tuple(response_at(device, drive.at_frequency(float(f))) for f in frequencies)
    return ResponseCurve(points=points)


def sinusoid(amplitude: float, frequency: float, phase: float = 0.0) -> Forcing:
    """
    ``amplitude · sin(2πft + phase)`` as a forcing function.
    """
    require_finite(amplitude=amplitude, phase=phase)
    require_positive(frequency=frequency)
    omega = 2 * math.pi * frequency

    def force(t):
        return amplitude * np.sin(omega * np.asarray(t, dtype=float) + phase)

    return force


@dataclass
class SampledForcing:
    """
    A recorded force waveform in newtons, interpolated with a cubic spline
    and zero outside the recording.
    """

    values: Sequence[float]
    sample_rate: float
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        require_positive(sample_rate=self.sample_rate)
        require_finite(values=values)
        if values.ndim != 1 or len(values) < 2:
            raise DomainError("A sampled forcing needs at least 2 samples.")

        self.values = values
        self._spline = CubicSpline(np.arange(len(values)) / self.sample_rate, values)

    @property
    def duration(self) -> float:
        return (len(self.values) - 1) / self.sample_rate

    @property
    def peak(self) -> float:
        return float(np.abs(self.values).max())

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= 0) & (t <= self.duration), self._spline(t), 0.0)


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    time: np.ndarray
    displacement: np.ndarray
    """Magnet displacement toward the coil, in meters."""

    velocity: np.ndarray
    emf: np.ndarray
    """Induced voltage, ``-dΦ/dt``, in volts."""

    force: np.ndarray

    @property
    def emf_pp(self) -> float:
        return float(self.emf.max() - self.emf.min()) if len(self.emf) else 0.0

    def energy(self, osc: OscillatorParams) -> np.ndarray:
        return 0.5 * osc.stiffness * self.displacement**2 + 0.5 * osc.mass * self.velocity**2


def time_simulate(
    osc: OscillatorParams,
    magnet: Optional[MagnetSpec],
    coil: Optional[CoilSpec],
    forcing: Forcing,
    dt: float,
    duration: float,
    z0: float = 0.0,
    v0: float = 0.0,
    profile_points: int = 201,
    config: Optional[QuadratureConfig] = None,
) -> SimulationTrace:
    """
    Integrate ``m z'' + c z' + k z = F(t)`` with the classical fourth-order
    Runge-Kutta scheme. The EMF uses the flux gradient at the current
    position, read from a cubic spline of the coil flux over the reachable
    stroke.

    Args:
        osc (:class:`~acoustic_microgen.types.OscillatorParams`): The oscillator.
        magnet (:class:`~acoustic_microgen.types.MagnetSpec` | None): The magnet.
          With no magnet or coil the EMF is zero.
        coil (:class:`~acoustic_microgen.types.CoilSpec` | None): The coil.
        forcing (Callable): Force in newtons as a function of an array of times.
        dt (float): Time step, below ``1 / (20 f1)``.
        duration (float): Simulated time, in seconds.
        z0 (float): Initial displacement toward the coil, in meters.
        v0 (float): Initial velocity, in m/s.
        profile_points (int): Samples of the flux profile.
        config (:class:`~acoustic_microgen.types.QuadratureConfig` | None): Quadrature
          settings for the flux profile.

    Raises:
        :class:`~acoustic_microgen.exceptions.DomainError`: On an unstable step,
          or when the stroke reaches the coil plane.
        :class:`~acoustic_microgen.exceptions.NumericalError`: When the state
          blows up, or energy grows without forcing or damping.

    Returns:
        :class:`~acoustic_microgen.response.SimulationTrace`
    """
    require_positive(dt=dt, duration=duration)
    require_finite(z0=z0, v0=v0)
    limit = 1 / (STEPS_PER_PERIOD_MIN * osc.natural_frequency)
    if dt >= limit:
        raise DomainError(
            f"Time step {dt:.3g} s must be below 1/({STEPS_PER_PERIOD_MIN} f1) = {limit:.3g} s."
        )

    steps = max(1, int(round(duration / dt)))
    half_times = np.arange(2 * steps + 1) * (dt / 2)
    half_forces = np.broadcast_to(
        np.asarray(forcing(half_times), dtype=float), half_times.shape
    ).copy()
    require_finite(forcing=half_forces)

    m = osc.mass
    k = osc.stiffness
    c = osc.damping_coefficient
    zs = np.empty(steps + 1)
    vs = np.empty(steps + 1)
    zs[0] = z = float(z0)
    vs[0] = v = float(v0)
    forces = half_forces.tolist()
    for n in range(steps):
        f0 = forces[2 * n]
        f_mid = forces[2 * n + 1]
        f1 = forces[2 * n + 2]
        a1 = (f0 - c * v - k * z) / m
        z2 = z + 0.5 * dt * v
        v2 = v + 0.5 * dt * a1
        a2 = (f_mid - c * v2 - k * z2) / m
        z3 = z + 0.5 * dt * v2
        v3 = v + 0.5 * dt * a2
        a3 = (f_mid - c * v3 - k * z3) / m
        z4 = z + dt * v3
        v4 = v + dt * a3
        a4 = (f1 - c * v4 - k * z4) / m
        z = z + dt / 6 * (v + 2 * v2 + 2 * v3 + v4)
        v = v + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        zs[n + 1] = z
        vs[n + 1] = v

    if not (np.all(np.isfinite(zs)) and np.all(np.isfinite(vs))):
        raise NumericalError("Time integration diverged.")

    trace_forces = half_forces[::2]
    if osc.damping_ratio == 0 and not trace_forces.any():
        energy = 0.5 * k * zs**2 + 0.5 * m * vs**2
        if energy[0] > 0 and energy.max() > energy[0] * (1 + ENERGY_GROWTH_LIMIT):
            raise NumericalError(
                "Energy grew without forcing or damping; reduce the time step.",
                estimate=float(energy.max() / energy[0] - 1),
            )

    emf = np.zeros(steps + 1)
    if magnet is not None and coil is not None:
        stroke = float(np.abs(zs).max())
        if stroke >= coil.plane_height:
            raise DomainError(
                f"Stroke of ±{stroke:.3g} m reaches the coil at {coil.plane_height:.3g} m."
            )
        elif stroke > 0:
            span = min(PROFILE_MARGIN * stroke, (stroke + coil.plane_height) / 2)
            offsets = np.linspace(-span, span, profile_points)
            spline = CubicSpline(offsets, coil_flux_profile(magnet, coil, offsets, config=config))
            emf = -spline(zs, 1) * vs

    logger.debug("Simulated %d steps of %.3g s.", steps, dt)
    return SimulationTrace(
        time=half_times[::2].copy(), displacement=zs, velocity=vs, emf=emf, force=trace_forces
    )
