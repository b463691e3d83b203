"""
Inverse design and analysis: frequency matching, constrained EMF
maximization, parameter sensitivities, and model-versus-measurement
reporting.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize

from acoustic_microgen._base import Device
from acoustic_microgen.exceptions import (
    DomainError,
    InfeasibleDesignError,
    NumericalError,
    PreconditionError,
)
from acoustic_microgen.response import drive_amplitude, emf_pp, response_at
from acoustic_microgen.suspension import max_bending_stress, yield_margin
from acoustic_microgen.types import (
    DesignVariable,
    DriveKind,
    DriveSpec,
    MeasuredReference,
    Parameter,
    SearchConfig,
    Spec,
    TargetBand,
    YieldMargin,
)

logger = logging.getLogger(__name__)

MONOTONIC_SAMPLES = 9
MAX_BISECTIONS = 200
SIMPLEX_STEP = 0.25
BEST_FOUND = "best found"


def match_frequency(
    device: Device,
    variable: DesignVariable,
    target: float,
    tol: float = 0.1,
) -> float:
    """
    Find the value of ``variable`` at which the first-mode frequency hits
    ``target`` within ``tol``, by bisection.

    Args:
        device (:class:`~acoustic_microgen.Device`): The template design.
        variable (:class:`~acoustic_microgen.types.DesignVariable`): The parameter
          to vary and its bounds.
        target (float): Target frequency, in Hz.
        tol (float): Frequency tolerance, in Hz.

    Raises:
        :class:`~acoustic_microgen.exceptions.PreconditionError`: When the
          frequency is not monotone in the variable over its bounds.
        :class:`~acoustic_microgen.exceptions.InfeasibleDesignError`: When
          the bounds do not bracket the target.

    Returns:
        float: The variable value, in SI units.
    """
    if not (target > 0 and math.isfinite(target)):
        raise DomainError(f"Target frequency must be positive (got {target}).")
    elif not tol > 0:
        raise DomainError(f"Tolerance must be positive (got {tol}).")

    def frequency(value: float) -> float:
        return device.with_value(variable.name, value).natural_frequency

    f_lo = frequency(variable.lo)
    f_hi = frequency(variable.hi)
    bracket = {variable.lo: f_lo, variable.hi: f_hi}
    if min(f_lo, f_hi) - tol > target or max(f_lo, f_hi) + tol < target:
        raise InfeasibleDesignError(
            f"Target {target:.6g} Hz is outside the reachable range: "
            f"f1({variable.name.value}={variable.lo:.6g}) = {f_lo:.6g} Hz, "
            f"f1({variable.name.value}={variable.hi:.6g}) = {f_hi:.6g} Hz.",
            evaluations=bracket,
        )

    if not variable.is_fixed:
        samples = [frequency(v) for v in np.linspace(variable.lo, variable.hi, MONOTONIC_SAMPLES)]
        steps = np.diff(samples)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise PreconditionError(
                f"f1 is not monotone in '{variable.name.value}' over "
                f"[{variable.lo:.6g}, {variable.hi:.6g}]."
            )

    for value, f in bracket.items():
        if abs(f - target) <= tol:
            return value

    lo, hi = variable.lo, variable.hi
    rising = f_hi > f_lo
    for iteration in range(MAX_BISECTIONS):
        middle = (lo + hi) / 2
        f = frequency(middle)
        if abs(f - target) <= tol:
            logger.debug("Matched %.6g Hz after %d bisections.", target, iteration + 1)
            return middle

        elif (f < target) == rising:
            lo = middle
        else:
            hi = middle

    raise NumericalError(
        f"Bisection did not reach {tol} Hz of the target in {MAX_BISECTIONS} iterations",
        estimate=(lo + hi) / 2,
        error_bound=hi - lo,
    )


class Evaluation(Spec):
    """
    One design visited by :func:`maximize_emf`.
    """

    values: tuple[float, ...]
    natural_frequency: float
    emf_pp: float
    amplitude: float
    yield_low: float
    footprint: float
    penalty: float
    objective: float

    @property
    def feasible(self) -> bool:
        return self.penalty == 0


@dataclass(frozen=True)
class DesignResult:
    """
    The best design found by a heuristic search. Not a certified optimum.
    """

    device: Device
    variables: tuple[DesignVariable, ...]
    values: tuple[float, ...]
    natural_frequency: float
    emf_pp: float
    amplitude: float
    margin: YieldMargin
    footprint: float
    evaluations: list[Evaluation] = field(repr=False)
    label: str = BEST_FOUND

    @property
    def by_parameter(self) -> dict[Parameter, float]:
        return {v.name: value for v, value in zip(self.variables, self.values)}


class _Search:
    def __init__(
        self,
        device: Device,
        variables: Sequence[DesignVariable],
        band: TargetBand,
        drive: DriveSpec,
        config: SearchConfig,
        target_hz: Optional[float],
    ):
        self.device = device
        self.variables = tuple(variables)
        self.band = band
        self.drive = drive
        self.config = config
        self.target_hz = target_hz
        self.free = [i for i, v in enumerate(self.variables) if not v.is_fixed]
        self.evaluations: list[Evaluation] = []
        self._cache: dict[tuple[float, ...], Evaluation] = {}
        self.emf_scale = 1.0
        if target_hz is None:
            nominal = self._measure(device)[1]
            self.emf_scale = nominal if nominal > 0 else 1.0

    def decode(self, fractions: Sequence[float]) -> tuple[float, ...]:
        values = [v.lo for v in self.variables]
        for index, fraction in zip(self.free, fractions):
            values[index] = self.variables[index].value_at(float(fraction))

        return tuple(values)

    def build(self, values: Sequence[float]) -> Device:
        device = self.device
        for variable, value in zip(self.variables, values):
            device = device.with_value(variable.name, value)

        return device

    def _measure(self, device: Device) -> tuple[float, float, float]:
        f1 = device.natural_frequency
        z0 = drive_amplitude(device, self.drive.at_frequency(f1))
        return f1, emf_pp(device.flux_gradient, z0, f1), z0

    def evaluate(self, values: tuple[float, ...]) -> Evaluation:
        if values in self._cache:
            return self._cache[values]

        device = self.build(values)
        f1, emf, z0 = self._measure(device)
        margin = yield_margin(max_bending_stress(device.material, device.beam, z0), device.material)
        footprint = device.footprint

        band_violation = 0.0
        if f1 < self.band.f_lo:
            band_violation = (self.band.f_lo - f1) / self.band.f_lo
        elif f1 > self.band.f_hi:
            band_violation = (f1 - self.band.f_hi) / self.band.f_hi

        penalty = (
            self.config.band_weight * band_violation
            + self.config.yield_weight * max(0.0, 1 - margin.low)
            + self.config.footprint_weight * max(0.0, footprint / self.config.die_size - 1)
        )
        if self.target_hz is None:
            objective = -emf / self.emf_scale + penalty
        else:
            objective = ((f1 - self.target_hz) / self.target_hz) ** 2 + penalty

        evaluation = Evaluation(
            values=values,
            natural_frequency=f1,
            emf_pp=emf,
            amplitude=z0,
            yield_low=margin.low,
            footprint=footprint,
            penalty=penalty,
            objective=objective,
        )
        self._cache[values] = evaluation
        self.evaluations.append(evaluation)
        return evaluation

    def objective(self, fractions: np.ndarray) -> float:
        return self.evaluate(self.decode(fractions)).objective

    def starts(self) -> list[np.ndarray]:
        dimensions = len(self.free)
        grid = [np.array(p) for p in product((0.0, 0.5, 1.0), repeat=dimensions)]
        rng = np.random.default_rng(self.config.seed)
        extra = [rng.random(dimensions) for _ in range(self.config.extra_starts)]
        return grid + extra

    def run(self) -> list[Evaluation]:
        if not self.free:
            self.evaluate(self.decode(()))
            return self.evaluations

        starts = self.starts()
        dimensions = len(self.free)
        per_start = max(dimensions + 2, self.config.budget // len(starts))
        for number, start in enumerate(starts):
            if len(self._cache) >= self.config.budget:
                logger.debug("Evaluation budget spent after %d starts.", number)
                break

            simplex = [start]
            for axis in range(dimensions):
                vertex = start.copy()
                vertex[axis] += SIMPLEX_STEP if start[axis] <= 0.5 else -SIMPLEX_STEP
                simplex.append(vertex)

            logger.debug("Search start %d at %s.", number, np.round(start, 3).tolist())
            minimize(
                self.objective,
                start,
                method="Nelder-Mead",
                bounds=[(0.0, 1.0)] * dimensions,
                options={
                    "maxfev": per_start,
                    "xatol": self.config.xatol,
                    "fatol": self.config.fatol,
                    "initial_simplex": np.array(simplex),
                },
            )

        return self.evaluations


def maximize_emf(
    device: Device,
    variables: Sequence[DesignVariable],
    band: TargetBand,
    drive: Optional[DriveSpec] = None,
    config: Optional[SearchConfig] = None,
    target_hz: Optional[float] = None,
) -> DesignResult:
    """
    Search the variables' bounds for the design with the largest EMF at
    its own first-mode frequency, subject to the frequency band, the yield
    margin at the operating amplitude, and the die size.

    The search is Nelder-Mead over the bounds scaled to ``[0, 1]``,
    restarted from every point of a three-level grid and from
    ``config.extra_starts`` seeded random points. Constraints enter as
    weighted penalties. The result is the best feasible design visited.

    Args:
        device (:class:`~acoustic_microgen.Device`): The template design.
        variables (Sequence[:class:`~acoustic_microgen.types.DesignVariable`]):
          Parameters to search. A variable with ``lo == hi`` is pinned.
        band (:class:`~acoustic_microgen.types.TargetBand`): Allowed first-mode
          frequencies.
        drive (:class:`~acoustic_microgen.types.DriveSpec` | None): Drive level.
          Defaults to the device's drive; its frequency is ignored.
        config (:class:`~acoustic_microgen.types.SearchConfig` | None): Budget,
          seed, die size and penalty weights.
        target_hz (float | None): When given, minimize the relative distance
          of f1 to this frequency instead of maximizing EMF.

    Raises:
        :class:`~acoustic_microgen.exceptions.InfeasibleDesignError`: When
          no visited design satisfies every constraint.

    Returns:
        :class:`~acoustic_microgen.design.DesignResult`
    """
    if not variables:
        raise DomainError("At least one design variable is required.")

    names = [v.name for v in variables]
    if len(set(names)) != len(names):
        raise DomainError("Design variables must be distinct.")

    drive = drive or device.drive
    if drive is None:
        raise DomainError("No drive given and the device has none.")
    elif device.damping_ratio == 0 and drive.kind is not DriveKind.DISPLACEMENT:
        raise DomainError("An undamped device has unbounded resonant amplitude.")

    if target_hz is not None and not target_hz > 0:
        raise DomainError(f"Target frequency must be positive (got {target_hz}).")

    config = config or SearchConfig()
    search = _Search(device, variables, band, drive, config, target_hz)
    evaluations = search.run()
    feasible = [e for e in evaluations if e.feasible]
    if not feasible:
        closest = min(evaluations, key=lambda e: e.penalty)
        raise InfeasibleDesignError(
            f"None of {len(evaluations)} designs satisfied the constraints "
            f"(smallest penalty {closest.penalty:.3g} at f1={closest.natural_frequency:.6g} Hz, "
            f"footprint={closest.footprint:.4g} m).",
            evaluations={e.values: e.objective for e in evaluations},
        )

    if target_hz is None:
        best = max(feasible, key=lambda e: e.emf_pp)
    else:
        best = min(feasible, key=lambda e: e.objective)

    design = search.build(best.values)
    logger.debug("Best of %d evaluations: %s.", len(evaluations), best.values)
    return DesignResult(
        device=design,
        variables=tuple(variables),
        values=best.values,
        natural_frequency=best.natural_frequency,
        emf_pp=best.emf_pp,
        amplitude=best.amplitude,
        margin=yield_margin(
            max_bending_stress(design.material, design.beam, best.amplitude), design.material
        ),
        footprint=best.footprint,
        evaluations=evaluations,
    )


@dataclass(frozen=True)
class Sensitivity:
    """
    Relative sensitivities ``(p / y) ∂y/∂p`` of the first-mode frequency
    and the EMF to one parameter.
    """

    parameter: Parameter
    value: float
    natural_frequency: float
    emf_pp: Optional[float]


def sensitivity(
    device: Device, parameter: Union[Parameter, str], rel_step: float = 1e-3
) -> Sensitivity:
    """
    Central-difference relative sensitivities. Integer parameters step by
    one unit. The EMF is taken at the device's drive, and is ``None`` when
    the device has none.
    """
    parameter = Parameter.init(parameter)
    if not 0 < rel_step < 1:
        raise DomainError(f"Relative step must be in (0, 1) (got {rel_step}).")

    value = device.value_of(parameter)
    if parameter.is_integer:
        below, above, span = value - 1, value + 1, 2 / value if value else 0.0
    else:
        below, above, span = value * (1 - rel_step), value * (1 + rel_step), 2 * rel_step

    if parameter.is_integer and below < 0:
        raise DomainError(f"Cannot step '{parameter.value}' below zero.")

    low = device.with_value(parameter, below)
    high = device.with_value(parameter, above)

    def relative(y_low: float, y_high: float, y: float) -> float:
        if y == 0 or span == 0:
            return 0.0

        return (y_high - y_low) / (span * y)

    f_sensitivity = relative(
        low.natural_frequency, high.natural_frequency, device.natural_frequency
    )
    emf_sensitivity = None
    if device.drive is not None:
        emf_sensitivity = relative(
            response_at(low).emf_pp, response_at(high).emf_pp, response_at(device).emf_pp
        )

    return Sensitivity(
        parameter=parameter,
        value=value,
        natural_frequency=f_sensitivity,
        emf_pp=emf_sensitivity,
    )


class ReportRow(Spec):
    quantity: str
    unit: str
    model_nominal: float
    model_measured_thickness: Optional[float] = None
    measured: Optional[float] = None

    @property
    def model(self) -> float:
        """
        The model value compared against the measurement.
        """
        if self.model_measured_thickness is not None:
            return self.model_measured_thickness

        return self.model_nominal

    @property
    def available(self) -> bool:
        return (
            self.measured is not None
            and math.isfinite(self.model)
            and self.model != 0
            and self.measured != 0
        )

    @property
    def ratio(self) -> Optional[float]:
        """
        Measured over model.
        """
        return self.measured / self.model if self.available else None  # type: ignore[operator]

    @property
    def discrepancy(self) -> Optional[float]:
        """
        Model over measured.
        """
        return self.model / self.measured if self.available else None  # type: ignore[operator]


@dataclass(frozen=True)
class ConsistencyReport:
    rows: tuple[ReportRow, ...]

    def __getitem__(self, quantity: str) -> ReportRow:
        for row in self.rows:
            if row.quantity == quantity:
                return row

        raise KeyError(quantity)

    def __iter__(self):
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)


def _resonant_response(device: Device) -> tuple[float, float]:
    if device.drive is None:
        return math.nan, math.nan

    point = response_at(device, device.drive.at_frequency(device.natural_frequency))
    return point.amplitude, point.emf_pp


def consistency_report(device: Device, measured: MeasuredReference) -> ConsistencyReport:
    """
    Compare the model against measured values without adjusting it.

    Each row holds the model at the nominal design, the model with the
    beam thickness set to the measured one (when given), and the
    measurement. Amplitude and EMF are taken at each model's own
    first-mode frequency under the device's drive level.
    """
    thin = None
    if measured.thickness:
        thin = device.with_value(Parameter.BEAM_THICKNESS, measured.thickness)

    nominal_amplitude, nominal_emf = _resonant_response(device)
    thin_amplitude, thin_emf = _resonant_response(thin) if thin else (None, None)

    def finite(value: Optional[float]) -> Optional[float]:
        return value if value is not None and math.isfinite(value) else None

    rows = (
        ReportRow(
            quantity="natural_frequency",
            unit="Hz",
            model_nominal=device.natural_frequency,
            model_measured_thickness=thin.natural_frequency if thin else None,
            measured=measured.resonance,
        ),
        ReportRow(
            quantity="beam_thickness",
            unit="m",
            model_nominal=device.beam.thickness,
            measured=measured.thickness,
        ),
        ReportRow(
            quantity="amplitude",
            unit="m",
            model_nominal=nominal_amplitude,
            model_measured_thickness=finite(thin_amplitude),
            measured=measured.amplitude,
        ),
        ReportRow(
            quantity="emf_pp",
            unit="V",
            model_nominal=nominal_emf,
            model_measured_thickness=finite(thin_emf),
            measured=measured.emf_pp,
        ),
        ReportRow(
            quantity="coil_resistance",
            unit="ohm",
            model_nominal=device.coil_resistance,
            model_measured_thickness=thin.coil_resistance if thin else None,
            measured=measured.coil_resistance,
        ),
    )
    for row in rows:
        if row.available and not 0.5 <= row.ratio <= 2:  # type: ignore[operator]
            logger.warning(
                "Model and measurement of %s differ by more than 2x (ratio %.3g).",
                row.quantity,
                row.ratio,
            )

    return ConsistencyReport(rows=rows)
