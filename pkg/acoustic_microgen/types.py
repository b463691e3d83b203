import math
from enum import Enum
from typing import Annotated, Optional, TypeVar

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveInt,
    ValidationError,
    model_validator,
)

from acoustic_microgen.exceptions import DomainError

Positive = Annotated[float, Field(gt=0, allow_inf_nan=False)]
NonNegative = Annotated[float, Field(ge=0, allow_inf_nan=False)]
Finite = Annotated[float, Field(allow_inf_nan=False)]
# Results may legitimately be unbounded (undamped resonance, zero stress).
Unbounded = Annotated[float, Field(ge=0)]

SpecT = TypeVar("SpecT", bound="Spec")


def describe_validation_error(err: ValidationError) -> str:
    parts = []
    for error in err.errors():
        location = ".".join(str(p) for p in error["loc"]) or "value"
        parts.append(f"{location}: {error['msg']}")

    return "; ".join(parts)


class Spec(BaseModel):
    """
    Base for the immutable, validated specs used across the package.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    @classmethod
    def create(cls: type[SpecT], **values) -> SpecT:
        """
        Build the spec, translating validation failures into
        :class:`~acoustic_microgen.exceptions.DomainError`.
        """
        try:
            return cls(**values)
        except ValidationError as err:
            raise DomainError(f"Invalid {cls.__name__}: {describe_validation_error(err)}") from err


class _ParsableEnum(Enum):
    @classmethod
    def init(cls, identifier):
        if isinstance(identifier, cls):
            return identifier

        elif isinstance(identifier, str):
            if "." in identifier:
                # Click being weird, value like "grid.log".
                identifier = identifier.split(".")[-1]

            value = identifier.strip().lower().replace("-", "_")
            for member in cls:
                if member.value == value:
                    return member

            raise DomainError(
                f"Unknown {cls.__name__} '{identifier}'. "
                f"Choose from: {', '.join(m.value for m in cls)}."
            )

        # Unexpected.
        raise TypeError(identifier)


class Grid(_ParsableEnum):
    LINEAR = "linear"
    """Evenly spaced frequencies."""

    LOG = "log"
    """Logarithmically spaced frequencies."""

    def points(self, lo: float, hi: float, count: int) -> np.ndarray:
        if self is Grid.LOG:
            return np.geomspace(lo, hi, count)

        return np.linspace(lo, hi, count)


class DriveKind(_ParsableEnum):
    PRESSURE = "pressure"
    """Sound pressure amplitude at the plate, in pascals."""

    SPL = "spl"
    """Sound pressure level, in dB re 20 μPa."""

    DISPLACEMENT = "displacement"
    """Prescribed magnet displacement amplitude, in meters."""


class Parameter(_ParsableEnum):
    BEAM_LENGTH = "beam_length"
    BEAM_WIDTH = "beam_width"
    BEAM_THICKNESS = "beam_thickness"
    PLATE_SIDE = "plate_side"
    MAGNET_THICKNESS = "magnet_thickness"
    COIL_TURNS = "coil_turns"
    COIL_GAP = "coil_gap"
    YOUNGS_MODULUS = "youngs_modulus"

    @property
    def is_integer(self) -> bool:
        return self is Parameter.COIL_TURNS


class MagnetSpec(Spec):
    """
    A cuboid permanent magnet, centered on the origin and magnetized
    along +z. A negative remanence flips the magnetization to -z.
    """

    length_x: Positive
    width_y: Positive
    thickness_z: Positive
    remanence: Finite

    @property
    def half_extents(self) -> tuple[float, float, float]:
        return self.length_x / 2, self.width_y / 2, self.thickness_z / 2

    @property
    def volume(self) -> float:
        return self.length_x * self.width_y * self.thickness_z

    @property
    def top(self) -> float:
        """
        Height of the top pole face in the magnet frame.
        """
        return self.thickness_z / 2


class FieldPoint(Spec):
    x: Finite
    y: Finite
    z: Finite


class RectLoop(Spec):
    """
    A closed rectangular loop lying in the horizontal plane ``z = z_c``.
    """

    center_x: Finite = 0.0
    center_y: Finite = 0.0
    side_x: Positive
    side_y: Positive
    z_c: Finite

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (
            self.center_x - self.side_x / 2,
            self.center_x + self.side_x / 2,
            self.center_y - self.side_y / 2,
            self.center_y + self.side_y / 2,
        )

    @property
    def area(self) -> float:
        return self.side_x * self.side_y

    @property
    def is_coaxial(self) -> bool:
        return self.center_x == 0 and self.center_y == 0

    def at_height(self, z_c: float) -> "RectLoop":
        return self.model_copy(update={"z_c": z_c})


class CoilSpec(Spec):
    """
    A square spiral coil, approximated by concentric closed loops.
    ``plane_height`` is the gap between the magnet top face and the coil plane.
    """

    turns: NonNegativeInt
    trace_width: Positive
    gap: Positive
    trace_thickness: Positive
    inner_side: Positive
    resistivity: Positive
    plane_height: Positive = 10e-6

    @property
    def pitch(self) -> float:
        return self.trace_width + self.gap

    @property
    def cross_section(self) -> float:
        return self.trace_width * self.trace_thickness


class CoilGeometry(Spec):
    sides: tuple[Positive, ...]
    pitch: Positive

    @model_validator(mode="after")
    def _check_progression(self) -> "CoilGeometry":
        for inner, outer in zip(self.sides, self.sides[1:]):
            if not math.isclose(outer - inner, 2 * self.pitch, rel_tol=1e-9):
                raise ValueError("turn sides must grow by 2 * pitch")

        return self


class MaterialParams(Spec):
    youngs_modulus: Positive
    structure_density: Positive
    magnet_density: Positive
    yield_low: Positive
    yield_high: Positive
    modulus_low: Positive = 179e9
    modulus_high: Positive = 225e9

    @model_validator(mode="after")
    def _check_ranges(self) -> "MaterialParams":
        if self.yield_low > self.yield_high:
            raise ValueError("yield_low must not exceed yield_high")
        if self.modulus_low > self.modulus_high:
            raise ValueError("modulus_low must not exceed modulus_high")

        return self


class BeamSpec(Spec):
    length: Positive
    width: Positive
    thickness: Positive
    count: PositiveInt = 4


class PlateSpec(Spec):
    length: Positive
    width: Positive
    thickness: Positive

    @property
    def footprint(self) -> float:
        return self.length * self.width

    @property
    def volume(self) -> float:
        return self.length * self.width * self.thickness


class ModalResult(Spec):
    stiffness_total: Positive
    effective_mass: Positive
    natural_frequency: Positive


class YieldMargin(Spec):
    """
    Yield strength over peak stress, at both ends of the yield band.
    Values below 1 flag a risk of plastic deformation.
    """

    low: Unbounded
    high: Unbounded

    @property
    def at_risk(self) -> bool:
        return self.low < 1


class DriveSpec(Spec):
    kind: DriveKind
    value: Finite
    frequency: Positive

    @model_validator(mode="after")
    def _check_value(self) -> "DriveSpec":
        if self.kind is not DriveKind.SPL and self.value < 0:
            raise ValueError(f"{self.kind.value} amplitude must be non-negative")

        return self

    def at_frequency(self, frequency: float) -> "DriveSpec":
        return self.model_copy(update={"frequency": frequency})


class OscillatorParams(Spec):
    mass: Positive
    stiffness: Positive
    damping_ratio: Annotated[float, Field(ge=0, lt=1)]

    @property
    def angular_frequency(self) -> float:
        return math.sqrt(self.stiffness / self.mass)

    @property
    def natural_frequency(self) -> float:
        return self.angular_frequency / (2 * math.pi)

    @property
    def damping_coefficient(self) -> float:
        return 2 * self.damping_ratio * math.sqrt(self.stiffness * self.mass)


class ResponsePoint(Spec):
    frequency: Positive
    amplitude: Unbounded
    velocity_peak: Unbounded
    emf_pp: Unbounded
    load_power: Unbounded


class ResponseCurve(Spec):
    points: tuple[ResponsePoint, ...]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([p.frequency for p in self.points])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.points])

    @property
    def emf(self) -> np.ndarray:
        return np.array([p.emf_pp for p in self.points])

    @property
    def peak(self) -> ResponsePoint:
        return self.points[int(np.argmax(self.amplitudes))]


class LoadCircuit(Spec):
    coil_resistance: NonNegative
    load_resistance: NonNegative


class TargetBand(Spec):
    f_lo: Positive
    f_hi: Positive

    @model_validator(mode="after")
    def _check_order(self) -> "TargetBand":
        if self.f_lo >= self.f_hi:
            raise ValueError("f_lo must be below f_hi")

        return self

    def contains(self, frequency: float) -> bool:
        return self.f_lo <= frequency <= self.f_hi


class DesignVariable(Spec):
    """
    A searchable device parameter with bounds in SI units.
    ``lo == hi`` pins the parameter.
    """

    name: Parameter
    lo: Positive
    hi: Positive

    @model_validator(mode="after")
    def _check_bounds(self) -> "DesignVariable":
        if self.lo > self.hi:
            raise ValueError("lo must not exceed hi")

        return self

    @property
    def is_fixed(self) -> bool:
        return self.lo == self.hi

    def value_at(self, fraction: float) -> float:
        value = self.lo + (self.hi - self.lo) * min(max(fraction, 0.0), 1.0)
        return float(round(value)) if self.name.is_integer else value


class MeasuredReference(Spec):
    resonance: Optional[NonNegative] = None
    thickness: Optional[NonNegative] = None
    amplitude: Optional[NonNegative] = None
    emf_pp: Optional[NonNegative] = None
    coil_resistance: Optional[NonNegative] = None


class QuadratureConfig(Spec):
    """
    Adaptive Gauss-Legendre settings for flux integrals.
    """

    rtol: Positive = 1e-8
    max_depth: PositiveInt = 12
    order: PositiveInt = 8


class SearchConfig(Spec):
    """
    Budget, seeding and penalty weights for :func:`~acoustic_microgen.design.maximize_emf`.
    """

    budget: PositiveInt = 2000
    extra_starts: NonNegativeInt = 0
    seed: int = 0
    die_size: Positive = 3e-3
    band_weight: Positive = 100.0
    yield_weight: Positive = 100.0
    footprint_weight: Positive = 100.0
    xatol: Positive = 1e-6
    fatol: Positive = 1e-10

