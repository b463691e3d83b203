import math
from functools import cached_property
from typing import Optional, Union

from acoustic_microgen.coil import coil_flux_gradient, outer_extent, resistance
from acoustic_microgen.exceptions import DomainError
from acoustic_microgen.suspension import frequency_band, modal_analysis
from acoustic_microgen.types import (
    BeamSpec,
    CoilSpec,
    DriveSpec,
    LoadCircuit,
    MagnetSpec,
    MaterialParams,
    ModalResult,
    OscillatorParams,
    Parameter,
    PlateSpec,
    QuadratureConfig,
    Spec,
)

DEFAULT_DAMPING_RATIO = 0.05

# Parameter -> (device attribute, spec fields).
_PARAMETER_FIELDS: dict[Parameter, tuple[str, tuple[str, ...]]] = {
    Parameter.BEAM_LENGTH: ("beam", ("length",)),
    Parameter.BEAM_WIDTH: ("beam", ("width",)),
    Parameter.BEAM_THICKNESS: ("beam", ("thickness",)),
    Parameter.PLATE_SIDE: ("plate", ("length", "width")),
    Parameter.MAGNET_THICKNESS: ("magnet", ("thickness_z",)),
    Parameter.COIL_TURNS: ("coil", ("turns",)),
    Parameter.COIL_GAP: ("coil", ("plane_height",)),
    Parameter.YOUNGS_MODULUS: ("material", ("youngs_modulus",)),
}


class Device:
    """
    A complete microgenerator: suspension, magnet, coil, and the drive it
    is operated at. Derived quantities are computed lazily and cached, so
    use :meth:`with_value` or :meth:`replace` rather than mutating.
    """

    def __init__(
        self,
        material: MaterialParams,
        beam: BeamSpec,
        plate: PlateSpec,
        magnet: MagnetSpec,
        coil: CoilSpec,
        drive: Optional[DriveSpec] = None,
        damping_ratio: float = DEFAULT_DAMPING_RATIO,
        effective_area: Optional[float] = None,
        load_resistance: Optional[float] = None,
        include_beam_mass: bool = False,
        quadrature: Optional[QuadratureConfig] = None,
    ) -> None:
        if not 0 <= damping_ratio < 1:
            raise DomainError(f"Damping ratio must be in [0, 1) (got {damping_ratio}).")
        if effective_area is not None and not effective_area > 0:
            raise DomainError(f"Effective area must be positive (got {effective_area}).")
        if load_resistance is not None and not load_resistance >= 0:
            raise DomainError(f"Load resistance must be non-negative (got {load_resistance}).")

        self.material = material
        self.beam = beam
        self.plate = plate
        self.magnet = magnet
        self.coil = coil
        self.drive = drive
        self.damping_ratio = damping_ratio
        self._effective_area = effective_area
        self._load_resistance = load_resistance
        self.include_beam_mass = include_beam_mass
        self.quadrature = quadrature

    def __repr__(self) -> str:
        return f"<Device f1={self.natural_frequency:.6g} Hz turns={self.coil.turns}>"

    @cached_property
    def modal(self) -> ModalResult:
        return modal_analysis(
            self.material,
            self.beam,
            self.plate,
            magnet=self.magnet,
            include_beam_mass=self.include_beam_mass,
        )

    @property
    def stiffness(self) -> float:
        return self.modal.stiffness_total

    @property
    def mass(self) -> float:
        return self.modal.effective_mass

    @property
    def natural_frequency(self) -> float:
        return self.modal.natural_frequency

    @property
    def frequency_band(self) -> tuple[float, float]:
        """
        First-mode frequency at the low and high end of the modulus band.
        """
        return frequency_band(
            self.material,
            self.beam,
            self.plate,
            magnet=self.magnet,
            include_beam_mass=self.include_beam_mass,
        )

    @property
    def oscillator(self) -> OscillatorParams:
        return OscillatorParams(
            mass=self.mass, stiffness=self.stiffness, damping_ratio=self.damping_ratio
        )

    @property
    def effective_area(self) -> float:
        """
        Area the sound pressure acts on. Defaults to the plate footprint.
        """
        if self._effective_area is not None:
            return self._effective_area

        return self.plate.footprint

    @property
    def effective_area_override(self) -> Optional[float]:
        return self._effective_area

    @property
    def load_resistance_override(self) -> Optional[float]:
        return self._load_resistance

    @cached_property
    def coil_resistance(self) -> float:
        return resistance(self.coil)

    @property
    def load_resistance(self) -> float:
        """
        The load across the coil. Defaults to the matched load.
        """
        if self._load_resistance is not None:
            return self._load_resistance

        return self.coil_resistance

    @property
    def load_circuit(self) -> LoadCircuit:
        return LoadCircuit(
            coil_resistance=self.coil_resistance, load_resistance=self.load_resistance
        )

    @cached_property
    def flux_gradient(self) -> float:
        """
        Coil flux gradient at rest, in Wb/m, with respect to the gap.
        """
        return coil_flux_gradient(self.magnet, self.coil, config=self.quadrature)

    @property
    def footprint(self) -> float:
        """
        Side of the smallest square die holding the plate, magnet and coil.
        """
        return max(
            self.plate.length,
            self.plate.width,
            self.magnet.length_x,
            self.magnet.width_y,
            outer_extent(self.coil),
        )

    def value_of(self, parameter: Union[Parameter, str]) -> float:
        parameter = Parameter.init(parameter)
        attribute, fields = _PARAMETER_FIELDS[parameter]
        return float(getattr(getattr(self, attribute), fields[0]))

    def with_value(self, parameter: Union[Parameter, str], value: float) -> "Device":
        """
        A copy of this device with one parameter changed.

        Raises:
            :class:`~acoustic_microgen.exceptions.DomainError`: When the value
              is invalid for the parameter.
        """
        parameter = Parameter.init(parameter)
        attribute, fields = _PARAMETER_FIELDS[parameter]
        if parameter.is_integer:
            if not math.isfinite(value):
                raise DomainError(f"'{parameter.value}' must be finite (got {value}).")

            value = int(round(value))

        spec: Spec = getattr(self, attribute)
        updated = type(spec).create(**{**spec.model_dump(), **{f: value for f in fields}})
        return self.replace(**{attribute: updated})

    def replace(self, **changes) -> "Device":
        values = {
            "material": self.material,
            "beam": self.beam,
            "plate": self.plate,
            "magnet": self.magnet,
            "coil": self.coil,
            "drive": self.drive,
            "damping_ratio": self.damping_ratio,
            "effective_area": self._effective_area,
            "load_resistance": self._load_resistance,
            "include_beam_mass": self.include_beam_mass,
            "quadrature": self.quadrature,
        }
        unknown = set(changes) - set(values)
        if unknown:
            raise TypeError(f"Unknown device attribute(s): {', '.join(sorted(unknown))}.")

        return Device(**{**values, **changes})
