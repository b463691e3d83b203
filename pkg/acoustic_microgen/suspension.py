"""
Lumped model of the beam-suspended plate carrying the magnet, in its
first (piston) mode. Each beam bends as a fixed-guided member over its
full length.
"""

import logging
import math
from typing import Optional

from acoustic_microgen._utils import require_finite, require_positive
from acoustic_microgen.exceptions import DomainError
from acoustic_microgen.types import (
    BeamSpec,
    MagnetSpec,
    MaterialParams,
    ModalResult,
    PlateSpec,
    YieldMargin,
)

logger = logging.getLogger(__name__)

BEAM_MASS_FACTOR = 13 / 35
"""Share of the beam mass that moves with the plate."""


def beam_stiffness(
    mat: MaterialParams, beam: BeamSpec, youngs_modulus: Optional[float] = None
) -> float:
    """
    Transverse stiffness in N/m of one beam, ``12 E I / L³`` with
    ``I = W H³ / 12``.

    Args:
        mat (:class:`~acoustic_microgen.types.MaterialParams`): The structure material.
        beam (:class:`~acoustic_microgen.types.BeamSpec`): The beam.
        youngs_modulus (float | None): Overrides ``mat.youngs_modulus``.

    Returns:
        float
    """
    modulus = mat.youngs_modulus if youngs_modulus is None else youngs_modulus
    return modulus * beam.width * beam.thickness**3 / beam.length**3


def total_stiffness(
    mat: MaterialParams, beam: BeamSpec, youngs_modulus: Optional[float] = None
) -> float:
    return beam.count * beam_stiffness(mat, beam, youngs_modulus=youngs_modulus)


def beam_mass(mat: MaterialParams, beam: BeamSpec) -> float:
    return mat.structure_density * beam.length * beam.width * beam.thickness


def effective_mass(
    mat: MaterialParams,
    plate: PlateSpec,
    magnet: Optional[MagnetSpec] = None,
    beam: Optional[BeamSpec] = None,
    include_beam_mass: bool = False,
) -> float:
    """
    Moving mass in kg: the plate plus the magnet riding on it, and
    optionally the participating share of the beams.

    Args:
        mat (:class:`~acoustic_microgen.types.MaterialParams`): Densities.
        plate (:class:`~acoustic_microgen.types.PlateSpec`): The plate.
        magnet (:class:`~acoustic_microgen.types.MagnetSpec` | None): The magnet,
          or ``None`` for a bare plate.
        beam (:class:`~acoustic_microgen.types.BeamSpec` | None): The beams.
          Required when ``include_beam_mass`` is set.
        include_beam_mass (bool): Add ``13/35`` of the total beam mass.

    Returns:
        float
    """
    mass = mat.structure_density * plate.volume
    if magnet is not None:
        mass += mat.magnet_density * magnet.volume

    if include_beam_mass:
        if beam is None:
            raise DomainError("Beam geometry is required to include the beam mass.")

        mass += BEAM_MASS_FACTOR * beam.count * beam_mass(mat, beam)

    return mass


def natural_frequency(k: float, m: float) -> float:
    """
    ``(1 / 2π) √(k / m)`` in Hz.
    """
    require_positive(stiffness=k, mass=m)
    return math.sqrt(k / m) / (2 * math.pi)


def modal_analysis(
    mat: MaterialParams,
    beam: BeamSpec,
    plate: PlateSpec,
    magnet: Optional[MagnetSpec] = None,
    include_beam_mass: bool = False,
    youngs_modulus: Optional[float] = None,
) -> ModalResult:
    k = total_stiffness(mat, beam, youngs_modulus=youngs_modulus)
    m = effective_mass(mat, plate, magnet=magnet, beam=beam, include_beam_mass=include_beam_mass)
    logger.debug("Modal analysis: k=%.6g N/m, m=%.6g kg.", k, m)
    return ModalResult(
        stiffness_total=k, effective_mass=m, natural_frequency=natural_frequency(k, m)
    )


def frequency_band(
    mat: MaterialParams,
    beam: BeamSpec,
    plate: PlateSpec,
    magnet: Optional[MagnetSpec] = None,
    include_beam_mass: bool = False,
) -> tuple[float, float]:
    """
    First-mode frequency at both ends of the material's modulus band.
    """
    low, high = (
        modal_analysis(
            mat,
            beam,
            plate,
            magnet=magnet,
            include_beam_mass=include_beam_mass,
            youngs_modulus=modulus,
        ).natural_frequency
        for modulus in (mat.modulus_low, mat.modulus_high)
    )
    return low, high


def max_bending_stress(mat: MaterialParams, beam: BeamSpec, deflection: float) -> float:
    """
    Outer-fiber stress in Pa at the beam ends for a tip deflection
    ``deflection``, ``3 E H δ / L²``.
    """
    require_finite(deflection=deflection)
    if deflection < 0:
        raise DomainError(f"Deflection must be non-negative (got {deflection}).")

    return 3 * mat.youngs_modulus * beam.thickness * deflection / beam.length**2


def yield_margin(stress: float, mat: MaterialParams) -> YieldMargin:
    require_finite(stress=stress)
    if stress < 0:
        raise DomainError(f"Stress must be non-negative (got {stress}).")
    elif stress == 0:
        return YieldMargin(low=math.inf, high=math.inf)

    return YieldMargin(low=mat.yield_low / stress, high=mat.yield_high / stress)
