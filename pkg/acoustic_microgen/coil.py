"""
Square spiral coil geometry, DC resistance, and the flux it links.
The spiral is treated as concentric closed loops at the trace centerlines.
"""

import logging
from enum import Enum
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from acoustic_microgen.exceptions import DomainError
from acoustic_microgen.magnetics import (
    default_step,
    flux_gradient,
    flux_profile,
    flux_through_rect,
    gradient_mesh,
)
from acoustic_microgen.types import CoilGeometry, CoilSpec, MagnetSpec, QuadratureConfig, RectLoop

logger = logging.getLogger(__name__)


class CoilMaterial(Enum):
    NICKEL = "nickel"
    """Electroplated nickel, 6.99e-8 Ω·m."""

    COPPER = "copper"
    """Copper, 1.68e-8 Ω·m."""

    @property
    def resistivity(self) -> float:
        return _RESISTIVITY[self]

    @classmethod
    def init(cls, identifier: Optional[Union[str, "CoilMaterial"]] = None) -> "CoilMaterial":
        if identifier is None:
            # Default.
            return CoilMaterial.NICKEL

        elif isinstance(identifier, CoilMaterial):
            return identifier

        elif isinstance(identifier, str):
            if "." in identifier:
                # Click being weird, value like "coilmaterial.copper".
                identifier = identifier.split(".")[-1]

            identifier = identifier.lower()
            if identifier in ("copper", "cu"):
                return CoilMaterial.COPPER
            elif identifier in ("nickel", "ni"):
                return CoilMaterial.NICKEL

            raise DomainError(f"Unknown coil material '{identifier}'.")

        # Unexpected.
        raise TypeError(identifier)

    def apply(self, coil: CoilSpec) -> CoilSpec:
        return coil.model_copy(update={"resistivity": self.resistivity})


_RESISTIVITY = {
    CoilMaterial.NICKEL: 6.99e-8,
    CoilMaterial.COPPER: 1.68e-8,
}


def turn_sides(coil: CoilSpec) -> CoilGeometry:
    """
    Centerline side lengths of every turn, innermost first.
    """
    sides = tuple(coil.inner_side + 2 * i * coil.pitch for i in range(coil.turns))
    return CoilGeometry(sides=sides, pitch=coil.pitch)


def total_length(coil: CoilSpec) -> float:
    return float(sum(4 * side for side in turn_sides(coil).sides))


def resistance(coil: CoilSpec) -> float:
    """
    DC resistance in ohms, ``ρ · length / (width · thickness)``.
    """
    return coil.resistivity * total_length(coil) / coil.cross_section


def outer_extent(coil: CoilSpec) -> float:
    """
    Side of the square the coil traces occupy, in meters.
    """
    if not (sides := turn_sides(coil).sides):
        return 0.0

    return sides[-1] + coil.trace_width


def plane_height(magnet: MagnetSpec, coil: CoilSpec, magnet_z_offset: float = 0.0) -> float:
    """
    Height of the coil plane in the frame of a magnet that has moved
    ``magnet_z_offset`` toward the coil.
    """
    return magnet.top + coil.plane_height - magnet_z_offset


def turn_loops(
    magnet: MagnetSpec, coil: CoilSpec, magnet_z_offset: float = 0.0
) -> list[RectLoop]:
    z_c = plane_height(magnet, coil, magnet_z_offset)
    return [RectLoop(side_x=side, side_y=side, z_c=z_c) for side in turn_sides(coil).sides]


@lru_cache(maxsize=4096)
def _loop_flux(magnet: MagnetSpec, loop: RectLoop, config: Optional[QuadratureConfig]) -> float:
    return flux_through_rect(magnet, loop, config=config)


@lru_cache(maxsize=4096)
def _loop_gradient(
    magnet: MagnetSpec,
    loop: RectLoop,
    h: Optional[float],
    config: Optional[QuadratureConfig],
) -> float:
    return flux_gradient(magnet, loop, h=h, config=config)


def coil_flux(
    magnet: MagnetSpec,
    coil: CoilSpec,
    magnet_z_offset: float = 0.0,
    config: Optional[QuadratureConfig] = None,
) -> float:
    """
    Total flux linkage in webers, summed over all turns.

    Args:
        magnet (:class:`~acoustic_microgen.types.MagnetSpec`): The source.
        coil (:class:`~acoustic_microgen.types.CoilSpec`): The coil.
        magnet_z_offset (float): Displacement of the magnet toward the coil,
          in meters.
        config (:class:`~acoustic_microgen.types.QuadratureConfig` | None): Quadrature
          settings.

    Returns:
        float
    """
    loops = turn_loops(magnet, coil, magnet_z_offset)
    return float(sum(_loop_flux(magnet, loop, config) for loop in loops))


def coil_flux_gradient(
    magnet: MagnetSpec,
    coil: CoilSpec,
    magnet_z_offset: float = 0.0,
    h: Optional[float] = None,
    config: Optional[QuadratureConfig] = None,
) -> float:
    """
    Derivative in Wb/m of the total linkage with respect to the coil gap.
    See :func:`~acoustic_microgen.magnetics.flux_gradient` for the sign.
    """
    loops = turn_loops(magnet, coil, magnet_z_offset)
    gradient = float(sum(_loop_gradient(magnet, loop, h, config) for loop in loops))
    logger.debug("Coil flux gradient over %d turns: %.6g Wb/m.", len(loops), gradient)
    return gradient


def coil_flux_profile(
    magnet: MagnetSpec,
    coil: CoilSpec,
    offsets,
    config: Optional[QuadratureConfig] = None,
) -> np.ndarray:
    """
    Total linkage at each magnet displacement in ``offsets``. Every turn
    is integrated on a single mesh across all displacements.
    """
    offsets = np.asarray(offsets, dtype=float)
    total = np.zeros(offsets.shape)
    for loop in turn_loops(magnet, coil):
        heights = loop.z_c - offsets
        total += flux_profile(magnet, loop, heights, config=config)

    return total


def coil_flux_table(
    magnet: MagnetSpec,
    coil: CoilSpec,
    offsets,
    config: Optional[QuadratureConfig] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Total linkage and its gap derivative at each magnet displacement in
    ``offsets``. Each turn is meshed once, at the smallest gap reached.
    """
    offsets = np.asarray(offsets, dtype=float)
    flux = np.zeros(offsets.shape)
    gradient = np.zeros(offsets.shape)
    if offsets.size == 0:
        return flux, gradient

    for loop in turn_loops(magnet, coil):
        heights = loop.z_c - offsets
        nearest = loop.at_height(float(heights.min()))
        mesh = gradient_mesh(magnet, nearest, default_step(magnet, nearest), config=config)
        flux += flux_profile(magnet, loop, heights, mesh=mesh)
        gradient += [flux_gradient(magnet, loop.at_height(float(z)), mesh=mesh) for z in heights]

    return flux, gradient
