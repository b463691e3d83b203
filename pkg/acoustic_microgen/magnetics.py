"""
Field of a uniformly magnetized cuboid magnet and the flux it links
through horizontal rectangular loops.

The magnet sits at the origin of its own frame with its pole faces at
``z = ±thickness_z / 2``. ``Bz`` comes from the equivalent surface-charge
model, and loop fluxes from an adaptive tensor-product Gauss-Legendre
rule over rectangular panels.
"""

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from acoustic_microgen._utils import require_finite
from acoustic_microgen.exceptions import DomainError, NumericalError, SingularityError
from acoustic_microgen.types import FieldPoint, MagnetSpec, QuadratureConfig, RectLoop

logger = logging.getLogger(__name__)

FACE_OFFSET = 1e-9
"""Points on a pole-face plane are moved this far away from the magnet, in meters."""

MIN_STEP = 1e-7
"""Floor of the default finite-difference step, in meters."""

ROOT_DIVISIONS = 4
"""Each edge-aligned root cell is split this many times per axis before adapting."""

_NODE_CHUNK = 1 << 18
_SIGNS = ((1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0))


def _charge_sum(half_x: float, half_y: float, x, y, w) -> np.ndarray:
    # Field of one charged rectangle, up to a factor, at height ``w`` above it.
    total = np.zeros(np.broadcast(x, y, w).shape)
    w2 = w * w
    for p, q in _SIGNS:
        u = x + p * half_x
        v = y + q * half_y
        r = np.sqrt(u * u + v * v + w2)
        total += p * q * np.arctan(u * v / (w * r))

    return total


def bz_field(
    magnet: MagnetSpec,
    x: Union[float, np.ndarray],
    y: Union[float, np.ndarray],
    z: Union[float, np.ndarray],
    offset_faces: bool = True,
) -> np.ndarray:
    """
    Vectorized ``Bz`` in tesla at the points ``(x, y, z)`` of the magnet frame.
    Points inside the magnet include the magnetization, ``B = μ0 (H + M)``.

    Args:
        magnet (:class:`~acoustic_microgen.types.MagnetSpec`): The source.
        x: Coordinates, in meters. Broadcast against ``y`` and ``z``.
        y: Coordinates, in meters.
        z: Coordinates, in meters.
        offset_faces (bool): Move points on a pole-face plane ``FACE_OFFSET``
          away from the magnet. When ``False``, such points raise.

    Raises:
        :class:`~acoustic_microgen.exceptions.DomainError`: When a coordinate
          is not finite.
        :class:`~acoustic_microgen.exceptions.SingularityError`: When a point
          lies on a pole-face plane and ``offset_faces`` is ``False``.

    Returns:
        numpy.ndarray: The broadcast field values.
    """
    x, y, z = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(z, dtype=float)
    )
    require_finite(x=x, y=y, z=z)
    if magnet.remanence == 0:
        return np.zeros(x.shape)

    a, b, c = magnet.half_extents

    # The closed form is singular on the pole-face planes.
    on_face = np.abs(z) == c
    if not offset_faces and on_face.any():
        raise SingularityError(f"Bz is singular on the pole-face planes z = ±{c:.6g} m.")

    z = np.where(on_face, z + np.copysign(FACE_OFFSET, z), z)

    field = _charge_sum(a, b, x, y, z - c) - _charge_sum(a, b, x, y, z + c)
    field *= magnet.remanence / (4 * math.pi)

    inside = (np.abs(x) < a) & (np.abs(y) < b) & (np.abs(z) < c)
    return np.where(inside, field + magnet.remanence, field)


def bz_at(
    magnet: MagnetSpec,
    point: Union[FieldPoint, Sequence[float]],
    offset_faces: bool = True,
) -> float:
    """
    ``Bz`` in tesla at a single point.

    Args:
        magnet (:class:`~acoustic_microgen.types.MagnetSpec`): The source.
        point (:class:`~acoustic_microgen.types.FieldPoint` | tuple): Where to
          evaluate, in the magnet frame.

    Returns:
        float
    """
    if isinstance(point, FieldPoint):
        coordinates = (point.x, point.y, point.z)
    else:
        coordinates = tuple(float(v) for v in point)
        if len(coordinates) != 3:
            raise DomainError(f"Expected an (x, y, z) point, got {point!r}.")

    return float(bz_field(magnet, *coordinates, offset_faces=offset_faces))


@lru_cache(maxsize=16)
def _gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(order)
    return nodes, np.outer(weights, weights)


def _panel_integrals(
    magnet: MagnetSpec, panels: np.ndarray, z: float, order: int
) -> np.ndarray:
    nodes, weights = _gauss_rule(order)
    per_chunk = max(1, _NODE_CHUNK // (order * order))
    result = np.empty(len(panels))
    for start in range(0, len(panels), per_chunk):
        chunk = panels[start : start + per_chunk]
        half_x = (chunk[:, 1] - chunk[:, 0]) / 2
        half_y = (chunk[:, 3] - chunk[:, 2]) / 2
        xs = (chunk[:, 0] + half_x)[:, None, None] + half_x[:, None, None] * nodes[None, :, None]
        ys = (chunk[:, 2] + half_y)[:, None, None] + half_y[:, None, None] * nodes[None, None, :]
        values = bz_field(magnet, xs, ys, z)
        integrals = np.einsum("ij,nij->n", weights, values)
        result[start : start + per_chunk] = half_x * half_y * integrals

    return result


def _split(panels: np.ndarray) -> np.ndarray:
    # Quarter every panel; children of panel ``i`` occupy rows ``4i .. 4i + 3``.
    x0, x1, y0, y1 = panels.T
    xm = (x0 + x1) / 2
    ym = (y0 + y1) / 2
    children = np.stack(
        [
            np.stack([x0, xm, y0, ym], axis=1),
            np.stack([xm, x1, y0, ym], axis=1),
            np.stack([x0, xm, ym, y1], axis=1),
            np.stack([xm, x1, ym, y1], axis=1),
        ],
        axis=1,
    )
    return children.reshape(-1, 4)


def _breaks(lo: float, hi: float, edges: Iterable[float]) -> np.ndarray:
    inner = [e for e in edges if lo < e < hi]
    cells = np.unique(np.array([lo, *inner, hi]))
    return np.concatenate(
        [
            np.linspace(start, stop, ROOT_DIVISIONS + 1)[:-1]
            for start, stop in zip(cells[:-1], cells[1:])
        ]
        + [cells[-1:]]
    )


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    The accepted panels of an adaptive flux integration, reusable at other
    plane heights so that flux differences see a smoothly varying
    quadrature error.
    """

    panels: np.ndarray
    """``(N, 4)`` rows of ``x0, x1, y0, y1``."""

    multiplicity: int
    """``4`` when one quadrant of a coaxial loop stands in for the whole loop."""

    order: int
    depth: int

    @property
    def panel_count(self) -> int:
        return len(self.panels)

    def integrate(self, magnet: MagnetSpec, z: float) -> float:
        """
        Flux in webers through the meshed region at plane height ``z``.
        """
        return self.multiplicity * float(_panel_integrals(magnet, self.panels, z, self.order).sum())


def _plane_cuts_magnet(magnet: MagnetSpec, loop: RectLoop, z: float) -> bool:
    a, b, c = magnet.half_extents
    x0, x1, y0, y1 = loop.bounds
    overlaps = x0 < a and -a < x1 and y0 < b and -b < y1
    return overlaps and abs(z) < c


def _check_clear(magnet: MagnetSpec, loop: RectLoop, heights: Iterable[float]):
    for z in heights:
        require_finite(z_c=z)
        if _plane_cuts_magnet(magnet, loop, z):
            raise DomainError(
                f"Loop plane at z={z:.6g} m intersects the magnet volume "
                f"(faces at ±{magnet.top:.6g} m)."
            )


def adapt_mesh(
    magnet: MagnetSpec,
    loop: RectLoop,
    z: Optional[float] = None,
    config: Optional[QuadratureConfig] = None,
) -> tuple[Mesh, float]:
    """
    Adaptively subdivide the loop interior until every panel meets its
    share of the relative tolerance.

    Args:
        magnet (:class:`~acoustic_microgen.types.MagnetSpec`): The source.
        loop (:class:`~acoustic_microgen.types.RectLoop`): The integration region.
        z (float | None): The plane height to adapt at. Defaults to ``loop.z_c``.
        config (:class:`~acoustic_microgen.types.QuadratureConfig` | None): Tolerance,
          depth and rule order.

    Raises:
        :class:`~acoustic_microgen.exceptions.NumericalError`: When the
          maximum depth is reached before convergence.

    Returns:
        tuple[:class:`~acoustic_microgen.magnetics.Mesh`, float]: The mesh and
        the flux estimate at ``z``.
    """
    config = config or QuadratureConfig()
    z = loop.z_c if z is None else z
    _check_clear(magnet, loop, (z,))
    a, b, _ = magnet.half_extents
    x0, x1, y0, y1 = loop.bounds
    multiplicity = 1
    if loop.is_coaxial:
        # Bz is even in x and y about the magnet axis.
        x0 = y0 = 0.0
        multiplicity = 4

    xs = _breaks(x0, x1, (-a, 0.0, a))
    ys = _breaks(y0, y1, (-b, 0.0, b))
    gx0, gy0 = np.meshgrid(xs[:-1], ys[:-1], indexing="ij")
    gx1, gy1 = np.meshgrid(xs[1:], ys[1:], indexing="ij")
    active = np.stack([gx0.ravel(), gx1.ravel(), gy0.ravel(), gy1.ravel()], axis=1)
    region_area = (x1 - x0) * (y1 - y0)

    estimates = _panel_integrals(magnet, active, z, config.order)
    scale = float(np.abs(estimates).sum())
    accepted_panels = []
    accepted_total = 0.0
    accepted_abs = 0.0
    depth = 0
    while len(active):
        children = _split(active)
        child_values = _panel_integrals(magnet, children, z, config.order).reshape(-1, 4)
        refined = child_values.sum(axis=1)
        error = np.abs(refined - estimates)
        scale = max(scale, accepted_abs + float(np.abs(child_values).sum()))
        area = (active[:, 1] - active[:, 0]) * (active[:, 3] - active[:, 2])
        converged = error <= config.rtol * scale * area / region_area
        depth += 1

        accepted_panels.append(children.reshape(-1, 4, 4)[converged].reshape(-1, 4))
        accepted_total += float(refined[converged].sum())
        accepted_abs += float(np.abs(child_values[converged]).sum())
        if converged.all():
            break

        elif depth >= config.max_depth:
            pending = ~converged
            raise NumericalError(
                f"Flux quadrature did not converge within depth {config.max_depth}",
                estimate=multiplicity * (accepted_total + float(refined[pending].sum())),
                error_bound=multiplicity * float(error[pending].sum()),
            )

        active = children.reshape(-1, 4, 4)[~converged].reshape(-1, 4)
        estimates = child_values[~converged].ravel()

    mesh = Mesh(
        panels=np.concatenate(accepted_panels) if accepted_panels else np.empty((0, 4)),
        multiplicity=multiplicity,
        order=config.order,
        depth=depth,
    )
    logger.debug("Adapted flux mesh: %d panels, depth %d.", mesh.panel_count, depth)
    return mesh, multiplicity * accepted_total


def flux_through_rect(
    magnet: MagnetSpec, loop: RectLoop, config: Optional[QuadratureConfig] = None
) -> float:
    """
    Flux in webers of ``Bz`` through the loop interior.

    Args:
        magnet (:class:`~acoustic_microgen.types.MagnetSpec`): The source.
        loop (:class:`~acoustic_microgen.types.RectLoop`): The loop.
        config (:class:`~acoustic_microgen.types.QuadratureConfig` | None): Quadrature
          settings.

    Raises:
        :class:`~acoustic_microgen.exceptions.DomainError`: When the loop
          plane cuts through the magnet.
        :class:`~acoustic_microgen.exceptions.NumericalError`: When the
          quadrature does not converge.

    Returns:
        float
    """
    _, flux = adapt_mesh(magnet, loop, config=config)
    return flux


def _gap(magnet: MagnetSpec, z: float) -> float:
    return abs(z) - magnet.top


def flux_profile(
    magnet: MagnetSpec,
    loop: RectLoop,
    heights: Sequence[float],
    config: Optional[QuadratureConfig] = None,
    mesh: Optional[Mesh] = None,
) -> np.ndarray:
    """
    Flux through ``loop`` moved to each plane height in ``heights``, all
    integrated on one mesh. Unless given, the mesh is adapted at the
    height nearest the magnet.

    Returns:
        numpy.ndarray
    """
    heights = np.asarray(heights, dtype=float)
    if heights.size == 0:
        return np.zeros(0)

    _check_clear(magnet, loop, heights)
    if mesh is None:
        nearest = float(heights[np.argmin(np.abs(heights))])
        mesh, _ = adapt_mesh(magnet, loop, z=nearest, config=config)

    return np.array([mesh.integrate(magnet, float(z)) for z in heights])


def default_step(magnet: MagnetSpec, loop: RectLoop) -> float:
    """
    ``max(gap / 100, 0.1 μm)`` for a loop at its own plane height.
    """
    return max(_gap(magnet, loop.z_c) / 100, MIN_STEP)


def gradient_mesh(
    magnet: MagnetSpec, loop: RectLoop, h: float, config: Optional[QuadratureConfig] = None
) -> Mesh:
    """
    The mesh :func:`flux_gradient` integrates on. It is adapted halfway
    between the loop and the magnet so that it does not depend on ``h``
    for any step below half the gap.
    """
    gap = _gap(magnet, loop.z_c)
    offset = max(gap / 2, h)
    z = loop.z_c - math.copysign(offset, loop.z_c) if gap > 0 else loop.z_c
    mesh, _ = adapt_mesh(magnet, loop, z=z, config=config)
    return mesh


def flux_gradient(
    magnet: MagnetSpec,
    loop: RectLoop,
    h: Optional[float] = None,
    config: Optional[QuadratureConfig] = None,
    mesh: Optional[Mesh] = None,
) -> float:
    """
    Derivative in Wb/m of the loop flux with respect to the loop plane
    height, by central differences with one Richardson step.

    For a magnet below the loop this is the derivative with respect to the
    gap; it is negative when the remanence is positive. Moving the magnet
    toward the coil changes the flux by the negated value.

    Args:
        magnet (:class:`~acoustic_microgen.types.MagnetSpec`): The source.
        loop (:class:`~acoustic_microgen.types.RectLoop`): The loop.
        h (float | None): The step, in meters. Defaults to
          :func:`default_step`.
        config (:class:`~acoustic_microgen.types.QuadratureConfig` | None): Quadrature
          settings.
        mesh (:class:`~acoustic_microgen.magnetics.Mesh` | None): A mesh to
          reuse. Defaults to :func:`gradient_mesh`.

    Raises:
        :class:`~acoustic_microgen.exceptions.DomainError`: When ``h`` is not
          positive or the stencil reaches into the magnet.

    Returns:
        float
    """
    h = default_step(magnet, loop) if h is None else h
    require_finite(h=h)
    if h <= 0:
        raise DomainError(f"Step h must be positive (got {h}).")

    z = loop.z_c
    a, b, c = magnet.half_extents
    x0, x1, y0, y1 = loop.bounds
    overlaps = x0 < a and -a < x1 and y0 < b and -b < y1
    if overlaps and (z - h) <= c and (z + h) >= -c:
        raise DomainError(
            f"Difference stencil z={z:.6g}±{h:.3g} m straddles the magnet surface "
            f"(faces at ±{c:.6g} m)."
        )

    if magnet.remanence == 0:
        return 0.0

    mesh = mesh or gradient_mesh(magnet, loop, h, config=config)
    heights = (z - h, z - h / 2, z + h / 2, z + h)
    low, half_low, half_high, high = flux_profile(magnet, loop, heights, mesh=mesh)
    coarse = (high - low) / (2 * h)
    fine = (half_high - half_low) / h
    return (4 * fine - coarse) / 3
