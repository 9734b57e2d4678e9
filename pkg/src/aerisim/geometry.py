"""3D geometry for surface-assisted downlinks.

Converts Cartesian positions of the base station, the aerial surface and the
users into azimuth/elevation angles, unit direction vectors, incidence
cosines at the surface, and the reflection/transmission classification of
each user. All angles are radians; positions are meters.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class SurfaceKind(enum.Enum):
    """Deployment style of the aerial surface."""

    HORIZONTAL_RIS = "ris"
    VERTICAL_STAR = "star"


class Side(enum.IntEnum):
    """Half-space a user occupies relative to the surface."""

    REFLECTION = 0
    TRANSMISSION = 1


class SphericalDirection(NamedTuple):
    """Azimuth/elevation pair describing a unit direction.

    azimuth is measured in the horizontal plane from the +x axis, in
    (-pi, pi]; elevation is measured from the horizontal plane, in
    [-pi/2, pi/2].
    """

    azimuth: float
    elevation: float


@dataclass(frozen=True)
class SurfaceOrientation:
    """Surface kind plus the orientation angle of a vertical surface.

    ``eta`` is meaningful only for a vertical transmit/reflect surface: at
    eta = 0 the unit normal points along +x and grows counterclockwise.
    A horizontal reflect-only surface always has normal [0, 0, -1].
    """

    kind: SurfaceKind
    eta: float = 0.0

    def normal(self) -> np.ndarray:
        if self.kind is SurfaceKind.HORIZONTAL_RIS:
            return np.array([0.0, 0.0, -1.0])
        return np.array([np.cos(self.eta), np.sin(self.eta), 0.0])


@dataclass(frozen=True)
class IncidenceGeometry:
    """Surface-side link cosines and per-user half-space assignment.

    ``cos_bs`` is the cosine of the base-station link angle at the surface;
    ``cos_users[k]`` the same for user k. Both are signed; pattern
    evaluation downstream takes absolute values for the vertical surface.
    """

    cos_bs: float
    cos_users: np.ndarray
    sides: np.ndarray  # int8 vector of Side values


@dataclass(frozen=True)
class ScenarioGeometry:
    """Full placement of one scenario with derived angles and distances."""

    bs_position: np.ndarray
    surface_position: np.ndarray
    user_positions: np.ndarray  # (K, 3)
    orientation: SurfaceOrientation
    bs_direction: SphericalDirection = field(repr=False, default=None)
    user_directions: tuple = field(repr=False, default=None)
    incidence: IncidenceGeometry = field(repr=False, default=None)
    bs_distance: float = 0.0
    user_distances: np.ndarray = None


def spherical_angles(from_pos, to_pos) -> SphericalDirection:
    """Azimuth/elevation of the line from ``from_pos`` toward ``to_pos``.

    When the horizontal projection of the offset vanishes, the azimuth is 0
    by convention and the elevation is +-pi/2. Coincident points raise
    ValueError.
    """
    d = np.asarray(to_pos, dtype=float) - np.asarray(from_pos, dtype=float)
    if not np.all(np.isfinite(d)):
        raise ValueError("positions must be finite")
    if np.all(d == 0.0):
        raise ValueError(f"coincident points: {from_pos} -> {to_pos}")
    horiz = np.hypot(d[0], d[1])
    azimuth = float(np.arctan2(d[1], d[0]))  # atan2(0, 0) = 0 keeps the convention
    elevation = float(np.arctan2(d[2], horiz))
    return SphericalDirection(azimuth, elevation)


def unit_direction(direction: SphericalDirection) -> np.ndarray:
    """Unit 3-vector [cos(el)cos(az), cos(el)sin(az), sin(el)]."""
    az, el = direction
    ce = np.cos(el)
    return np.array([ce * np.cos(az), ce * np.sin(az), np.sin(el)])


def incidence_geometry(orientation: SurfaceOrientation,
                       e_bs: np.ndarray,
                       e_users: np.ndarray) -> IncidenceGeometry:
    """Surface-side cosines for unit directions pointing *toward* the surface.

    The cosine of the link angle at the surface is the dot product of the
    surface normal with the direction from the surface toward the endpoint,
    i.e. ``-normal . e`` for ``e`` pointing endpoint -> surface. For the
    horizontal reflect-only surface every user is on the reflection side;
    for the vertical surface a user is on the reflection side iff its
    cosine is >= 0.
    """
    n = orientation.normal()
    e_users = np.atleast_2d(np.asarray(e_users, dtype=float))
    cos_bs = float(np.clip(-np.dot(n, np.asarray(e_bs, dtype=float)), -1.0, 1.0))
    cos_users = np.clip(-(e_users @ n), -1.0, 1.0)
    if orientation.kind is SurfaceKind.HORIZONTAL_RIS:
        sides = np.full(cos_users.shape[0], Side.REFLECTION, dtype=np.int8)
    else:
        sides = np.where(cos_users >= 0.0, Side.REFLECTION, Side.TRANSMISSION)
        sides = sides.astype(np.int8)
    return IncidenceGeometry(cos_bs=cos_bs, cos_users=cos_users, sides=sides)


def classify_users(geom: IncidenceGeometry):
    """Partition user indices into (reflection, transmission) index arrays."""
    sides = np.asarray(geom.sides)
    reflection = np.flatnonzero(sides == Side.REFLECTION)
    transmission = np.flatnonzero(sides == Side.TRANSMISSION)
    return reflection, transmission


def build_scenario(bs_position,
                   surface_position,
                   user_positions,
                   orientation: SurfaceOrientation) -> ScenarioGeometry:
    """Assemble a scenario and derive all angles, cosines and distances."""
    bs = np.asarray(bs_position, dtype=float)
    surf = np.asarray(surface_position, dtype=float)
    users = np.atleast_2d(np.asarray(user_positions, dtype=float))
    if users.shape[1] != 3:
        raise ValueError("user positions must be (K, 3)")

    bs_dir = spherical_angles(bs, surf)
    user_dirs = tuple(spherical_angles(u, surf) for u in users)
    e_bs = unit_direction(bs_dir)
    e_users = np.stack([unit_direction(d) for d in user_dirs])
    inc = incidence_geometry(orientation, e_bs, e_users)

    return ScenarioGeometry(
        bs_position=bs,
        surface_position=surf,
        user_positions=users,
        orientation=orientation,
        bs_direction=bs_dir,
        user_directions=user_dirs,
        incidence=inc,
        bs_distance=float(np.linalg.norm(surf - bs)),
        user_distances=np.linalg.norm(users - surf[None, :], axis=1),
    )
