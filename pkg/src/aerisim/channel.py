"""Directional path loss and Rician fading channel synthesis.

Two link families exist: base station -> surface (an N x M matrix) and
surface -> user k (N-vectors). Each link combines a deterministic
line-of-sight steering structure with an independent scattered component,
scaled by a large-scale gain that follows an inverse-square law shaped by
cosine-power radiation patterns at the surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ScenarioGeometry, SurfaceKind

# Substream tags separating the random draws of different links.
_STREAM_BS_SURFACE = 101
_STREAM_SURFACE_USER = 202


@dataclass(frozen=True)
class RadiationPattern:
    """Cosine-power pattern with nonnegative directivity exponent q."""

    q: float

    def __post_init__(self):
        if self.q < 0:
            raise ValueError(f"directivity exponent must be >= 0, got {self.q}")


@dataclass(frozen=True)
class LinkBudget:
    """Inputs of the large-scale gain of a single link.

    ``ref_gain`` is the linear reference gain, ``distance`` in meters,
    ``surface_cos`` the (absolute-valued) pattern argument at the surface,
    ``q_a``/``q_b`` the two endpoint directivity exponents, and
    ``q_surface`` the exponent applied to ``surface_cos``.
    """

    ref_gain: float
    distance: float
    surface_cos: float
    q_a: float
    q_b: float
    q_surface: float

    def __post_init__(self):
        if self.distance <= 0:
            raise ValueError(f"link distance must be positive, got {self.distance}")
        if not 0.0 <= self.surface_cos <= 1.0:
            raise ValueError(f"surface cosine must be in [0, 1], got {self.surface_cos}")


@dataclass(frozen=True)
class RicianParams:
    """Linear Rician factor and linear large-scale gain of one link."""

    k_factor: float
    path_loss: float

    def __post_init__(self):
        if self.k_factor < 0 or self.path_loss < 0:
            raise ValueError("Rician factor and path loss must be nonnegative")


@dataclass(frozen=True)
class ChannelSet:
    """One fading realization for every link of a scenario.

    ``h_bs_surface`` is N x M, ``h_surface_user`` stacks the per-user
    N-vectors as a K x N array. ``user_sides`` carries the half-space
    classification so downstream consumers can pick the matching surface
    coefficients per user.
    """

    h_bs_surface: np.ndarray
    h_surface_user: np.ndarray
    path_loss_bs: float
    path_loss_users: np.ndarray
    user_sides: np.ndarray


def pattern_gain(theta, q):
    """Normalized power pattern cos(theta)^q on [0, pi/2], zero elsewhere."""
    theta = np.asarray(theta, dtype=float)
    inside = (theta >= 0.0) & (theta <= np.pi / 2)
    gain = np.where(inside, np.cos(np.where(inside, theta, 0.0)) ** q, 0.0)
    if gain.ndim == 0:
        return float(gain)
    return gain


def directivity(q: float) -> float:
    """Peak directivity of the cosine-power pattern, 2q + 2 (linear)."""
    if q < 0:
        raise ValueError(f"directivity exponent must be >= 0, got {q}")
    return 2.0 * q + 2.0


def link_path_loss(budget: LinkBudget) -> float:
    """Linear large-scale gain of a link.

    Inverse-square distance decay, a 10^{0.2 (q_a + q_b + 2)} directivity
    factor from the two endpoints, and the surface's cosine-power response.
    The endpoint pattern factors are unity because both endpoints point at
    the surface.
    """
    try:
        directivity_factor = 10.0 ** (0.2 * (budget.q_a + budget.q_b + 2.0))
    except OverflowError:
        directivity_factor = float("inf")
    return (budget.ref_gain / budget.distance**2) * directivity_factor \
        * budget.surface_cos**budget.q_surface


def steering_vector(n_elements: int, axial_cos: float) -> np.ndarray:
    """Far-field steering vector of a half-wavelength uniform linear array.

    ``axial_cos`` is the direction cosine of the ray along the array axis
    (the sine of the broadside angle); entry i carries phase pi * i * cos.
    """
    idx = np.arange(n_elements)
    return np.exp(1j * np.pi * idx * axial_cos)


def los_matrix(n_rx: int, n_tx: int, rx_axial_cos: float, tx_axial_cos: float) -> np.ndarray:
    """Rank-1 line-of-sight matrix from the two endpoint steering vectors."""
    a_rx = steering_vector(n_rx, rx_axial_cos)
    a_tx = steering_vector(n_tx, tx_axial_cos)
    return np.outer(a_rx, a_tx.conj())


def los_vector(n_elements: int, axial_cos: float) -> np.ndarray:
    """Line-of-sight steering vector for a single-antenna endpoint link."""
    return steering_vector(n_elements, axial_cos)


def sample_rician(params: RicianParams, los, rng: np.random.Generator) -> np.ndarray:
    """Draw one Rician realization around a unit-modulus LoS component.

    The scattered part has independent circularly-symmetric unit-variance
    complex Gaussian entries; the K-factor splits power between the two,
    and the whole realization is scaled by sqrt(path_loss).
    """
    los = np.asarray(los)
    k = params.k_factor
    nlos = (rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape)) \
        / np.sqrt(2.0)
    mix = np.sqrt(k / (1.0 + k)) * los + np.sqrt(1.0 / (1.0 + k)) * nlos
    return np.sqrt(params.path_loss) * mix


def _link_rng(seed, stream: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), stream, index])
    return np.random.default_rng(ss)


def build_channel_set(system, scenario: ScenarioGeometry, seed) -> ChannelSet:
    """Synthesize all channels of a scenario from a single integer seed.

    Each link draws its scattered component from its own seed-derived
    substream, so realizations are independent across links yet bit-stable
    for a fixed (seed, link) pair. The vertical surface uses the absolute
    value of the signed incidence cosines for its pattern response.
    """
    if scenario.bs_distance <= 0.0 or np.any(scenario.user_distances <= 0.0):
        raise ValueError("degenerate geometry: zero-length link")

    inc = scenario.incidence
    star = scenario.orientation.kind is SurfaceKind.VERTICAL_STAR
    cos_bs = abs(inc.cos_bs) if star else max(inc.cos_bs, 0.0)
    cos_users = np.abs(inc.cos_users) if star else np.maximum(inc.cos_users, 0.0)

    rho_bs = link_path_loss(LinkBudget(
        ref_gain=system.ref_gain, distance=scenario.bs_distance,
        surface_cos=cos_bs, q_a=system.q_bs, q_b=system.q_surface,
        q_surface=system.q_surface))
    rho_users = np.array([
        link_path_loss(LinkBudget(
            ref_gain=system.ref_gain, distance=float(d),
            surface_cos=float(c), q_a=system.q_surface, q_b=system.q_user,
            q_surface=system.q_surface))
        for d, c in zip(scenario.user_distances, cos_users)
    ])

    # Array axes: the base station array lies along x; the surface array
    # lies along x when horizontal and along the in-plane horizontal
    # direction [-sin eta, cos eta, 0] when vertical.
    bs_axis = np.array([1.0, 0.0, 0.0])
    if star:
        eta = scenario.orientation.eta
        surf_axis = np.array([-np.sin(eta), np.cos(eta), 0.0])
    else:
        surf_axis = np.array([1.0, 0.0, 0.0])

    from .geometry import unit_direction  # local import avoids cycle at module load

    e_bs = unit_direction(scenario.bs_direction)
    u_bs = float(bs_axis @ e_bs)
    u_surf_bs = float(surf_axis @ e_bs)

    n, m = system.surface_elements, system.bs_antennas
    los_bs = los_matrix(n, m, u_surf_bs, u_bs)
    rng = _link_rng(seed, _STREAM_BS_SURFACE, 0)
    h_bs_surface = sample_rician(
        RicianParams(system.rician_bs_surface, rho_bs), los_bs, rng)

    h_users = np.empty((len(rho_users), n), dtype=complex)
    for k, direction in enumerate(scenario.user_directions):
        e_k = unit_direction(direction)
        u_surf_k = float(surf_axis @ (-e_k))  # ray leaves the surface toward the user
        los_k = los_vector(n, u_surf_k)
        rng_k = _link_rng(seed, _STREAM_SURFACE_USER, k)
        h_users[k] = sample_rician(
            RicianParams(system.rician_surface_user, rho_users[k]), los_k, rng_k)

    if not (np.all(np.isfinite(h_bs_surface)) and np.all(np.isfinite(h_users))):
        raise ValueError("non-finite channel entries; check pattern exponents "
                         "and link budget for overflow")

    return ChannelSet(
        h_bs_surface=h_bs_surface,
        h_surface_user=h_users,
        path_loss_bs=rho_bs,
        path_loss_users=rho_users,
        user_sides=inc.sides.copy(),
    )
