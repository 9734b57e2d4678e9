"""Shared helpers for the test suite."""

import numpy as np
import pytest

from aerisim.channel import ChannelSet, build_channel_set
from aerisim.config import SystemConfig
from aerisim.geometry import SurfaceKind, SurfaceOrientation, build_scenario


def small_system(**overrides) -> SystemConfig:
    """Modest scenario constants keeping unit tests fast."""
    base = dict(bs_antennas=4, surface_elements=8, users=3,
                p_max=100.0, noise_power=1e-7)
    base.update(overrides)
    return SystemConfig(**base)


def make_scenario(kind=SurfaceKind.VERTICAL_STAR, eta=0.0, seed=0,
                  surface=(50.0, 50.0, 40.0), users=4):
    rng = np.random.default_rng(seed)
    positions = np.column_stack([rng.uniform(0, 100, users),
                                 rng.uniform(0, 100, users),
                                 np.zeros(users)])
    return build_scenario((0.0, 0.0, 0.0), surface, positions,
                          SurfaceOrientation(kind, eta))


def make_channels(system=None, kind=SurfaceKind.VERTICAL_STAR, eta=0.0,
                  seed=0, surface=(50.0, 50.0, 40.0)):
    system = system or small_system()
    scenario = make_scenario(kind, eta, seed, surface, users=system.users)
    return build_channel_set(system, scenario, 1000 + seed)


def manual_channel_set(h_bs_surface, h_surface_user, sides=None) -> ChannelSet:
    """ChannelSet straight from matrices, for algebra-level tests."""
    h_bs_surface = np.atleast_2d(np.asarray(h_bs_surface, dtype=complex))
    h_surface_user = np.atleast_2d(np.asarray(h_surface_user, dtype=complex))
    k = h_surface_user.shape[0]
    if sides is None:
        sides = np.zeros(k, dtype=np.int8)
    return ChannelSet(
        h_bs_surface=h_bs_surface,
        h_surface_user=h_surface_user,
        path_loss_bs=1.0,
        path_loss_users=np.ones(k),
        user_sides=np.asarray(sides, dtype=np.int8))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
