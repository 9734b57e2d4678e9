"""Downlink sum-rate simulation for aerial reflect-only and
transmit-reflect surfaces: directional channels, alternating optimization,
and reproducible experiment sweeps."""

__version__ = "0.1.0"

from .channel import (ChannelSet, LinkBudget, RicianParams, build_channel_set,
                      directivity, link_path_loss, pattern_gain, sample_rician)
from .config import (ConfigError, ExperimentConfig, SystemConfig,
                     dbm_to_mw, db_to_linear, load_experiment_config)
from .evaluation import (SurfaceCoefficients, augmented_objective,
                         effective_gains, mse_vector, sum_rate, user_rates)
from .geometry import (IncidenceGeometry, ScenarioGeometry, Side,
                       SphericalDirection, SurfaceKind, SurfaceOrientation,
                       build_scenario, classify_users, incidence_geometry,
                       spherical_angles, unit_direction)
from .optimizer import (OptimizationResult, PddState, SolverDiagnosticError,
                        SolverOptions, SolverState, WmmseState, initial_state,
                        inner_bcd, solve, update_aux_amplitudes,
                        update_aux_phases, update_duals_penalty,
                        update_precoders, update_receivers,
                        update_surface_coeffs, update_weights)
