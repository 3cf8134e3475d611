"""Fixed matched-filter beam grid over 0..180 degrees.

Angles are exposed in degrees; conversion to radians happens only here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hmofdm.channel import RxFrame, steering_vector
from hmofdm.config import ConfigError, OfdmConfig


@dataclass(frozen=True)
class BeamNetwork:
    angles_deg: np.ndarray  # (Q,)
    weights: np.ndarray  # (N_r, Q), column i is w(theta_i) = a(theta_i) / N_r
    config: OfdmConfig

    @property
    def branch_count(self) -> int:
        return len(self.angles_deg)

    @property
    def angles_rad(self) -> np.ndarray:
        return np.deg2rad(self.angles_deg)

    @property
    def cosines(self) -> np.ndarray:
        return np.cos(self.angles_rad)


@dataclass(frozen=True)
class BranchSignals:
    """Beamformed, CP-stripped blocks for every branch: shape (Q, N_b, N_c)."""

    samples: np.ndarray
    angles_deg: np.ndarray

    def branch(self, i: int) -> np.ndarray:
        return self.samples[i]

    @property
    def training(self) -> np.ndarray:
        """Block 0 of every branch, shape (Q, N_c)."""
        return self.samples[:, 0, :]


def build_network(config: OfdmConfig) -> BeamNetwork:
    q = config.branch_count
    angles = config.beam_interval * np.arange(q, dtype=float)
    weights = steering_vector(np.deg2rad(angles), config) / config.n_rx_antennas
    return BeamNetwork(angles, weights, config)


def beamform_block(block: np.ndarray, network: BeamNetwork) -> np.ndarray:
    """``w(theta_i)^H Y_m`` for every branch; returns shape (Q, N_c)."""
    block = np.asarray(block)
    if block.ndim != 2 or block.shape[0] != network.weights.shape[0]:
        raise ConfigError(
            f"block shape {block.shape} incompatible with {network.weights.shape[0]} antennas"
        )
    return network.weights.conj().T @ block


def beamform_frame(rx: RxFrame, network: BeamNetwork) -> BranchSignals:
    cfg = rx.config
    blocks = rx.blocks()  # (N_r, N_b, N_c)
    flat = blocks.reshape(cfg.n_rx_antennas, -1)
    out = beamform_block(flat, network).reshape(network.branch_count, cfg.blocks_per_frame, -1)
    return BranchSignals(out, network.angles_deg)


def antenna_signals(rx: RxFrame) -> BranchSignals:
    """Per-antenna CP-stripped blocks in the same container, for array-free receivers."""
    return BranchSignals(np.ascontiguousarray(rx.blocks()), np.full(rx.config.n_rx_antennas, np.nan))


def beam_pattern(network: BeamNetwork, theta0_deg: float, probe_deg) -> np.ndarray:
    """Array gain ``|w(theta0)^H a(theta)|`` over the probe angles (degrees)."""
    config = network.config
    probe = np.asarray(probe_deg, dtype=float)
    if np.any(probe < 0) or np.any(probe > 180):
        raise ConfigError("probe angles must lie in [0, 180] degrees")
    w = steering_vector(np.deg2rad(theta0_deg), config) / config.n_rx_antennas
    return np.abs(w.conj() @ steering_vector(np.deg2rad(probe), config))


def array_factor(cos_diff, config: OfdmConfig) -> np.ndarray:
    """Closed-form normalized ULA gain as a function of cos(theta) - cos(theta0)."""
    x = np.pi * config.antenna_spacing_over_lambda * np.asarray(cos_diff, dtype=float)
    n = config.n_rx_antennas
    num = np.sin(n * x)
    den = n * np.sin(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(np.abs(den) < 1e-15, 1.0, np.abs(num / np.where(den == 0, 1, den)))
    return out
