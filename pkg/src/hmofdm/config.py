"""Static system parameters shared by every stage of the link."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class ConfigError(ValueError):
    """Raised for inconsistent system or profile parameters."""


CONSTELLATIONS = ("QPSK", "16QAM")
AOA_DISTRIBUTIONS = ("uniform_theta", "uniform_cos")


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM frame and receive-array parameters.

    Defaults are the desk-scale values of the simulated high-speed-train
    link: 256 subcarriers, 32-sample CP, 5 blocks per frame, 0.1 ms block
    duration, 0.1 m wavelength, 0.45 wavelength element spacing and a 1 degree
    beam grid.
    """

    n_subcarriers: int = 256
    cp_length: int = 32
    blocks_per_frame: int = 5
    n_rx_antennas: int = 128
    antenna_spacing_over_lambda: float = 0.45
    wavelength: float = 0.1
    sample_interval: float = 0.1e-3 / 256
    beam_interval: float = 1.0
    constellation: str = "QPSK"

    def __post_init__(self) -> None:
        n_c = self.n_subcarriers
        if n_c < 2 or n_c & (n_c - 1):
            raise ConfigError(f"n_subcarriers must be a power of two, got {n_c}")
        if not 0 <= self.cp_length < n_c:
            raise ConfigError("cp_length must satisfy 0 <= N_cp < N_c")
        if self.blocks_per_frame < 2:
            raise ConfigError("a frame needs a training block and at least one data block")
        if self.n_rx_antennas < 1:
            raise ConfigError("n_rx_antennas must be positive")
        if not 0 < self.antenna_spacing_over_lambda < 0.5:
            raise ConfigError("antenna spacing must lie strictly between 0 and half a wavelength")
        if self.wavelength <= 0 or self.sample_interval <= 0:
            raise ConfigError("wavelength and sample_interval must be positive")
        if not 0 < self.beam_interval <= 180:
            raise ConfigError("beam_interval must lie in (0, 180] degrees")
        if self.constellation not in CONSTELLATIONS:
            raise ConfigError(f"constellation must be one of {CONSTELLATIONS}")

    @property
    def block_length(self) -> int:
        return self.n_subcarriers + self.cp_length

    @property
    def block_duration(self) -> float:
        return self.n_subcarriers * self.sample_interval

    @property
    def frame_length(self) -> int:
        return self.blocks_per_frame * self.block_length

    @property
    def branch_count(self) -> int:
        # small epsilon keeps 180/Δ exact for Δ values like 0.1 that are inexact in binary
        return int(math.floor(180.0 / self.beam_interval + 1e-9)) + 1

    def with_(self, **changes) -> OfdmConfig:
        return replace(self, **changes)


def _exponential_powers(n_taps: int, decay: float = 0.5) -> tuple[float, ...]:
    p = np.exp(-decay * np.arange(n_taps))
    return tuple(float(x) for x in p / p.sum())


@dataclass(frozen=True)
class ChannelProfile:
    """Power-delay profile of the tapped-delay-line Jakes channel.

    ``tap_powers`` are the E_l**2 values; they are renormalized to sum to one
    so the average channel power is unity.
    """

    delays: tuple[int, ...] = (0, 4, 9, 16)
    tap_powers: tuple[float, ...] = field(default_factory=lambda: _exponential_powers(4))
    paths_per_tap: int = 32
    aoa_distribution: str = "uniform_theta"

    def __post_init__(self) -> None:
        delays = tuple(int(d) for d in self.delays)
        powers = tuple(float(p) for p in self.tap_powers)
        if not delays:
            raise ConfigError("profile needs at least one tap")
        if len(delays) != len(powers):
            raise ConfigError("delays and tap_powers must have equal length")
        if delays[0] != 0 or any(b <= a for a, b in zip(delays, delays[1:])):
            raise ConfigError("delays must start at 0 and be strictly increasing")
        if any(p < 0 for p in powers) or sum(powers) <= 0:
            raise ConfigError("tap powers must be non-negative with positive sum")
        if self.paths_per_tap < 1:
            raise ConfigError("paths_per_tap must be positive")
        if self.aoa_distribution not in AOA_DISTRIBUTIONS:
            raise ConfigError(f"aoa_distribution must be one of {AOA_DISTRIBUTIONS}")
        total = sum(powers)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "tap_powers", tuple(p / total for p in powers))

    @property
    def n_taps(self) -> int:
        return len(self.delays)

    @property
    def tap_scales(self) -> np.ndarray:
        """Amplitude scales E_l."""
        return np.sqrt(np.asarray(self.tap_powers))

    def validate_for(self, config: OfdmConfig) -> None:
        if self.delays[-1] > config.cp_length - 1:
            raise ConfigError(
                f"max delay {self.delays[-1]} exceeds CP capacity {config.cp_length - 1}"
            )

    @classmethod
    def single_path(cls, paths_per_tap: int = 1) -> ChannelProfile:
        return cls(delays=(0,), tap_powers=(1.0,), paths_per_tap=paths_per_tap)
