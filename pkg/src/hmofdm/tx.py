"""OFDM transmitter: symbol mapping, orthonormal IDFT, cyclic prefix, frames."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from hmofdm.config import ConfigError, OfdmConfig


class BlockRole(Enum):
    TRAINING = "training"
    DATA = "data"


def _gray_pam(bits_per_axis: int) -> np.ndarray:
    levels = 2**bits_per_axis
    gray = np.arange(levels) ^ (np.arange(levels) >> 1)
    amplitude = 2.0 * np.arange(levels) - (levels - 1)
    out = np.empty(levels)
    out[gray] = amplitude
    return out


def constellation_points(name: str) -> np.ndarray:
    """Gray-labelled unit-average-power points; index i carries bit label i."""
    if name == "QPSK":
        pam = _gray_pam(1)
    elif name == "16QAM":
        pam = _gray_pam(2)
    else:
        raise ConfigError(f"unknown constellation {name!r}")
    m = len(pam)
    idx = np.arange(m * m)
    pts = pam[idx >> (m.bit_length() - 1)] + 1j * pam[idx & (m - 1)]
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def map_symbols(indices: np.ndarray, name: str) -> np.ndarray:
    return constellation_points(name)[np.asarray(indices)]


def demap_symbols(symbols: np.ndarray, name: str) -> np.ndarray:
    """Nearest-point hard decision, returning constellation indices."""
    pts = constellation_points(name)
    symbols = np.asarray(symbols)
    dist = np.abs(symbols[..., None] - pts) ** 2
    return np.argmin(dist, axis=-1)


def draw_data_indices(config: OfdmConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniform constellation indices, shape (N_b - 1, N_c)."""
    order = len(constellation_points(config.constellation))
    return rng.integers(0, order, size=(config.blocks_per_frame - 1, config.n_subcarriers))


def idft(symbols: np.ndarray) -> np.ndarray:
    return np.fft.ifft(symbols, axis=-1, norm="ortho")


def dft(samples: np.ndarray) -> np.ndarray:
    return np.fft.fft(samples, axis=-1, norm="ortho")


def add_cp(body: np.ndarray, cp_length: int) -> np.ndarray:
    if cp_length == 0:
        return body.copy()
    return np.concatenate([body[..., -cp_length:], body], axis=-1)


@dataclass(frozen=True)
class TimeDomainBlock:
    samples: np.ndarray  # length N_s, CP first
    role: BlockRole
    frequency_domain_symbols: np.ndarray  # length N_c

    @property
    def body(self) -> np.ndarray:
        """Samples after the cyclic prefix."""
        return self.samples[len(self.samples) - len(self.frequency_domain_symbols):]


@dataclass(frozen=True)
class Frame:
    blocks: tuple[TimeDomainBlock, ...]
    config: OfdmConfig
    data_indices: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.blocks[0].role is not BlockRole.TRAINING:
            raise ConfigError("block 0 must be the training block")
        if any(b.role is not BlockRole.DATA for b in self.blocks[1:]):
            raise ConfigError("blocks after the first must be data blocks")

    @property
    def flat_samples(self) -> np.ndarray:
        return np.concatenate([b.samples for b in self.blocks])

    @property
    def training_symbols(self) -> np.ndarray:
        return self.blocks[0].frequency_domain_symbols

    @property
    def data_symbols(self) -> np.ndarray:
        return np.stack([b.frequency_domain_symbols for b in self.blocks[1:]])


def training_symbols(config: OfdmConfig, seed: int) -> np.ndarray:
    """Frequency-domain training sequence: scaled QPSK on even subcarriers, zeros elsewhere.

    The sqrt(2) scale compensates for the half-empty grid so the block has the
    same mean power as a data block.
    """
    n_c = config.n_subcarriers
    rng = np.random.default_rng(seed)
    qpsk = constellation_points("QPSK")[rng.integers(0, 4, size=n_c // 2)]
    x = np.zeros(n_c, dtype=complex)
    x[0::2] = np.sqrt(2.0) * qpsk
    return x


def build_training_block(config: OfdmConfig, seed: int) -> TimeDomainBlock:
    x = training_symbols(config, seed)
    body = idft(x)
    # even-only loading makes the halves equal up to rounding; enforce it bit-exactly
    half = config.n_subcarriers // 2
    body[half:] = body[:half]
    return TimeDomainBlock(add_cp(body, config.cp_length), BlockRole.TRAINING, x)


def build_data_block(symbols: np.ndarray, config: OfdmConfig) -> TimeDomainBlock:
    symbols = np.asarray(symbols, dtype=complex)
    if symbols.shape != (config.n_subcarriers,):
        raise ConfigError(
            f"data block needs {config.n_subcarriers} symbols, got shape {symbols.shape}"
        )
    return TimeDomainBlock(add_cp(idft(symbols), config.cp_length), BlockRole.DATA, symbols)


def build_frame(
    config: OfdmConfig,
    data_symbols: np.ndarray,
    seed: int,
    data_indices: np.ndarray | None = None,
) -> Frame:
    """Training block followed by one data block per row of ``data_symbols``."""
    data_symbols = np.asarray(data_symbols, dtype=complex)
    if data_symbols.ndim != 2 or data_symbols.shape[0] != config.blocks_per_frame - 1:
        raise ConfigError(
            f"expected {config.blocks_per_frame - 1} data blocks, got {data_symbols.shape[0] if data_symbols.ndim else 0}"
        )
    blocks = [build_training_block(config, seed)]
    blocks += [build_data_block(row, config) for row in data_symbols]
    return Frame(tuple(blocks), config, data_indices)


def random_frame(config: OfdmConfig, rng: np.random.Generator, training_seed: int = 0) -> Frame:
    idx = draw_data_indices(config, rng)
    return build_frame(config, map_symbols(idx, config.constellation), training_seed, idx)
