"""Time-varying multipath Jakes channel seen by a uniform linear array.

Each tap is a sum of ``N_p`` plane waves with random phase and angle of
arrival. A wave from angle ``theta`` picks up a Doppler rotation
``f_d cos(theta)`` and a per-antenna steering phase; a common oscillator
offset ``ofo`` rotates the whole received stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from hmofdm.config import ChannelProfile, ConfigError, OfdmConfig
from hmofdm.tx import Frame


def steering_vector(theta, config: OfdmConfig) -> np.ndarray:
    """ULA response ``exp(j 2 pi a (d/lambda) cos theta)``, antenna 0 as reference.

    ``theta`` in radians; a scalar gives shape ``(N_r,)``, an array of K angles
    gives ``(N_r, K)``.
    """
    theta = np.asarray(theta, dtype=float)
    a = np.arange(config.n_rx_antennas).reshape((-1,) + (1,) * theta.ndim)
    return np.exp(2j * np.pi * config.antenna_spacing_over_lambda * a * np.cos(theta))


@dataclass(frozen=True)
class ChannelRealization:
    """One frame's worth of channel randomness; fixed for the whole frame."""

    delays: np.ndarray  # (L,) int samples
    tap_scales: np.ndarray  # (L,) E_l
    path_gains: np.ndarray  # (L, N_p) complex alpha
    path_aoas: np.ndarray  # (L, N_p) radians in [0, pi]
    max_doppler: float  # Hz
    ofo: float  # Hz

    @property
    def n_taps(self) -> int:
        return len(self.delays)

    @property
    def paths_per_tap(self) -> int:
        return self.path_gains.shape[1]

    @property
    def path_dopplers(self) -> np.ndarray:
        """Per-path Doppler offsets f_d cos(theta)."""
        return self.max_doppler * np.cos(self.path_aoas)

    @property
    def path_cfos(self) -> np.ndarray:
        """Total per-path frequency offsets: Doppler plus oscillator."""
        return self.path_dopplers + self.ofo

    def with_offsets(self, max_doppler: float | None = None, ofo: float | None = None):
        return replace(
            self,
            max_doppler=self.max_doppler if max_doppler is None else max_doppler,
            ofo=self.ofo if ofo is None else ofo,
        )


def draw_aoas(rng: np.random.Generator, shape, distribution: str) -> np.ndarray:
    if distribution == "uniform_theta":
        return rng.uniform(0.0, np.pi, size=shape)
    if distribution == "uniform_cos":
        return np.arccos(rng.uniform(-1.0, 1.0, size=shape))
    raise ConfigError(f"unknown AoA distribution {distribution!r}")


def draw_channel(
    profile: ChannelProfile,
    max_doppler: float,
    ofo: float,
    rng_seed,
    config: OfdmConfig | None = None,
) -> ChannelRealization:
    """Draw path phases and angles; ``rng_seed`` is anything ``default_rng`` accepts."""
    if config is not None:
        profile.validate_for(config)
    rng = np.random.default_rng(rng_seed)
    shape = (profile.n_taps, profile.paths_per_tap)
    psi = rng.uniform(0.0, 2 * np.pi, size=shape)
    aoas = draw_aoas(rng, shape, profile.aoa_distribution)
    return ChannelRealization(
        delays=np.asarray(profile.delays, dtype=int),
        tap_scales=profile.tap_scales,
        path_gains=np.exp(1j * psi) / math.sqrt(profile.paths_per_tap),
        path_aoas=aoas,
        max_doppler=float(max_doppler),
        ofo=float(ofo),
    )


def tap_gain(chan: ChannelRealization, config: OfdmConfig, antenna: int, tap: int, n) -> complex:
    """g_{a,l}(n) for 0-based antenna/tap and absolute sample index ``n`` (scalar or array)."""
    n = np.asarray(n, dtype=float)
    theta = chan.path_aoas[tap]
    phase = (
        2 * np.pi * chan.max_doppler * np.multiply.outer(n, np.cos(theta)) * config.sample_interval
        + 2 * np.pi * antenna * config.antenna_spacing_over_lambda * np.cos(theta)
    )
    return chan.tap_scales[tap] * np.sum(chan.path_gains[tap] * np.exp(1j * phase), axis=-1)


def tap_gains(chan: ChannelRealization, config: OfdmConfig, n: np.ndarray) -> np.ndarray:
    """All tap gains at once, shape (L, N_r, len(n))."""
    n = np.asarray(n, dtype=float)
    out = np.empty((chan.n_taps, config.n_rx_antennas, n.size), dtype=complex)
    for l in range(chan.n_taps):
        steer = steering_vector(chan.path_aoas[l], config)  # (N_r, N_p)
        rot = np.exp(
            2j * np.pi * chan.max_doppler * config.sample_interval
            * np.multiply.outer(np.cos(chan.path_aoas[l]), n)
        )  # (N_p, K)
        out[l] = chan.tap_scales[l] * (steer @ (chan.path_gains[l][:, None] * rot))
    return out


@dataclass(frozen=True)
class RxFrame:
    samples: np.ndarray  # (N_r, N_b * N_s)
    noise_variance: float
    config: OfdmConfig

    def __post_init__(self) -> None:
        expected = (self.config.n_rx_antennas, self.config.frame_length)
        if self.samples.shape != expected:
            raise ConfigError(f"rx samples shape {self.samples.shape} != {expected}")

    def block(self, m: int) -> np.ndarray:
        """CP-stripped received block m, shape (N_r, N_c)."""
        cfg = self.config
        start = m * cfg.block_length + cfg.cp_length
        return self.samples[:, start : start + cfg.n_subcarriers]

    def blocks(self) -> np.ndarray:
        """All CP-stripped blocks, shape (N_r, N_b, N_c)."""
        cfg = self.config
        s = self.samples.reshape(cfg.n_rx_antennas, cfg.blocks_per_frame, cfg.block_length)
        return s[:, :, cfg.cp_length :]


def propagate(samples: np.ndarray, chan: ChannelRealization, config: OfdmConfig) -> np.ndarray:
    """Noise-free array output for a flat transmitted sample stream."""
    samples = np.asarray(samples, dtype=complex)
    k = samples.size
    if chan.delays.max(initial=0) > config.cp_length - 1 and config.cp_length > 0:
        raise ConfigError("channel delay spread exceeds the cyclic prefix")
    n = np.arange(k)
    gains = tap_gains(chan, config, n)
    y = np.zeros((config.n_rx_antennas, k), dtype=complex)
    for l, d in enumerate(chan.delays):
        delayed = np.zeros(k, dtype=complex)
        delayed[d:] = samples[: k - d]
        y += gains[l] * delayed
    return y * np.exp(2j * np.pi * chan.ofo * config.sample_interval * n)


def complex_noise(rng_seed, shape) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian samples."""
    rng = np.random.default_rng(rng_seed)
    w = rng.standard_normal((2,) + tuple(shape))
    return (w[0] + 1j * w[1]) / math.sqrt(2.0)


def apply_channel(frame: Frame, chan: ChannelRealization, snr_db: float, rng_seed) -> RxFrame:
    """Pass ``frame`` through the channel and add AWGN at ``snr_db`` per antenna.

    The noise variance is the mean received signal power per antenna divided
    by the linear SNR; ``snr_db=inf`` disables noise. Identical seeds give
    identical noise shapes at every SNR.
    """
    cfg = frame.config
    y = propagate(frame.flat_samples, chan, cfg)
    if math.isinf(snr_db) and snr_db > 0:
        return RxFrame(y, 0.0, cfg)
    sig_power = float(np.mean(np.abs(y) ** 2))
    noise_var = sig_power / 10 ** (snr_db / 10)
    y = y + math.sqrt(noise_var) * complex_noise(rng_seed, y.shape)
    return RxFrame(y, noise_var, cfg)
