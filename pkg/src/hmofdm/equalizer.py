"""Per-branch CFO compensation, channel estimation and maximum-ratio combining."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hmofdm.config import OfdmConfig
from hmofdm.tx import demap_symbols, dft

CHANNEL_ESTIMATORS = ("ls_interp", "tap_projection")
BRANCH_SELECTION = ("pruned", "all")


class DetectionError(RuntimeError):
    """Raised when no branch is available for combining."""


def compensate_branch(branch: np.ndarray, cfo, config: OfdmConfig) -> np.ndarray:
    """Remove a single CFO from CP-stripped blocks.

    ``branch`` has shape ``(..., N_b, N_c)``; ``cfo`` (Hz) is a scalar or has
    the leading shape of ``branch``. Block m, sample n is derotated by
    ``exp(-j 2 pi cfo (m N_s + n) T_s)``.
    """
    branch = np.asarray(branch)
    n_b, n_c = branch.shape[-2:]
    t = (config.block_length * np.arange(n_b)[:, None] + np.arange(n_c)) * config.sample_interval
    cfo = np.asarray(cfo, dtype=float)[..., None, None]
    return branch * np.exp(-2j * np.pi * cfo * t)


@dataclass(frozen=True)
class BranchChannelEstimate:
    """Frequency responses of a stack of branches, shape (Q, N_c)."""

    gains: np.ndarray

    @property
    def energy(self) -> np.ndarray:
        return np.sum(np.abs(self.gains) ** 2, axis=-1)

    def branch(self, i: int) -> np.ndarray:
        return self.gains[i]


def _interp_unloaded(h: np.ndarray, loaded: np.ndarray) -> np.ndarray:
    """Linear interpolation across unloaded subcarriers; nearest neighbour beyond the edges."""
    k_all = np.arange(h.shape[-1])
    k_on = k_all[loaded]
    k_off = k_all[~loaded]
    if k_off.size == 0:
        return h
    right = np.clip(np.searchsorted(k_on, k_off), 1, k_on.size - 1) if k_on.size > 1 else None
    out = h.copy()
    if right is None:
        out[..., k_off] = h[..., k_on[:1]]
        return out
    left = right - 1
    kl, kr = k_on[left], k_on[right]
    w = np.clip((k_off - kl) / (kr - kl), 0.0, 1.0)
    out[..., k_off] = (1 - w) * h[..., kl] + w * h[..., kr]
    return out


def estimate_branch_channel(
    training: np.ndarray,
    training_symbols: np.ndarray,
    config: OfdmConfig,
    method: str = "ls_interp",
) -> BranchChannelEstimate:
    """Frequency response per branch from the (compensated) CP-stripped training block.

    ``ls_interp``: least squares on loaded subcarriers, linear interpolation in
    between. ``tap_projection``: least squares on loaded subcarriers, then the
    impulse response is truncated to ``N_cp`` taps before returning to the
    frequency domain (needs evenly spaced pilots with spacing 2).
    """
    training = np.atleast_2d(training)
    x = np.asarray(training_symbols)
    loaded = np.abs(x) > 0
    r = dft(training)
    h = np.zeros_like(r)
    h[:, loaded] = r[:, loaded] / x[loaded]
    if method == "ls_interp":
        h = _interp_unloaded(h, loaded)
    elif method == "tap_projection":
        n_c = config.n_subcarriers
        if not (np.all(loaded[0::2]) and not np.any(loaded[1::2])):
            raise ValueError("tap_projection expects pilots on exactly the even subcarriers")
        taps = np.fft.ifft(h[:, 0::2], axis=-1)
        keep = max(1, min(config.cp_length, n_c // 2))
        taps[:, keep:] = 0
        full = np.zeros((h.shape[0], n_c), dtype=complex)
        full[:, : n_c // 2] = taps
        h = np.fft.fft(full, axis=-1)
    else:
        raise ValueError(f"unknown channel estimator {method!r}")
    return BranchChannelEstimate(h)


def select_branches(training: np.ndarray, mode: str = "pruned", tau: float = 0.5) -> np.ndarray:
    """Boolean mask of branches entering MRC.

    ``pruned`` keeps branches whose training energy exceeds ``tau`` times the
    mean branch energy; ``all`` keeps every branch.
    """
    energy = np.sum(np.abs(np.atleast_2d(training)) ** 2, axis=-1)
    if mode == "all":
        return np.ones(energy.shape, dtype=bool)
    if mode == "pruned":
        return energy > tau * energy.mean()
    raise ValueError(f"unknown branch selection {mode!r}")


@dataclass(frozen=True)
class DetectedFrame:
    indices: np.ndarray  # (N_b - 1, N_c)
    soft_symbols: np.ndarray  # (N_b - 1, N_c)
    symbol_errors: np.ndarray | None = None  # (N_b - 1,)

    @property
    def total_errors(self) -> int:
        if self.symbol_errors is None:
            raise ValueError("no reference symbols were supplied")
        return int(self.symbol_errors.sum())

    @property
    def n_symbols(self) -> int:
        return self.indices.size


def mrc_combine(data: np.ndarray, est: BranchChannelEstimate, active: np.ndarray | None = None) -> np.ndarray:
    """Combined frequency-domain symbols from branch data blocks ``(Q, N_d, N_c)``."""
    data = np.asarray(data)
    if active is None:
        active = np.ones(data.shape[0], dtype=bool)
    active = np.asarray(active, dtype=bool)
    if not active.any():
        raise DetectionError("empty active branch set")
    h = est.gains[active]  # (A, N_c)
    r = dft(data[active])  # (A, N_d, N_c)
    num = np.einsum("ak,adk->dk", h.conj(), r)
    den = np.sum(np.abs(h) ** 2, axis=0)
    delta = 1e-12 * float(np.mean(np.sum(np.abs(h) ** 2, axis=-1)))
    if delta == 0.0:
        delta = np.finfo(float).tiny
    return num / (den + delta)


def mrc_detect(
    data: np.ndarray,
    est: BranchChannelEstimate,
    config: OfdmConfig,
    active: np.ndarray | None = None,
    truth_indices: np.ndarray | None = None,
) -> DetectedFrame:
    soft = mrc_combine(data, est, active)
    idx = demap_symbols(soft, config.constellation)
    errors = None
    if truth_indices is not None:
        errors = np.sum(idx != np.asarray(truth_indices), axis=-1)
    return DetectedFrame(idx, soft, errors)
