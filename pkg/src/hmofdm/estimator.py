"""Joint maximum-Doppler / oscillator-offset estimation from beamformed training.

Every branch i sees, to first order, a single CFO ``f_d cos(theta_i) + eps``.
The half-block correlation of the training block in branch i therefore has
phase ``pi (f_d cos(theta_i) + eps) T_b``. Squaring the correlations removes
the sign ambiguity of the real branch amplitudes, and the Doppler estimate is
the ``f`` that best phase-aligns ``b_i**2 exp(-j 2 pi f cos(theta_i) T_b)``
across branches; the aligned sum's phase then gives the oscillator offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hmofdm.config import OfdmConfig

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class EstimationError(RuntimeError):
    """Raised when the correlation vector carries no usable phase information."""


@dataclass(frozen=True)
class GridSpec:
    """Doppler search grid in normalized units (f * T_b)."""

    f_max_norm: float = 0.3
    coarse_step_norm: float = 1e-3
    tol_norm: float = 1e-6

    def __post_init__(self) -> None:
        if not 0 < self.f_max_norm <= 0.5:
            raise ValueError("f_max_norm must lie in (0, 0.5]")
        if self.coarse_step_norm <= 0 or self.tol_norm <= 0:
            raise ValueError("grid step and tolerance must be positive")

    def coarse_grid(self) -> np.ndarray:
        n = int(math.floor(self.f_max_norm / self.coarse_step_norm + 1e-9))
        if n < 0:
            raise ValueError("empty search grid")
        return self.coarse_step_norm * np.arange(n + 1)


@dataclass(frozen=True)
class CorrelationVector:
    b: np.ndarray  # (Q,) complex
    angles_deg: np.ndarray  # (Q,)

    @property
    def cosines(self) -> np.ndarray:
        return np.cos(np.deg2rad(self.angles_deg))


@dataclass(frozen=True)
class CfoEstimate:
    fd_hat: float  # Hz
    ofo_hat: float  # Hz
    objective_value: float
    block_duration: float
    grid: GridSpec | None = None

    @property
    def fd_hat_norm(self) -> float:
        return self.fd_hat * self.block_duration

    @property
    def ofo_hat_norm(self) -> float:
        return self.ofo_hat * self.block_duration

    def branch_cfos(self, cosines: np.ndarray) -> np.ndarray:
        return self.fd_hat * np.asarray(cosines) + self.ofo_hat


def half_block_correlation(r0: np.ndarray) -> np.ndarray:
    """Normalized correlation between the two halves of each training branch.

    Accepts one branch ``(N_c,)`` or a stack ``(Q, N_c)``. A branch with zero
    energy yields 0.
    """
    r0 = np.asarray(r0)
    n_c = r0.shape[-1]
    half = n_c // 2
    acc = np.sum(r0[..., :half].conj() * r0[..., half : 2 * half], axis=-1)
    norm = np.linalg.norm(r0, axis=-1)
    safe = np.where(norm > 0, norm, 1.0)
    return np.where(norm > 0, math.sqrt(n_c) * acc / safe, 0.0)


def correlation_vector(training: np.ndarray, angles_deg: np.ndarray) -> CorrelationVector:
    return CorrelationVector(half_block_correlation(training), np.asarray(angles_deg, dtype=float))


def _aligned_sum(b2: np.ndarray, cosines: np.ndarray, f_norm) -> np.ndarray:
    """sum_i b_i^2 exp(-j 2 pi f cos(theta_i) T_b) for scalar or array ``f_norm``."""
    f_norm = np.asarray(f_norm, dtype=float)
    phase = np.exp(-2j * np.pi * np.multiply.outer(f_norm, cosines))
    return phase @ b2


def fd_objective(corr: CorrelationVector, f_tilde: float, config: OfdmConfig) -> float:
    """Magnitude of the Doppler-aligned squared-correlation sum at ``f_tilde`` Hz.

    Also accepts an array of candidate frequencies.
    """
    f_norm = np.asarray(f_tilde, dtype=float) * config.block_duration
    val = np.abs(_aligned_sum(corr.b**2, corr.cosines, f_norm))
    return float(val) if val.ndim == 0 else val


def _golden_max(func, lo: float, hi: float, tol: float) -> tuple[float, float]:
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = func(c), func(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = func(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = func(d)
    x = 0.5 * (lo + hi)
    return x, func(x)


def estimate_fd(
    corr: CorrelationVector, config: OfdmConfig, search: GridSpec = GridSpec()
) -> tuple[float, float]:
    """Maximum Doppler (Hz) maximizing the aligned sum, and the objective there.

    Coarse grid over ``[0, f_max]`` then golden-section refinement within one
    grid step of the best point. Ties on the grid resolve to the smallest
    frequency, and the refinement is only kept if it strictly improves.
    """
    grid = search.coarse_grid()
    if grid.size == 0:
        raise ValueError("empty search grid")
    b2 = corr.b**2
    cos = corr.cosines
    vals = np.abs(_aligned_sum(b2, cos, grid))
    k = int(np.argmax(vals))
    best_f, best_v = float(grid[k]), float(vals[k])

    lo = max(0.0, best_f - search.coarse_step_norm)
    hi = min(search.f_max_norm, best_f + search.coarse_step_norm)
    if hi > lo:
        f_ref, v_ref = _golden_max(
            lambda f: float(abs(_aligned_sum(b2, cos, f))), lo, hi, search.tol_norm
        )
        if v_ref > best_v:
            best_f, best_v = f_ref, v_ref
    return best_f / config.block_duration, best_v


def estimate_ofo(corr: CorrelationVector, fd_hat: float, config: OfdmConfig) -> float:
    """Oscillator offset (Hz) from the phase of the aligned sum at ``fd_hat``.

    The result is the principal value in ``(-1/(2 T_b), 1/(2 T_b)]``.
    """
    z = complex(_aligned_sum(corr.b**2, corr.cosines, fd_hat * config.block_duration))
    if abs(z) == 0.0:
        raise EstimationError("aligned correlation sum vanished; OFO unobservable")
    eps_norm = math.atan2(z.imag, z.real) / (2 * np.pi)
    if eps_norm <= -0.5:
        eps_norm += 1.0
    return eps_norm / config.block_duration


def joint_estimate(
    training: np.ndarray,
    angles_deg: np.ndarray,
    config: OfdmConfig,
    search: GridSpec = GridSpec(),
) -> CfoEstimate:
    """Full estimator from CP-stripped training branches of shape (Q, N_c)."""
    corr = correlation_vector(training, angles_deg)
    if not np.all(np.isfinite(corr.b)):
        raise EstimationError("non-finite correlation entries")
    fd_hat, obj = estimate_fd(corr, config, search)
    ofo_hat = estimate_ofo(corr, fd_hat, config)
    return CfoEstimate(fd_hat, ofo_hat, obj, config.block_duration, search)
