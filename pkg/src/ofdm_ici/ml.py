"""Maximum-likelihood CFO estimation from a repeated OFDM symbol (Moose).

The symbol is sent twice back to back. Both N-sample halves are demodulated
and the common phase rotation between them, ``exp(j 2 pi eps)``, gives the
offset. Acquisition range is |eps| < 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import remove_cfo
from .modem import OfdmConfig, TimeSamples, ofdm_demodulate, ofdm_modulate

__all__ = [
    "THROUGHPUT_FACTOR",
    "DegenerateObservationError",
    "OffsetEstimate",
    "RepeatedObservation",
    "ml_frame_build",
    "ml_observe",
    "ml_estimate",
    "correct_offset",
    "ml_correct",
]

THROUGHPUT_FACTOR = 0.5


class DegenerateObservationError(ValueError):
    """The observation carries no energy to estimate an offset from."""


@dataclass(frozen=True)
class OffsetEstimate:
    epsilon_hat: float | np.ndarray
    method: str  # "ML" or "EKF"


@dataclass(frozen=True)
class RepeatedObservation:
    """Demodulated halves of a repeated symbol.

    The estimator sums over the first ``2 * k_range + 1`` active bins, or all
    ``active_carriers`` when ``k_range`` is None. Null bins are never used.
    """

    y1: np.ndarray
    y2: np.ndarray
    active_carriers: int
    k_range: int | None = None

    def __post_init__(self):
        if self.k_range is not None and not 1 <= 2 * self.k_range + 1 <= self.active_carriers:
            raise ValueError(
                f"2*k_range+1 must lie in [1, {self.active_carriers}], got k_range={self.k_range}"
            )

    @property
    def bins(self) -> slice:
        if self.k_range is None:
            return slice(0, self.active_carriers)
        return slice(0, 2 * self.k_range + 1)


def ml_frame_build(symbols, config: OfdmConfig) -> TimeSamples:
    """IFFT the symbol once and send it twice: 2N samples starting at index 0."""
    x = ofdm_modulate(symbols, config).values
    return TimeSamples(np.concatenate([x, x], axis=-1), 0)


def ml_observe(received: TimeSamples, config: OfdmConfig,
               k_range: int | None = None) -> RepeatedObservation:
    """Split a received 2N block into halves and demodulate each."""
    N = config.fft_size
    v = received.values
    if v.shape[-1] != 2 * N:
        raise ValueError(f"expected a 2N={2 * N} sample block, got {v.shape[-1]}")
    return RepeatedObservation(
        ofdm_demodulate(v[..., :N], config),
        ofdm_demodulate(v[..., N:], config),
        config.active_carriers,
        k_range,
    )


def ml_estimate(obs: RepeatedObservation) -> OffsetEstimate:
    """eps_hat = atan2(sum Im Y2 Y1*, sum Re Y2 Y1*) / (2 pi), per leading row."""
    b = obs.bins
    y1 = obs.y1[..., b]
    y2 = obs.y2[..., b]
    if not np.all(np.any(y1 != 0, axis=-1)):
        raise DegenerateObservationError("first received half is identically zero")
    corr = np.sum(y2 * np.conj(y1), axis=-1)
    eps = np.arctan2(corr.imag, corr.real) / (2 * np.pi)
    return OffsetEstimate(float(eps) if np.ndim(eps) == 0 else eps, "ML")


def correct_offset(samples: TimeSamples, est: OffsetEstimate, config: OfdmConfig) -> np.ndarray:
    """De-rotate by the estimated offset (absolute sample indices), then FFT each N block.

    ``samples`` may span several consecutive N-sample blocks; the result has
    one row of N bins per block along a new second-to-last axis.
    """
    N = config.fft_size
    fixed = remove_cfo(samples, est.epsilon_hat, config).values
    if fixed.shape[-1] == N:
        return ofdm_demodulate(fixed, config)
    blocks = fixed.reshape(fixed.shape[:-1] + (-1, N))
    return ofdm_demodulate(blocks, config)


def ml_correct(samples: TimeSamples, est: OffsetEstimate, config: OfdmConfig) -> np.ndarray:
    return correct_offset(samples, est, config)
