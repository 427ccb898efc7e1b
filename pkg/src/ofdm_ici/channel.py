"""Carrier frequency offset and AWGN applied to time-domain samples.

Noise convention: with unit-energy constellations and the unscaled forward
FFT, a complex time-domain noise variance ``sigma2_time`` becomes
``sigma2_freq = N * sigma2_time`` per frequency bin. ``ebn0_to_sigma`` sets
``sigma2_freq = 1 / (log2(M) * Eb/N0)`` so the per-bin decision SNR is the
textbook Es/N0. Eb counts information bits before any repetition.

Random numbers come from numpy's PCG64 bit generator, seeded with a single
64-bit integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modem import ModulationScheme, OfdmConfig, TimeSamples

__all__ = [
    "RNG_NAME",
    "NoiseSpec",
    "make_rng",
    "ebn0_to_sigma",
    "apply_cfo",
    "remove_cfo",
    "add_awgn",
]

RNG_NAME = "numpy.random.PCG64"


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & (2**64 - 1)))


@dataclass(frozen=True)
class NoiseSpec:
    ebn0_db: float
    sigma2_freq: float
    fft_size: int

    @property
    def sigma2_time(self) -> float:
        return self.sigma2_freq / self.fft_size


def ebn0_to_sigma(ebn0_db: float, scheme: ModulationScheme, fft_size: int) -> NoiseSpec:
    """Noise variances for a given Eb/N0 in dB. ``+inf`` dB gives a noiseless channel."""
    if math.isinf(ebn0_db) and ebn0_db > 0:
        return NoiseSpec(ebn0_db, 0.0, fft_size)
    sigma2 = 1.0 / (scheme.bits_per_symbol * 10.0 ** (ebn0_db / 10.0))
    return NoiseSpec(ebn0_db, sigma2, fft_size)


def _ramp(samples: TimeSamples, epsilon: float, fft_size: int) -> np.ndarray:
    n = samples.start_index + np.arange(len(samples))
    return np.exp(2j * np.pi * n * epsilon / fft_size)


def apply_cfo(samples: TimeSamples, epsilon: float, config: OfdmConfig) -> TimeSamples:
    """Rotate sample n by exp(j 2 pi (start_index + n) epsilon / N)."""
    if epsilon == 0:
        return samples
    rotated = samples.values * _ramp(samples, epsilon, config.fft_size)
    return TimeSamples(rotated, samples.start_index)


def remove_cfo(samples: TimeSamples, epsilon_hat: float | np.ndarray,
               config: OfdmConfig) -> TimeSamples:
    """Inverse of ``apply_cfo``; ``epsilon_hat`` may carry one value per leading row."""
    eps = np.asarray(epsilon_hat, dtype=float)
    n = samples.start_index + np.arange(len(samples))
    derotate = np.exp(-2j * np.pi * n * eps[..., None] / config.fft_size)
    return TimeSamples(samples.values * derotate, samples.start_index)


def add_awgn(samples: TimeSamples, noise: NoiseSpec, rng: np.random.Generator) -> TimeSamples:
    """Add circularly-symmetric Gaussian noise of variance ``noise.sigma2_time``."""
    if noise.sigma2_freq == 0:
        return samples
    shape = samples.values.shape
    std = math.sqrt(noise.sigma2_time / 2.0)
    w = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return TimeSamples(samples.values + std * w, samples.start_index)
