"""Constellation mapping and the IFFT/FFT modem of the idealized OFDM link.

Transform scaling: the inverse transform carries the 1/N factor and the
forward transform is unscaled, so ``ofdm_demodulate(ofdm_modulate(X)) == X``
and a time-domain noise sample of variance ``s2`` lands in every frequency
bin with variance ``N * s2``.

Active carriers occupy bins ``0 .. active_carriers - 1``; the rest are null.
There is no cyclic prefix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "SizingError",
    "ModulationScheme",
    "OfdmConfig",
    "TimeSamples",
    "parse_modulation",
    "map_bits",
    "demap_symbols",
    "ofdm_modulate",
    "ofdm_demodulate",
    "load_carriers",
]

# Points are compared against the table in chunks to bound memory.
_DEMAP_CHUNK = 1 << 15


class SizingError(ValueError):
    """Raised when an array length does not match what the operation needs."""


def _gray(i: np.ndarray | int):
    return i ^ (i >> 1)


@dataclass(frozen=True)
class ModulationScheme:
    """Gray-labelled M-PSK or square M-QAM with unit average symbol energy.

    PSK points sit at ``exp(j 2 pi i / M)`` (no phase offset, so BPSK is
    {+1, -1}); the point at angle index ``i`` carries label ``gray(i)``.
    QAM splits the label into an in-phase half (most significant bits) and a
    quadrature half, each Gray-coded onto a PAM axis where label 0 is the
    most positive level.
    """

    kind: str
    order: int

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind == "PSK":
            if self.order not in (2, 4, 16, 64):
                raise ValueError(f"PSK order must be one of 2, 4, 16, 64, got {self.order}")
        elif kind == "QAM":
            if self.order not in (4, 16, 64):
                raise ValueError(f"QAM order must be one of 4, 16, 64, got {self.order}")
        else:
            raise ValueError(f"unknown modulation kind {self.kind!r}")

    @property
    def bits_per_symbol(self) -> int:
        return int(self.order).bit_length() - 1

    @property
    def name(self) -> str:
        if self.kind == "PSK" and self.order == 2:
            return "bpsk"
        return f"{self.kind.lower()}{self.order}"

    @cached_property
    def points(self) -> np.ndarray:
        """Constellation table indexed by integer bit label."""
        M = self.order
        table = np.empty(M, dtype=np.complex128)
        if self.kind == "PSK":
            i = np.arange(M)
            table[_gray(i)] = np.exp(2j * np.pi * i / M)
            # snap the 1e-16 trig residue on axis points to exact zero
            re, im = table.real.copy(), table.imag.copy()
            re[np.abs(re) < 1e-15] = 0.0
            im[np.abs(im) < 1e-15] = 0.0
            return re + 1j * im
        L = int(round(np.sqrt(M)))
        half = self.bits_per_symbol // 2
        levels = np.empty(L)
        idx = np.arange(L)
        levels[_gray(idx)] = (L - 1) - 2 * idx
        labels = np.arange(M)
        i_lab = labels >> half
        q_lab = labels & (L - 1)
        scale = np.sqrt(2.0 * (M - 1) / 3.0)
        table[:] = (levels[i_lab] + 1j * levels[q_lab]) / scale
        return table


_MOD_ALIASES = {
    "bpsk": ("PSK", 2),
    "qpsk": ("PSK", 4),
}


def parse_modulation(name: str) -> ModulationScheme:
    """Build a scheme from names like ``bpsk``, ``psk16`` or ``qam64``."""
    key = name.strip().lower().replace("-", "")
    if key in _MOD_ALIASES:
        return ModulationScheme(*_MOD_ALIASES[key])
    for kind in ("psk", "qam"):
        if key.startswith(kind) and key[len(kind):].isdigit():
            return ModulationScheme(kind, int(key[len(kind):]))
    raise ValueError(f"unrecognised modulation {name!r}")


@dataclass(frozen=True)
class OfdmConfig:
    fft_size: int
    active_carriers: int
    modulation: ModulationScheme

    def __post_init__(self):
        N = self.fft_size
        if N < 2 or N & (N - 1):
            raise ValueError(f"fft_size must be a power of two >= 2, got {N}")
        if not 1 <= self.active_carriers <= N:
            raise ValueError(
                f"active_carriers must lie in [1, {N}], got {self.active_carriers}"
            )

    @property
    def bits_per_ofdm_symbol(self) -> int:
        return self.active_carriers * self.modulation.bits_per_symbol


@dataclass(frozen=True)
class TimeSamples:
    """Time-domain samples along the last axis of ``values``.

    ``start_index`` is the absolute sample index of ``values[..., 0]`` within
    the transmission, so a frequency offset keeps its phase continuous across
    consecutive blocks.
    """

    values: np.ndarray
    start_index: int = 0

    def __len__(self):
        return self.values.shape[-1]


def map_bits(bits, scheme: ModulationScheme) -> np.ndarray:
    """Map a bit sequence to constellation points, MSB first per symbol.

    Leading axes are preserved: bits of shape ``(..., k * log2(M))`` give
    points of shape ``(..., k)``.
    """
    bits = np.asarray(bits, dtype=np.int64)
    k = scheme.bits_per_symbol
    if bits.shape[-1] % k:
        raise SizingError(
            f"{bits.shape[-1]} bits is not a multiple of {k} bits per {scheme.name} symbol"
        )
    groups = bits.reshape(bits.shape[:-1] + (-1, k))
    weights = 1 << np.arange(k - 1, -1, -1)
    labels = groups @ weights
    return scheme.points[labels]


def demap_symbols(points, scheme: ModulationScheme) -> np.ndarray:
    """Hard-decision demapper, nearest constellation point in Euclidean distance.

    Exact ties resolve to the lowest bit label. Returns an int8 bit array
    with ``log2(M)`` bits per input point, MSB first.
    """
    points = np.asarray(points, dtype=np.complex128)
    table = scheme.points
    flat = points.reshape(-1)
    labels = np.empty(flat.shape, dtype=np.int64)
    for lo in range(0, flat.size, _DEMAP_CHUNK):
        chunk = flat[lo:lo + _DEMAP_CHUNK]
        dist = np.abs(chunk[:, None] - table[None, :]) ** 2
        labels[lo:lo + _DEMAP_CHUNK] = np.argmin(dist, axis=1)
    k = scheme.bits_per_symbol
    shifts = np.arange(k - 1, -1, -1)
    bits = ((labels[:, None] >> shifts) & 1).astype(np.int8)
    if points.ndim == 0:
        return bits[0]
    return bits.reshape(points.shape[:-1] + (-1,))


def _check_length(values: np.ndarray, config: OfdmConfig, what: str):
    if values.shape[-1] != config.fft_size:
        raise SizingError(
            f"{what} has length {values.shape[-1]}, expected fft_size={config.fft_size}"
        )


def ofdm_modulate(symbols, config: OfdmConfig, start_index: int = 0) -> TimeSamples:
    """x(n) = (1/N) sum_m X_m exp(j 2 pi n m / N) along the last axis."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    _check_length(symbols, config, "frequency symbol vector")
    return TimeSamples(np.fft.ifft(symbols, axis=-1), start_index)


def ofdm_demodulate(samples: TimeSamples, config: OfdmConfig) -> np.ndarray:
    """Y(m) = sum_n y(n) exp(-j 2 pi n m / N) along the last axis (no scaling)."""
    values = np.asarray(samples.values if isinstance(samples, TimeSamples) else samples)
    _check_length(values, config, "time sample block")
    return np.fft.fft(values, axis=-1)


def load_carriers(points, config: OfdmConfig) -> np.ndarray:
    """Place ``active_carriers`` points per row into bins 0.., zero-filling the rest."""
    points = np.asarray(points, dtype=np.complex128)
    if points.shape[-1] != config.active_carriers:
        raise SizingError(
            f"got {points.shape[-1]} points per symbol, expected "
            f"active_carriers={config.active_carriers}"
        )
    out = np.zeros(points.shape[:-1] + (config.fft_size,), dtype=np.complex128)
    out[..., :config.active_carriers] = points
    return out
