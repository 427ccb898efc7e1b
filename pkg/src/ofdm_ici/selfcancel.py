"""ICI self-cancellation: (X, -X) on subcarrier pairs, differenced at the receiver.

Pairs are (2i, 2i+1) inside the active band. The decoder returns
``(Y(2i) - Y(2i+1)) / 2``; the halving undoes the zero-offset signal gain
S''(0) = 2 so decisions use the plain constellation. The noise in each
decoded value is ``(n_k - n_{k+1}) / 2`` with variance ``sigma2_freq / 2``.
"""

from __future__ import annotations

import numpy as np

from .modem import OfdmConfig, SizingError

__all__ = ["THROUGHPUT_FACTOR", "sc_encode", "sc_decode"]

THROUGHPUT_FACTOR = 0.5


def _check_even(config: OfdmConfig):
    if config.active_carriers % 2:
        raise ValueError(
            f"self-cancellation needs an even active_carriers, got {config.active_carriers}"
        )


def sc_encode(payload, config: OfdmConfig) -> np.ndarray:
    """Expand ``active_carriers / 2`` payload points per row into an N-bin frame."""
    _check_even(config)
    payload = np.asarray(payload, dtype=np.complex128)
    half = config.active_carriers // 2
    if payload.shape[-1] != half:
        raise SizingError(f"payload has {payload.shape[-1]} points, expected {half}")
    out = np.zeros(payload.shape[:-1] + (config.fft_size,), dtype=np.complex128)
    out[..., 0:2 * half:2] = payload
    out[..., 1:2 * half:2] = -payload
    return out


def sc_decode(received, config: OfdmConfig) -> np.ndarray:
    received = np.asarray(received)
    _check_even(config)
    A = config.active_carriers
    return (received[..., 0:A:2] - received[..., 1:A:2]) / 2.0
