"""Extended Kalman filter estimation of a constant CFO from a known preamble.

State model: eps(n) = eps(n-1). Observation of preamble sample n' (absolute
index within the frame)::

    y(n) = x(n) exp(j 2 pi n' eps / N) + w(n),   E|w|^2 = sigma2

Each step linearizes around the previous estimate::

    H(n)   = (j 2 pi n' / N) exp(j 2 pi n' eps_prev / N) x(n)
    K(n)   = P(n-1) conj(H(n)) / (|H(n)|^2 P(n-1) + sigma2)
    eps(n) = eps_prev + Re{K(n) [y(n) - x(n) exp(j 2 pi n' eps_prev / N)]}
    P(n)   = (1 - Re{K(n) H(n)}) P(n-1)

``gain="literal"`` drops ``|H(n)|^2`` from the gain denominator. That form
does not scale with the preamble amplitude and is kept only for comparison.

A zero ``sigma2`` makes P collapse to 0 after the first informative sample
and every later gain 0/0, so the filter floors sigma2 at ``SIGMA2_FLOOR``
times the mean preamble power. With the floor the recursion stays the
well-defined weighted least-squares limit of the noiseless filter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ml import OffsetEstimate, correct_offset
from .modem import OfdmConfig, TimeSamples, ofdm_modulate, load_carriers

__all__ = [
    "SIGMA2_FLOOR",
    "PILOT_SEED",
    "EmptyPreambleError",
    "UnobservableError",
    "EkfState",
    "Preamble",
    "pilot_symbols",
    "preamble_samples",
    "linearize",
    "ekf_estimate",
    "ekf_correct",
]

SIGMA2_FLOOR = 1e-12
PILOT_SEED = 0x0FD1C1

GAIN_FORMS = ("standard", "literal")


class EmptyPreambleError(ValueError):
    pass


class UnobservableError(ValueError):
    pass


@dataclass(frozen=True)
class EkfState:
    epsilon_hat: float | np.ndarray
    P: float | np.ndarray
    n: int


@dataclass(frozen=True)
class Preamble:
    """Known training samples ``x``, their received counterpart ``y``, noise variance.

    ``y.values`` may carry leading axes for independent frames sharing ``x``.
    """

    x: TimeSamples
    y: TimeSamples
    sigma2: float
    fft_size: int

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError(f"x has {len(self.x)} samples but y has {len(self.y)}")
        if self.x.start_index != self.y.start_index:
            raise ValueError("x and y must start at the same absolute sample index")
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")


def pilot_symbols(config: OfdmConfig) -> np.ndarray:
    """Fixed pseudo-random unit-energy QPSK pilots on the active carriers.

    Drawn from PCG64 seeded with ``PILOT_SEED``, so transmitter and receiver
    agree bit-exactly.
    """
    rng = np.random.Generator(np.random.PCG64(PILOT_SEED))
    bits = rng.integers(0, 2, size=(2, config.active_carriers))
    pts = ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) / np.sqrt(2.0)
    return load_carriers(pts, config)


def preamble_samples(config: OfdmConfig, length: int | None = None) -> TimeSamples:
    """Time-domain preamble: the pilot symbol's IFFT, tiled periodically to ``length``."""
    N = config.fft_size
    length = N if length is None else length
    one = ofdm_modulate(pilot_symbols(config), config).values
    reps = -(-length // N)
    return TimeSamples(np.tile(one, reps)[:length], 0)


def linearize(x_n, n_abs: int, epsilon, N: int):
    """Predicted observation x(n) exp(j 2 pi n' eps / N) and its derivative in eps."""
    w = 2 * np.pi * n_abs / N
    predicted = x_n * np.exp(1j * w * epsilon)
    return predicted, 1j * w * predicted


def ekf_estimate(pre: Preamble, init_epsilon: float = 0.0, init_P: float = 1.0,
                 gain: str = "standard") -> tuple[OffsetEstimate, list[EkfState]]:
    """Run the scalar EKF over every preamble sample.

    Returns the final estimate and the trace ``[state_0, ..., state_Np]``
    where ``state_0`` holds the initial values.
    """
    if gain not in GAIN_FORMS:
        raise ValueError(f"gain must be one of {GAIN_FORMS}, got {gain!r}")
    Np = len(pre.x)
    if Np == 0:
        raise EmptyPreambleError("preamble has no samples")
    if init_P <= 0:
        raise ValueError(f"init_P must be > 0, got {init_P}")
    x = np.asarray(pre.x.values, dtype=np.complex128)
    if not np.any(x != 0):
        raise UnobservableError("preamble samples are all zero")
    y = np.asarray(pre.y.values, dtype=np.complex128)
    N = pre.fft_size

    sigma2 = max(pre.sigma2, SIGMA2_FLOOR * float(np.mean(np.abs(x) ** 2)))
    batch = y.shape[:-1]
    eps = np.full(batch, float(init_epsilon))
    P = np.full(batch, float(init_P))
    trace = [EkfState(_out(eps), _out(P), 0)]

    for i in range(Np):
        predicted, H = linearize(x[i], pre.x.start_index + i, eps, N)
        if gain == "standard":
            K = P * np.conj(H) / (np.abs(H) ** 2 * P + sigma2)
        else:
            K = P * np.conj(H) / (P + sigma2)
        eps = eps + np.real(K * (y[..., i] - predicted))
        P = (1.0 - np.real(K * H)) * P
        trace.append(EkfState(_out(eps), _out(P), i + 1))

    return OffsetEstimate(_out(eps), "EKF"), trace


def _out(a: np.ndarray):
    return float(a) if a.ndim == 0 else a.copy()


def ekf_correct(samples: TimeSamples, est: OffsetEstimate, config: OfdmConfig) -> np.ndarray:
    """Same de-rotate-and-FFT correction as the ML path; keep the absolute ``start_index``."""
    return correct_offset(samples, est, config)
