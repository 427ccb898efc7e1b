"""ICI coefficients and carrier-to-interference ratios under a normalized CFO.

``S(d)`` is the gain from the symbol on bin ``l`` into received bin ``k``
with ``d = l - k``::

    S(d) = (1/N) sum_{n=0}^{N-1} exp(j 2 pi n (d + eps) / N)
         = sin(pi (d + eps)) / (N sin(pi (d + eps) / N)) * exp(j pi (1 - 1/N) (d + eps))

``S`` is N-periodic in ``d``, so offsets wrap modulo N. Self-cancelling
modulation sees the first difference ``S(d) - S(d+1)`` and the differencing
demodulator the second difference ``-S(d-1) + 2 S(d) - S(d+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CirPoint",
    "ici_coefficient",
    "sc_mod_coefficient",
    "sc_demod_coefficient",
    "cir_standard",
    "cir_self_cancel",
]


@dataclass(frozen=True)
class CirPoint:
    epsilon: float
    cir_db: float
    variant: str  # "standard" or "self_cancel"


def ici_coefficient(d, epsilon: float, N: int):
    """Closed-form S(d); ``d`` may be an integer or an integer array.

    Where ``d + epsilon`` is an integer the 0/0 form is replaced by its limit:
    1 when ``d + epsilon`` is a multiple of N, 0 otherwise.
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    x = np.asarray(d, dtype=float) + epsilon
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty(x.shape, dtype=np.complex128)

    r = np.round(x)
    on_int = np.abs(x - r) < 1e-15
    out[on_int] = np.where(np.mod(r[on_int], N) == 0, 1.0, 0.0)

    xs = x[~on_int]
    mag = np.sin(np.pi * xs) / (N * np.sin(np.pi * xs / N))
    out[~on_int] = mag * np.exp(1j * np.pi * (1.0 - 1.0 / N) * xs)
    return complex(out[0]) if scalar else out


def sc_mod_coefficient(d, epsilon: float, N: int):
    """S'(d) = S(d) - S(d+1), seen by bin k when (X, -X) sits on bins (l, l+1)."""
    d = np.asarray(d)
    return ici_coefficient(d, epsilon, N) - ici_coefficient(d + 1, epsilon, N)


def sc_demod_coefficient(d, epsilon: float, N: int):
    """S''(d) = -S(d-1) + 2 S(d) - S(d+1), after differencing bins k and k+1."""
    d = np.asarray(d)
    return (-ici_coefficient(d - 1, epsilon, N)
            + 2 * ici_coefficient(d, epsilon, N)
            - ici_coefficient(d + 1, epsilon, N))


def _ratio_db(signal: float, interference: float) -> float:
    if interference == 0:
        return math.inf
    return 10.0 * math.log10(signal / interference)


def cir_standard(epsilon: float, N: int) -> CirPoint:
    """|S(0)|^2 over the summed |S(d)|^2 of the other N-1 bins, in dB.

    Returns ``+inf`` at ``epsilon == 0``.
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if epsilon == 0:
        return CirPoint(epsilon, math.inf, "standard")
    s = ici_coefficient(np.arange(N), epsilon, N)
    p = np.abs(s) ** 2
    return CirPoint(epsilon, _ratio_db(p[0], p[1:].sum()), "standard")


def cir_self_cancel(epsilon: float, N: int) -> CirPoint:
    """CIR of the full self-cancellation scheme, in dB.

    Interferers are the other even offsets d = 2, 4, ..., N-2 (one data
    symbol per subcarrier pair, all pairs loaded).
    """
    if N < 4 or N % 2:
        raise ValueError(f"N must be even and >= 4, got {N}")
    if epsilon == 0:
        return CirPoint(epsilon, math.inf, "self_cancel")
    p = np.abs(sc_demod_coefficient(np.arange(0, N, 2), epsilon, N)) ** 2
    return CirPoint(epsilon, _ratio_db(p[0], p[1:].sum()), "self_cancel")
