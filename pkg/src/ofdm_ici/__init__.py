"""Baseband OFDM simulator for comparing ICI mitigation under carrier frequency offset.

Three mitigation schemes are modelled: self-cancelling subcarrier pairs,
maximum-likelihood offset estimation from a repeated symbol, and an
extended Kalman filter driven by a known preamble.
"""

__version__ = "0.1.0"

from .channel import NoiseSpec, add_awgn, apply_cfo, ebn0_to_sigma, make_rng, remove_cfo
from .ekf import EkfState, Preamble, ekf_correct, ekf_estimate, preamble_samples
from .ici import (
    CirPoint,
    cir_self_cancel,
    cir_standard,
    ici_coefficient,
    sc_demod_coefficient,
    sc_mod_coefficient,
)
from .ml import OffsetEstimate, RepeatedObservation, ml_correct, ml_estimate, ml_frame_build, ml_observe
from .modem import (
    ModulationScheme,
    OfdmConfig,
    SizingError,
    TimeSamples,
    demap_symbols,
    load_carriers,
    map_bits,
    ofdm_demodulate,
    ofdm_modulate,
    parse_modulation,
)
from .selfcancel import sc_decode, sc_encode
