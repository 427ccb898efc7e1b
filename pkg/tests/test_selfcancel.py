import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ofdm_ici.channel import add_awgn, apply_cfo, ebn0_to_sigma, make_rng
from ofdm_ici.ici import cir_self_cancel
from ofdm_ici.modem import (
    ModulationScheme,
    OfdmConfig,
    SizingError,
    TimeSamples,
    demap_symbols,
    load_carriers,
    map_bits,
    ofdm_demodulate,
    ofdm_modulate,
)
from ofdm_ici.selfcancel import THROUGHPUT_FACTOR, sc_decode, sc_encode
from montecarlo import measured_sc_cir_db
from oracles import direct_Sp, direct_Spp

BPSK = ModulationScheme("PSK", 2)
ALL_SCHEMES = [ModulationScheme("PSK", m) for m in (2, 4, 16, 64)] + [
    ModulationScheme("QAM", m) for m in (4, 16, 64)
]


def _rand_payload(shape, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestEncode:
    def test_single_pair(self):
        cfg = OfdmConfig(4, 2, BPSK)
        a = 0.3 - 0.7j
        assert_array_equal(sc_encode([a], cfg), [a, -a, 0, 0])

    def test_zero_payload(self):
        cfg = OfdmConfig(16, 12, BPSK)
        assert_array_equal(sc_encode(np.zeros(6), cfg), np.zeros(16))

    def test_pair_structure(self):
        cfg = OfdmConfig(16, 12, BPSK)
        p = _rand_payload(6)
        X = sc_encode(p, cfg)
        assert_array_equal(X[0:12:2], p)
        assert_array_equal(X[1:12:2], -p)
        assert_array_equal(X[12:], 0)

    def test_odd_active_rejected(self):
        with pytest.raises(ValueError):
            sc_encode(np.zeros(3), OfdmConfig(16, 7, BPSK))

    def test_wrong_payload_length(self):
        with pytest.raises(SizingError):
            sc_encode(np.zeros(5), OfdmConfig(16, 12, BPSK))

    def test_received_bins_follow_first_difference(self):
        N, eps = 16, 0.3
        cfg = OfdmConfig(N, N, BPSK)
        X = sc_encode(_rand_payload(N // 2, 1), cfg)
        Y = ofdm_demodulate(apply_cfo(ofdm_modulate(X, cfg), eps, cfg), cfg)
        for k in range(0, N, 2):
            expected = sum(X[l] * direct_Sp(l - k, eps, N) for l in range(0, N, 2))
            assert Y[k] == pytest.approx(expected, abs=1e-12)

    def test_throughput(self):
        assert THROUGHPUT_FACTOR == 0.5


class TestDecode:
    @pytest.mark.invariant
    @pytest.mark.parametrize("scheme", ALL_SCHEMES, ids=lambda s: s.name)
    @pytest.mark.parametrize("active", [2, 10, 64])
    def test_round_trip_at_zero_offset(self, scheme, active):
        cfg = OfdmConfig(64, active, scheme)
        bits = np.random.default_rng(active).integers(0, 2, (4, active // 2 * scheme.bits_per_symbol))
        p = map_bits(bits, scheme)
        Y = ofdm_demodulate(ofdm_modulate(sc_encode(p, cfg), cfg), cfg)
        out = sc_decode(Y, cfg)
        assert_allclose(out, p, atol=1e-12)
        assert_array_equal(demap_symbols(out, scheme), bits)

    def test_zero_input(self):
        assert_array_equal(sc_decode(np.zeros(16), OfdmConfig(16, 16, BPSK)), np.zeros(8))

    def test_decoded_follows_second_difference(self):
        N, eps = 16, 0.3
        cfg = OfdmConfig(N, N, BPSK)
        X = sc_encode(_rand_payload(N // 2, 2), cfg)
        out = sc_decode(ofdm_demodulate(apply_cfo(ofdm_modulate(X, cfg), eps, cfg), cfg), cfg)
        for k in range(0, N, 2):
            expected = sum(X[l] * direct_Spp(l - k, eps, N) for l in range(0, N, 2)) / 2
            assert out[k // 2] == pytest.approx(expected, abs=1e-12)


@pytest.mark.invariant
def test_monte_carlo_cir_matches_closed_form():
    measured = measured_sc_cir_db(0.3, 64, 10_000, seed=4)
    assert measured == pytest.approx(cir_self_cancel(0.3, 64).cir_db, abs=0.5)


@pytest.mark.invariant
def test_sc_beats_plain_ofdm_on_same_channel_draw():
    N, eps = 64, 0.15
    cfg = OfdmConfig(N, 48, BPSK)
    rng = make_rng(77)
    frames = 4000
    bits = rng.integers(0, 2, (frames, 48))
    noise = add_awgn(TimeSamples(np.zeros((frames, N), complex)), ebn0_to_sigma(10.0, BPSK, N), rng).values

    plain_tx = ofdm_modulate(load_carriers(map_bits(bits, BPSK), cfg), cfg)
    plain_rx = TimeSamples(apply_cfo(plain_tx, eps, cfg).values + noise)
    plain_err = np.count_nonzero(demap_symbols(ofdm_demodulate(plain_rx, cfg)[:, :48], BPSK) != bits)

    half = bits[:, :24]
    sc_tx = ofdm_modulate(sc_encode(map_bits(half, BPSK), cfg), cfg)
    sc_rx = TimeSamples(apply_cfo(sc_tx, eps, cfg).values + noise)
    sc_err = np.count_nonzero(demap_symbols(sc_decode(ofdm_demodulate(sc_rx, cfg), cfg), BPSK) != half)

    assert sc_err / half.size < plain_err / bits.size
