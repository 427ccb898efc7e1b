import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ofdm_ici.ici import (
    cir_self_cancel,
    cir_standard,
    ici_coefficient,
    sc_demod_coefficient,
    sc_mod_coefficient,
)
from oracles import (
    brute_cir_self_cancel,
    brute_cir_standard,
    direct_S,
    direct_Sp,
    direct_Spp,
)

# Frozen from the explicit N-term sums in oracles.py.
S_1_04_64 = 0.08084838261158606 + 0.2007369309025608j
SP_4_04_64 = 0.004013262703112454 + 0.012351552551728366j
SPP_6_04_64 = -0.0007311040807689191 - 0.0022501069933432566j
CIR_STD_02_64 = 8.457667602785865
CIR_SC_025_64 = 23.08871843809678


class TestCoefficients:
    def test_orthogonality(self):
        assert ici_coefficient(0, 0.0, 64) == 1
        assert ici_coefficient(3, 0.0, 64) == 0
        assert ici_coefficient(64, 0.0, 64) == 1
        assert ici_coefficient(-2, 2.0, 16) == 1

    def test_frozen_value(self):
        assert direct_S(1, 0.4, 64) == pytest.approx(S_1_04_64, abs=1e-14)
        assert ici_coefficient(1, 0.4, 64) == pytest.approx(S_1_04_64, abs=1e-12)

    def test_sc_mod_coefficient(self):
        assert sc_mod_coefficient(0, 0.0, 64) == 1
        assert sc_mod_coefficient(-1, 0.0, 64) == -1
        assert sc_mod_coefficient(4, 0.4, 64) == pytest.approx(SP_4_04_64, abs=1e-12)
        assert abs(sc_mod_coefficient(4, 0.4, 64)) < abs(ici_coefficient(4, 0.4, 64))

    def test_sc_demod_coefficient(self):
        assert sc_demod_coefficient(0, 0.0, 64) == 2
        assert sc_demod_coefficient(2, 0.0, 64) == 0
        assert sc_demod_coefficient(6, 0.4, 64) == pytest.approx(SPP_6_04_64, abs=1e-12)

    def test_array_input(self):
        d = np.arange(-8, 8)
        got = ici_coefficient(d, 0.25, 16)
        assert got.shape == (16,)
        assert np.allclose(got, [direct_S(int(k), 0.25, 16) for k in d], atol=1e-12)

    def test_periodic_in_d(self):
        assert ici_coefficient(3 + 32, 0.1, 32) == pytest.approx(ici_coefficient(3, 0.1, 32), abs=1e-13)

    def test_rejects_small_N(self):
        with pytest.raises(ValueError):
            ici_coefficient(0, 0.1, 1)


@pytest.mark.invariant
@pytest.mark.parametrize("N", [16, 64, 1024])
@pytest.mark.parametrize("eps", [0.05, 0.1, 0.25, 0.4, 0.5])
def test_closed_form_matches_direct_sum(N, eps):
    d = np.arange(-N, N)
    closed = ici_coefficient(d, eps, N)
    direct = np.array([direct_S(int(k), eps, N) for k in d])
    assert np.max(np.abs(closed - direct)) < 1e-12


@pytest.mark.invariant
@settings(max_examples=60, deadline=None)
@given(st.sampled_from([16, 64, 256]), st.floats(0.0, 0.5), st.integers(-300, 300))
def test_differences_and_magnitude_bound(N, eps, d):
    s = ici_coefficient(d, eps, N)
    assert abs(s) <= 1 + 1e-12
    assert sc_mod_coefficient(d, eps, N) == pytest.approx(direct_Sp(d, eps, N), abs=1e-12)
    assert sc_demod_coefficient(d, eps, N) == pytest.approx(direct_Spp(d, eps, N), abs=1e-12)


@pytest.mark.invariant
@pytest.mark.parametrize("N", [16, 64, 1024])
@pytest.mark.parametrize("eps", [0.01, 0.2, 0.5])
def test_power_over_one_period_is_unity(N, eps):
    total = np.sum(np.abs(ici_coefficient(np.arange(N), eps, N)) ** 2)
    assert total <= 1 + 1e-9
    assert total == pytest.approx(1.0, abs=1e-9)


@pytest.mark.invariant
def test_second_difference_dominates_for_most_offsets():
    N, eps = 64, 0.4
    d = np.arange(-N // 2, N // 2)
    s = np.abs(ici_coefficient(d, eps, N))
    s1 = np.abs(sc_mod_coefficient(d, eps, N))
    s2 = np.abs(sc_demod_coefficient(d, eps, N))
    assert np.count_nonzero((s2 < s) & (s2 < s1)) > N / 2


class TestCir:
    def test_zero_offset_is_infinite(self):
        assert cir_standard(0.0, 64).cir_db == math.inf
        assert cir_self_cancel(0.0, 64).cir_db == math.inf

    @pytest.mark.parametrize("fn", [cir_standard, cir_self_cancel])
    def test_grows_as_offset_shrinks(self, fn):
        vals = [fn(e, 64).cir_db for e in (0.1, 0.01, 0.001)]
        assert vals[0] < vals[1] < vals[2]

    def test_standard_against_brute_force(self):
        assert brute_cir_standard(0.2, 64) == pytest.approx(CIR_STD_02_64, abs=1e-9)
        assert cir_standard(0.2, 64).cir_db == pytest.approx(CIR_STD_02_64, abs=1e-9)

    def test_self_cancel_against_brute_force(self):
        assert brute_cir_self_cancel(0.25, 64) == pytest.approx(CIR_SC_025_64, abs=1e-9)
        assert cir_self_cancel(0.25, 64).cir_db == pytest.approx(CIR_SC_025_64, abs=1e-9)

    def test_standard_monotone_decreasing(self):
        grid = np.linspace(0.01, 0.5, 50)
        vals = [cir_standard(e, 64).cir_db for e in grid]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_improvement_over_15_db(self):
        for e in np.round(np.arange(0.05, 0.46, 0.05), 2):
            gain = cir_self_cancel(e, 64).cir_db - cir_standard(e, 64).cir_db
            assert gain > 15, e

    @pytest.mark.invariant
    def test_self_cancel_beats_standard_pointwise(self):
        for e in np.linspace(0.001, 0.5, 100):
            assert cir_self_cancel(e, 64).cir_db > cir_standard(e, 64).cir_db

    def test_variants_tagged(self):
        assert cir_standard(0.1, 16).variant == "standard"
        assert cir_self_cancel(0.1, 16).variant == "self_cancel"

    def test_self_cancel_needs_even_N(self):
        with pytest.raises(ValueError):
            cir_self_cancel(0.1, 7)
        with pytest.raises(ValueError):
            cir_self_cancel(0.1, 2)
