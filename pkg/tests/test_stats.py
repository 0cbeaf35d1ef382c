import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ioncat.carrier import CatSpec, cat_state
from ioncat.conditional import post_jump_state
from ioncat.exceptions import ParameterError
from ioncat.hilbert import MotionalState, SystemParams, coherent_amplitudes, initial_coefficients, normalize
from ioncat.lamb_dicke import coupling_ld
from ioncat.stats import (
    classify,
    count_interior_maxima,
    distribution_from_probabilities,
    fano_timeseries,
    phonon_distribution,
)


def fock(m, M=20):
    v = np.zeros(M, dtype=complex)
    v[m] = 1.0
    return MotionalState(v)


def brute_fano(p):
    m = np.arange(len(p))
    p = np.asarray(p) / np.sum(p)
    mean = np.sum(m * p)
    return np.sum(m * m * p) / mean - mean


class TestPhononDistribution:
    def test_coherent_is_poissonian(self):
        dist = phonon_distribution(normalize(coherent_amplitudes(2.0, 40)))
        poisson = [math.exp(-4) * 4**m / math.factorial(m) for m in range(40)]
        np.testing.assert_allclose(dist.p, poisson, rtol=1e-12, atol=1e-30)
        assert dist.fano == pytest.approx(1.0, abs=1e-10)
        assert dist.mean == pytest.approx(4.0, abs=1e-12)
        assert classify(dist.fano) == "poissonian"

    @given(st.floats(0.3, 3.0), st.floats(-math.pi, math.pi))
    def test_any_coherent_is_poissonian(self, r, theta):
        state = normalize(coherent_amplitudes(r * cmath.exp(1j * theta), 60))
        assert phonon_distribution(state).fano == pytest.approx(1.0, abs=1e-10)

    def test_even_cat_has_no_odd_numbers(self):
        dist = phonon_distribution(cat_state(CatSpec(2.0, math.pi / 2, "plus"), 40))
        assert np.all(dist.p[1::2] < 1e-30)
        assert math.fsum(dist.p) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("m", [1, 3, 7])
    def test_fock_has_zero_fano(self, m):
        dist = phonon_distribution(fock(m))
        assert dist.mean == m
        assert abs(dist.fano) <= 1e-12
        assert classify(dist.fano) == "sub"

    @given(st.integers(0, 15), st.integers(1, 15))
    def test_two_fock_superposition(self, m, k):
        v = np.zeros(40, dtype=complex)
        v[m] = v[m + k] = 1 / math.sqrt(2)
        assert phonon_distribution(MotionalState(v)).fano == pytest.approx(k * k / (2 * (2 * m + k)), rel=1e-12)

    @given(st.floats(-math.pi, math.pi))
    def test_global_phase_invariance(self, theta):
        base = post_jump_state(SystemParams(), 2.0)
        rotated = MotionalState(base.amplitudes * cmath.exp(1j * theta))
        a, b = phonon_distribution(base), phonon_distribution(rotated)
        np.testing.assert_allclose(a.p, b.p, rtol=1e-14, atol=1e-300)
        assert a.fano == pytest.approx(b.fano, rel=1e-13)

    def test_rejects_unnormalized(self):
        with pytest.raises(ParameterError):
            phonon_distribution(MotionalState(np.array([1.0, 1.0])))

    def test_vacuum_fano_undefined(self):
        assert math.isnan(phonon_distribution(fock(0)).fano)

    def test_small_negative_clamped(self):
        dist = distribution_from_probabilities([0.5, -1e-17, 0.5])
        assert dist.p[1] == 0.0

    def test_csv(self):
        text = phonon_distribution(fock(1, 3)).to_csv()
        assert text == "m,P_m\n0,0.0\n1,1.0\n2,0.0\n"


class TestClassify:
    @pytest.mark.parametrize(
        "fano,label", [(0.5, "sub"), (1 - 2e-9, "sub"), (1 - 5e-10, "poissonian"), (1.0, "poissonian"),
                       (1 + 5e-10, "poissonian"), (1 + 2e-9, "super"), (3.0, "super")]
    )
    def test_boundaries(self, fano, label):
        assert classify(fano) == label


class TestFanoTimeseries:
    def test_small_tau_limit(self, working_point):
        c = initial_coefficients(working_point)
        lam = coupling_ld(working_point.eta, np.arange(working_point.M))
        expected = brute_fano(np.abs(c * lam) ** 2)
        series = fano_timeseries(working_point, [1e-6])
        assert series.fano[0] == pytest.approx(expected, abs=1e-9)
        assert 0.99 < expected < 1.0

    def test_sub_and_super(self, working_point):
        series = fano_timeseries(working_point, np.arange(0.0, 10.0001, 0.01))
        assert series.skipped == (0.0,)
        assert series.fano.min() < 1 - 1e-3
        assert series.fano.max() > 1 + 1e-3
        # values frozen from a dt = 1e-3 RK4 run of the no-detection equations
        assert series.fano.min() == pytest.approx(0.6276269762632571, abs=1e-8)
        assert series.fano.max() == pytest.approx(2.921170005397163, abs=1e-8)
        assert series.tau[np.argmax(series.fano)] == pytest.approx(3.29)

    def test_lossless_full_phase_turn_is_poissonian(self):
        # at eta = 0.05 a full turn coincides with a node of sin(omega tau); 0.06 does not
        p = SystemParams(gamma=0.0, eta=0.06, alpha=2.0)
        tau = 2 * math.pi / p.eta**2  # phi = eta^2 tau = 2 pi
        assert abs(math.sin(p.omega_eta * tau)) > 0.1
        assert fano_timeseries(p, [tau]).fano[0] == pytest.approx(1.0, abs=1e-8)

    def test_degenerate_points_skipped(self, lossless_params):
        series = fano_timeseries(lossless_params, [0.0, 1.0])
        assert series.skipped == (0.0,)
        assert series.tau.tolist() == [1.0]

    def test_csv(self, working_point):
        lines = fano_timeseries(working_point, [1.0, 2.0]).to_csv().splitlines()
        assert lines[0] == "tau,fano" and len(lines) == 3


class TestMaxima:
    def test_poisson_unimodal(self):
        # Poisson(4) has p_3 == p_4: the plateau counts once
        dist = phonon_distribution(normalize(coherent_amplitudes(2.0, 40)))
        assert count_interior_maxima(dist, (0, 12), 1e-4) == 1

    def test_even_cat_alternates(self):
        dist = phonon_distribution(cat_state(CatSpec(2.0, math.pi / 2, "plus"), 40))
        assert count_interior_maxima(dist, (0, 12), 1e-4) >= 2

    def test_post_jump_distribution(self, working_point):
        dist = phonon_distribution(post_jump_state(working_point, 3.29))
        assert count_interior_maxima(dist, (0, 12), 1e-4) == 2
        assert int(np.argmax(dist.p[:5])) == 2 and 6 <= int(np.argmax(dist.p[5:13])) + 5 <= 9

    def test_floor(self):
        dist = distribution_from_probabilities([0.5, 0.0, 1e-6, 0.0, 0.5])
        assert count_interior_maxima(dist, (0, 4), 1e-4) == 0
        assert count_interior_maxima(dist, (0, 4), 0.0) == 1

    def test_fock_edges_do_not_count(self):
        assert count_interior_maxima(phonon_distribution(fock(0, 5)), (0, 4), 0.0) == 0
        assert count_interior_maxima(phonon_distribution(fock(2, 5)), (0, 4), 0.0) == 1

    def test_bad_window(self):
        with pytest.raises(ParameterError):
            count_interior_maxima(phonon_distribution(fock(2, 5)), (0, 5), 0.0)
