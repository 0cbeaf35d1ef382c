import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ioncat import carrier
from ioncat.carrier import CatSign, CatSpec, cat_state, evolve_ideal, measure_internal, state_at_tk
from ioncat.exceptions import DegenerateStateError, ParameterError
from ioncat.hilbert import (
    EXCITED,
    GROUND,
    CompositeState,
    MotionalState,
    SystemParams,
    coherent_amplitudes,
    fidelity,
    index,
    initial_state,
    min_truncation,
    norm_sq,
)
from ioncat.lamb_dicke import coupling_ld


def brute_cat(alpha, phi, sign, M):
    """(|alpha e^{i phi}> +- |alpha e^{-i phi}>) / 2 by adding two coherent vectors."""
    plus = coherent_amplitudes(alpha * cmath.exp(1j * phi), M).amplitudes
    minus = coherent_amplitudes(alpha * cmath.exp(-1j * phi), M).amplitudes
    return (plus + minus) / 2 if sign == "plus" else (plus - minus) / 2


class TestEvolveIdeal:
    def test_t0_is_initial(self, lossless_params):
        np.testing.assert_array_equal(
            evolve_ideal(lossless_params, 0.0).amplitudes, initial_state(lossless_params).amplitudes
        )

    @pytest.mark.parametrize("t", [0.3, 3.29, 17.0, 250.0])
    def test_norm(self, lossless_params, t):
        assert norm_sq(evolve_ideal(lossless_params, t)) == pytest.approx(1.0, abs=1e-12)

    def test_sector_formula(self, lossless_params):
        p = lossless_params
        t = math.pi / (1 - p.eta**2 / 2)
        psi = evolve_ideal(p, t)
        c = coherent_amplitudes(p.alpha, p.M).amplitudes
        lam = coupling_ld(p.eta, np.arange(p.M))
        np.testing.assert_allclose(psi.sector(1, GROUND), -1j * c * np.sin(lam * t), atol=1e-14)
        assert not np.any(psi.sector(0, GROUND)) and not np.any(psi.sector(1, EXCITED))

    @settings(max_examples=40, deadline=None)
    @given(
        st.floats(0.1, 2.5),
        st.floats(-math.pi, math.pi),
        st.floats(0.005, 0.1),
        st.floats(0.0, 60.0),
    )
    def test_equivalent_cat_form(self, r, theta, eta, t):
        alpha = r * cmath.exp(1j * theta)
        p = SystemParams(eta=eta, gamma=0.0, alpha=alpha, M=min_truncation(alpha))
        psi = evolve_ideal(p, t)
        phi = eta**2 * t
        cp = cat_state(CatSpec(alpha, phi, "plus"), p.M, normalized=False).amplitudes
        cm = cat_state(CatSpec(alpha, phi, "minus"), p.M, normalized=False).amplitudes
        w = p.omega_eta * t
        np.testing.assert_allclose(psi.sector(0, EXCITED), math.cos(w) * cp - 1j * math.sin(w) * cm, atol=1e-10)
        np.testing.assert_allclose(psi.sector(1, GROUND), math.cos(w) * cm - 1j * math.sin(w) * cp, atol=1e-10)


class TestCatState:
    def test_phi0_plus_is_coherent(self):
        cat = cat_state(CatSpec(2.0, 0.0, "plus"), 40)
        np.testing.assert_allclose(cat.amplitudes, coherent_amplitudes(2.0, 40).amplitudes, atol=1e-15)

    def test_phi0_minus_vanishes(self):
        assert not np.any(cat_state(CatSpec(2.0, 0.0, "minus"), 40, normalized=False).amplitudes)

    def test_phi0_minus_normalized_raises(self):
        with pytest.raises(DegenerateStateError):
            cat_state(CatSpec(2.0, 0.0, CatSign.MINUS), 40)
        with pytest.raises(DegenerateStateError):
            cat_state(CatSpec(2.0, math.pi, CatSign.MINUS), 40)

    def test_even_cat(self):
        raw = cat_state(CatSpec(2.0, math.pi / 2, "plus"), 40, normalized=False).amplitudes
        np.testing.assert_allclose(raw, brute_cat(2.0, math.pi / 2, "plus", 40), atol=1e-15)
        assert np.all(np.abs(raw[1::2]) < 1e-15)
        assert np.all(np.abs(raw[0:12:2]) > 1e-3)

    @given(st.floats(0.0, 2.5), st.floats(-4.0, 4.0), st.sampled_from(["plus", "minus"]))
    def test_matches_brute_superposition(self, alpha, phi, sign):
        raw = cat_state(CatSpec(alpha, phi, sign), 40, normalized=False).amplitudes
        np.testing.assert_allclose(raw, brute_cat(alpha, phi, sign, 40), atol=1e-14)

    @given(st.floats(0.1, 2.5), st.floats(-4.0, 4.0))
    def test_plus_and_minus_recombine(self, alpha, phi):
        plus = cat_state(CatSpec(alpha, phi, "plus"), 40, normalized=False).amplitudes
        minus = cat_state(CatSpec(alpha, phi, "minus"), 40, normalized=False).amplitudes
        np.testing.assert_allclose(plus + minus, coherent_amplitudes(alpha * cmath.exp(1j * phi), 40).amplitudes,
                                   atol=1e-15)

    def test_normalized(self):
        assert norm_sq(cat_state(CatSpec(2.0, 0.7, "minus"), 40)) == pytest.approx(1.0, abs=1e-14)

    def test_bad_M(self):
        with pytest.raises(ParameterError):
            cat_state(CatSpec(1.0, 0.1), 0)


class TestStateAtTk:
    @pytest.mark.parametrize("k", [1, 2, 3, 7])
    def test_reduces_to_cats(self, lossless_params, k):
        p = lossless_params
        psi = state_at_tk(p, k)
        phi = p.eta**2 * k * math.pi / (1 - p.eta**2 / 2)
        plus = MotionalState(brute_cat(p.alpha, phi, "plus", p.M))
        minus = MotionalState(brute_cat(p.alpha, phi, "minus", p.M))
        assert fidelity(MotionalState(psi.sector(0, EXCITED)), plus) == pytest.approx(1.0, abs=1e-10)
        assert fidelity(MotionalState(psi.sector(1, GROUND)), minus) == pytest.approx(1.0, abs=1e-10)
        # global phase (-1)^k, amplitude by amplitude
        np.testing.assert_allclose(psi.sector(0, EXCITED), (-1) ** k * plus.amplitudes, atol=1e-12)
        np.testing.assert_allclose(psi.sector(1, GROUND), (-1) ** k * minus.amplitudes, atol=1e-12)
        assert norm_sq(psi) == pytest.approx(1.0, abs=1e-12)
        assert norm_sq(plus) + norm_sq(minus) == pytest.approx(1.0, abs=1e-12)

    def test_k_must_be_positive(self, lossless_params):
        with pytest.raises(ParameterError):
            state_at_tk(lossless_params, 0)


class TestMeasure:
    def test_outcome_e_gives_plus_cat(self, lossless_params):
        p = lossless_params
        psi = state_at_tk(p, 1)
        state, prob = measure_internal(psi, EXCITED)
        # brute-force projection on the flat vector
        proj = np.array([psi.amplitudes[index(m, 0, EXCITED)] for m in range(p.M)])
        assert prob == pytest.approx(float(np.sum(np.abs(proj) ** 2)), rel=1e-14)
        phi = p.eta**2 * carrier.tk_time(p, 1)
        plus = brute_cat(p.alpha, phi, "plus", p.M)
        assert prob == pytest.approx(float(np.sum(np.abs(plus) ** 2)), abs=1e-12)
        assert fidelity(state, MotionalState(plus)) == pytest.approx(1.0, abs=1e-12)
        assert norm_sq(state) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("t", [0.4, 3.1, 9.0])
    def test_probabilities_sum_to_one(self, lossless_params, t):
        psi = evolve_ideal(lossless_params, t)
        _, pe = measure_internal(psi, EXCITED)
        _, pg = measure_internal(psi, GROUND)
        assert pe + pg == pytest.approx(1.0, abs=1e-12)

    def test_zero_probability_outcome(self, lossless_params):
        with pytest.raises(DegenerateStateError):
            measure_internal(initial_state(lossless_params), GROUND)

    def test_zero_state(self):
        with pytest.raises(DegenerateStateError):
            measure_internal(CompositeState.zeros(3), EXCITED)

    def test_remeasure_is_certain(self, lossless_params):
        psi = evolve_ideal(lossless_params, 2.0)
        state, _ = measure_internal(psi, GROUND)
        collapsed = CompositeState.from_sectors({(1, GROUND): state.amplitudes}, state.M)
        again, prob = measure_internal(collapsed, GROUND)
        assert prob == pytest.approx(1.0, abs=1e-15)
        with pytest.raises(DegenerateStateError):
            measure_internal(collapsed, EXCITED)

    def test_entangled_cavity_rejected(self):
        psi = CompositeState.from_sectors({(0, GROUND): [1.0], (1, GROUND): [1.0]}, 1)
        with pytest.raises(ValueError):
            measure_internal(psi, GROUND)


class TestTimeseries:
    def test_columns(self, lossless_params):
        p = lossless_params
        t1 = carrier.tk_time(p, 1)
        samples = carrier.carrier_timeseries(p, [0.0, 1.0, t1])
        assert samples[0].p_excited == pytest.approx(1.0) and samples[0].p_ground == 0.0
        assert math.isnan(samples[0].fidelity_minus)
        for s in samples:
            assert s.p_excited + s.p_ground == pytest.approx(1.0, abs=1e-12)
        assert samples[2].fidelity_plus == pytest.approx(1.0, abs=1e-10)
        assert samples[2].fidelity_minus == pytest.approx(1.0, abs=1e-10)
        text = carrier.timeseries_csv(samples)
        assert text.splitlines()[0] == "t,P(e),P(g),fidelity_plus,fidelity_minus"
        assert len(text.splitlines()) == 4
