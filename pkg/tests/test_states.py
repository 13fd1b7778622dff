import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from qillum import (
    DisplacedThermal,
    SignedThermalMixture,
    ThermalComponent,
    fano_factor,
    herald_state,
    mean_photon,
    photon_number_distribution,
    tmsv_marginal,
    wigner_slice,
)
from qillum.errors import DegenerateHeraldingError, UnsupportedStateError
from qillum.states import second_moment, squeezing_to_mean

# Grids where signed-mixture weights stay moderate (|w| well below 1e4), so
# absolute 1e-12 assertions are meaningful for doubles.
TRACE_NBARS = (0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
BOOST_NBARS = (0.01, 0.1, 1.0, 5.0, 20.0)
ETAS = (0.5, 0.9, 1.0)


def herald_grid(nbars, max_detectors=4, min_clicks=0):
    for nbar in nbars:
        for eta in ETAS:
            for detectors in range(1, max_detectors + 1):
                for clicks in range(min_clicks, detectors + 1):
                    yield nbar, eta, detectors, clicks


class TestTmsvMarginal:
    def test_vacuum(self):
        state = tmsv_marginal(0.0)
        assert state.components == (ThermalComponent(1.0, 0.0),)

    def test_bose_einstein_ground_probability(self):
        p = photon_number_distribution(tmsv_marginal(1.0), 0)
        assert p[0] == pytest.approx(0.5, abs=1e-15)

    def test_squeezing_conversion(self):
        nbar = squeezing_to_mean(1.0)
        assert nbar == pytest.approx(math.sinh(1.0) ** 2, abs=1e-15)
        assert nbar == pytest.approx(1.3810978455418157, abs=1e-12)

    def test_negative_mean_rejected(self):
        with pytest.raises(ValueError):
            tmsv_marginal(-0.1)


class TestHeraldState:
    def test_single_click_probability(self):
        h = herald_state(1.0, 0.95, 1, 1)
        assert h.herald_probability == pytest.approx(1 - 1 / 1.95, abs=1e-14)

    def test_no_click_state_is_single_thermal(self):
        h = herald_state(2.0, 0.7, 1, 0)
        assert len(h.state.components) == 1
        comp = h.state.components[0]
        assert comp.weight == pytest.approx(1.0, abs=1e-15)
        assert comp.mean == pytest.approx((2.0 - 1.4) / (1 + 1.4), abs=1e-15)

    def test_full_click_fock_support(self):
        p = photon_number_distribution(herald_state(1.0, 1.0, 2, 2), 5)
        assert abs(p[0]) < 1e-14 and abs(p[1]) < 1e-14

    def test_degenerate_at_zero_efficiency(self):
        with pytest.raises(DegenerateHeraldingError):
            herald_state(1.0, 0.0, 2, 1)
        # k = 0 at zero efficiency is a plain unconditioned thermal
        h = herald_state(1.0, 0.0, 2, 0)
        assert h.herald_probability == pytest.approx(1.0, abs=1e-15)
        assert mean_photon(h) == pytest.approx(1.0, abs=1e-15)

    def test_trace_one(self):
        for nbar, eta, detectors, clicks in herald_grid(TRACE_NBARS):
            h = herald_state(nbar, eta, detectors, clicks)
            total = math.fsum(c.weight for c in h.state.components)
            assert abs(total - 1.0) < 1e-12

    def test_herald_probability_law(self):
        # a complete POVM on the thermal idler: outcome probabilities sum to one
        for nbar in TRACE_NBARS:
            for eta in ETAS:
                for detectors in range(1, 5):
                    total = math.fsum(
                        herald_state(nbar, eta, detectors, k).herald_probability
                        for k in range(detectors + 1)
                    )
                    assert abs(total - 1.0) < 1e-12


class TestMeanPhoton:
    def test_unit_efficiency_boost_is_one(self):
        for nbar in (0.01, 0.1, 1.0, 10.0):
            assert mean_photon(herald_state(nbar, 1.0, 1, 1)) - nbar == pytest.approx(1.0, abs=1e-12)

    def test_thermal_identity(self):
        assert mean_photon(tmsv_marginal(3.7)) == 3.7

    def test_lossy_single_click_value(self):
        got = mean_photon(herald_state(1.0, 0.95, 1, 1))
        assert got == pytest.approx(1.0 + 2.0 / 1.95, abs=1e-12)

    def test_boost_when_all_detectors_fire(self):
        # k = N conditions the mean upward for every nbar on the grid
        for nbar, eta, detectors, clicks in herald_grid(BOOST_NBARS, min_clicks=1):
            if clicks == detectors:
                assert mean_photon(herald_state(nbar, eta, detectors, clicks)) > nbar

    def test_boost_for_any_click_at_low_mean(self):
        # partial outcomes (k < N) also boost while the source is dim
        for nbar, eta, detectors, clicks in herald_grid((0.01, 0.1, 0.5, 1.0), min_clicks=1):
            assert mean_photon(herald_state(nbar, eta, detectors, clicks)) > nbar

    def test_partial_click_outcomes_can_reduce_the_mean(self):
        # exactly-one-click-of-two on a bright source post-selects dim pulses;
        # the (2, 1) boost changes sign at nbar = sqrt(2)/eta
        assert mean_photon(herald_state(5.0, 0.5, 2, 1)) < 5.0
        pivot = math.sqrt(2.0) / 0.9
        assert mean_photon(herald_state(pivot - 0.05, 0.9, 2, 1)) > pivot - 0.05
        assert mean_photon(herald_state(pivot + 0.05, 0.9, 2, 1)) < pivot + 0.05

    def test_single_click_multiplex_ordering(self):
        # one click heralds a larger boost when the detector is alone
        for nbar in BOOST_NBARS:
            for eta in ETAS:
                m11 = mean_photon(herald_state(nbar, eta, 1, 1))
                m21 = mean_photon(herald_state(nbar, eta, 2, 1))
                assert m11 > m21

    def test_monotone_in_clicks(self):
        for nbar in BOOST_NBARS:
            for eta in ETAS:
                for detectors in range(1, 5):
                    means = [
                        mean_photon(herald_state(nbar, eta, detectors, k))
                        for k in range(detectors + 1)
                    ]
                    assert all(a < b for a, b in zip(means, means[1:]))

    @settings(max_examples=60, deadline=None)
    @given(
        nbar=st.floats(min_value=0.01, max_value=20.0),
        eta=st.floats(min_value=0.05, max_value=1.0),
        detectors=st.integers(min_value=1, max_value=4),
    )
    def test_boost_property(self, nbar, eta, detectors):
        h = herald_state(nbar, eta, detectors, detectors)
        assert mean_photon(h) > nbar


class TestPhotonNumberDistribution:
    def test_thermal_bose_einstein(self):
        p = photon_number_distribution(tmsv_marginal(1.0), 10)
        assert np.allclose(p, 0.5 ** (np.arange(11) + 1), atol=1e-15)

    def test_fock_support_two_clicks(self):
        p = photon_number_distribution(herald_state(1.0, 0.9, 2, 2), 8)
        assert abs(p[0]) < 1e-14 and abs(p[1]) < 1e-14

    def test_fock_support_on_grid(self):
        # stored double weights bound the achievable cancellation at
        # sum(|w|) * eps, so the tolerance carries the weight scale
        for nbar, eta, detectors, clicks in herald_grid(TRACE_NBARS, min_clicks=1):
            state = herald_state(nbar, eta, detectors, clicks).state
            scale = float(np.abs(state.weights).sum())
            p = photon_number_distribution(state, clicks - 1)
            assert np.all(np.abs(p) < 1e-12 * max(1.0, scale))

    def test_fock_support_strict_at_moderate_weights(self):
        for nbar in (1.0, 2.0, 5.0):
            for detectors, clicks in ((2, 2), (3, 2), (4, 3)):
                p = photon_number_distribution(
                    herald_state(nbar, 0.9, detectors, clicks), clicks - 1
                )
                assert np.all(np.abs(p) < 1e-12)

    def test_more_detectors_concentrate_distribution(self):
        # with many detectors and fixed clicks the state approaches a Fock state
        def variance(state):
            return second_moment(state) - mean_photon(state) ** 2

        wide = herald_state(1.0, 0.9, 2, 2)
        narrow = herald_state(1.0, 0.9, 10, 2)
        assert variance(narrow) < variance(wide)

    def test_partial_sums_bounded(self):
        p = photon_number_distribution(herald_state(2.0, 0.9, 3, 2), 300)
        assert np.all(p >= -1e-12)
        assert math.fsum(p.tolist()) <= 1 + 1e-12

    def test_displaced_unsupported(self):
        with pytest.raises(UnsupportedStateError):
            photon_number_distribution(DisplacedThermal(1.0, 0.5), 10)


class TestFanoFactor:
    def test_thermal(self):
        for nbar in (0.2, 1.0, 4.0):
            assert fano_factor(tmsv_marginal(nbar)) == pytest.approx(1.0 + nbar, abs=1e-12)

    def test_coherent_is_poissonian(self):
        assert fano_factor(DisplacedThermal(2.3, 0.0)) == pytest.approx(1.0, abs=1e-12)

    def test_two_click_herald_is_sub_poissonian(self):
        assert fano_factor(herald_state(0.1, 0.9, 2, 2)) < 1.0

    def test_zero_mean_rejected(self):
        with pytest.raises(ValueError):
            fano_factor(tmsv_marginal(0.0))


class TestWignerSlice:
    def test_vacuum_peak(self):
        w = wigner_slice(tmsv_marginal(0.0), [0.0])
        assert w[0] == pytest.approx(1.0 / math.pi, abs=1e-15)

    def test_thermal_peak(self):
        w = wigner_slice(tmsv_marginal(1.0), [0.0])
        assert w[0] == pytest.approx(1.0 / (3.0 * math.pi), abs=1e-15)

    def test_two_click_herald_goes_negative(self):
        # negativity sits on a ring near |q| ~ 1, not at the origin
        q = np.linspace(0.0, 3.0, 301)
        w = wigner_slice(herald_state(1.0, 0.9, 2, 2), q)
        assert w.min() < -1e-3

    def test_radial_mass(self):
        # integrating the rotationally symmetric W over radius [0, 12]
        # recovers unit total mass
        for nbar, eta, detectors, clicks in herald_grid((0.5, 1.0, 2.0, 4.0), max_detectors=3):
            state = herald_state(nbar, eta, detectors, clicks).state
            weights, means = state.weights, state.means

            def radial(r):
                widths = 2.0 * means + 1.0
                return 2.0 * r * float(
                    (weights / widths) @ np.exp(-r * r / widths)
                )

            mass, _ = quad(radial, 0.0, 12.0, limit=200)
            assert abs(mass - 1.0) < 1e-6


class TestMixtureValidation:
    def test_trace_enforced(self):
        with pytest.raises(ValueError):
            SignedThermalMixture((ThermalComponent(0.7, 1.0),))

    def test_unphysical_mixture_rejected(self):
        # weights sum to one but p_0 = 1.5 - 0.5/2 < 0 is impossible; this
        # one makes p_1 negative: 1.5*thermal(0) - 0.5*thermal(1) has
        # p_1 = -0.5 * 0.25 < 0
        with pytest.raises(ValueError):
            SignedThermalMixture(
                (ThermalComponent(1.5, 0.0), ThermalComponent(-0.5, 1.0))
            )
