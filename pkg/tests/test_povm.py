import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qillum import (
    ClickMultiplex,
    DisplacedThermal,
    SignedThermalMixture,
    binomial,
    click_distribution,
    click_probability,
    herald_state,
    normal_ordered_moment,
    poisson_limit_reference,
    povm_fock_diagonal,
)
from qillum.errors import UnsupportedStateError


def pascal_table(n_max):
    """Independent oracle for binomial coefficients: Pascal's rule recurrence."""
    rows = [[1]]
    for n in range(1, n_max + 1):
        prev = rows[-1]
        rows.append(
            [1] + [prev[k - 1] + prev[k] for k in range(1, n)] + [1]
        )
    return rows


class TestBinomial:
    def test_small_values(self):
        assert binomial(4, 2) == 6
        assert binomial(10, 0) == 1

    def test_against_pascal_recurrence(self):
        table = pascal_table(64)
        assert binomial(64, 32) == table[64][32]
        for n in (7, 23, 64):
            for k in range(n + 1):
                assert binomial(n, k) == table[n][k]

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            binomial(3, 4)
        with pytest.raises(ValueError):
            binomial(65, 1)
        with pytest.raises(ValueError):
            binomial(-1, 0)


class TestNormalOrderedMoment:
    def test_vacuum_gives_unit_moment(self):
        assert normal_ordered_moment(SignedThermalMixture.thermal(0.0), 0.9) == 1.0

    def test_thermal_closed_form(self):
        # geometric sum of (1-s)^n over the Bose-Einstein distribution
        assert normal_ordered_moment(SignedThermalMixture.thermal(1.0), 1.0) == pytest.approx(0.5, abs=1e-15)

    def test_displaced_vs_fock_sum(self):
        # brute force: coherent |alpha|^2 = 1, sum (1-s)^n e^-1 / n!
        s = 1.0
        brute = math.fsum((1 - s) ** n * math.exp(-1.0) / math.factorial(n) for n in range(80))
        assert normal_ordered_moment(DisplacedThermal(1.0, 0.0), s) == pytest.approx(brute, abs=1e-14)
        assert normal_ordered_moment(DisplacedThermal(1.0, 0.0), s) == pytest.approx(math.exp(-1.0), abs=1e-14)

    def test_domain(self):
        with pytest.raises(ValueError):
            normal_ordered_moment(SignedThermalMixture.thermal(1.0), 1.5)


class TestClickProbability:
    def test_vacuum_never_clicks(self):
        mux = ClickMultiplex(1, 0.7)
        assert click_probability(mux, 1, SignedThermalMixture.thermal(0.0)) == 0.0

    def test_single_detector_thermal_closed_form(self):
        mux = ClickMultiplex(1, 0.95)
        got = click_probability(mux, 1, SignedThermalMixture.thermal(1.0))
        assert got == pytest.approx(1.0 - 1.0 / 1.95, abs=1e-15)

    def test_multiplex_value_frozen(self):
        # exact rational value: 6 * (10/19 - 80/67 + 20/29) = 4860/36917
        mux = ClickMultiplex(4, 0.9)
        got = click_probability(mux, 2, SignedThermalMixture.thermal(1.0))
        assert got == pytest.approx(4860 / 36917, abs=1e-14)

    def test_outcome_validation(self):
        with pytest.raises(ValueError):
            click_probability(ClickMultiplex(2, 0.9), 3, SignedThermalMixture.thermal(1.0))


class TestClickDistribution:
    def test_vacuum_completeness(self):
        dist = click_distribution(ClickMultiplex(2, 0.8), SignedThermalMixture.thermal(0.0))
        assert np.allclose(dist, [1.0, 0.0, 0.0])

    def test_single_detector_complement(self):
        dist = click_distribution(ClickMultiplex(1, 0.95), SignedThermalMixture.thermal(1.0))
        assert dist == pytest.approx([0.512821, 0.487179], abs=1e-6)

    def test_high_mean_sums_to_one(self):
        dist = click_distribution(ClickMultiplex(4, 0.9), SignedThermalMixture.thermal(5.0))
        assert abs(math.fsum(dist.tolist()) - 1.0) < 1e-12

    @pytest.mark.parametrize("detectors", [1, 2, 4, 8])
    @pytest.mark.parametrize("eta", [0.0, 0.3, 0.9, 1.0])
    def test_completeness_on_fixed_state_set(self, detectors, eta):
        states = [
            SignedThermalMixture.thermal(0.0),
            SignedThermalMixture.thermal(1.0),
            SignedThermalMixture.thermal(5.0),
            herald_state(1.0, 0.9, 2, 1).state,
            herald_state(2.0, 0.9, 3, 3).state,
            DisplacedThermal(1.5, 0.7),
            DisplacedThermal(0.3, 0.0),
        ]
        mux = ClickMultiplex(detectors, eta)
        for state in states:
            dist = click_distribution(mux, state)
            assert abs(math.fsum(dist.tolist()) - 1.0) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(
        detectors=st.integers(min_value=1, max_value=8),
        eta=st.floats(min_value=0.0, max_value=1.0),
        nbar=st.floats(min_value=0.0, max_value=10.0),
    )
    def test_completeness_property(self, detectors, eta, nbar):
        dist = click_distribution(ClickMultiplex(detectors, eta), SignedThermalMixture.thermal(nbar))
        assert abs(math.fsum(dist.tolist()) - 1.0) < 1e-12


class TestPoissonLimit:
    def test_no_click_closed_form(self):
        for m, eta in [(0.5, 0.9), (2.0, 0.5)]:
            got = poisson_limit_reference(0, eta, SignedThermalMixture.thermal(m))
            assert got == pytest.approx(1.0 / (1.0 + eta * m), abs=1e-15)

    def test_vacuum(self):
        assert poisson_limit_reference(0, 0.9, SignedThermalMixture.thermal(0.0)) == 1.0

    def test_one_click_thermal_one(self):
        # only the n = 1 Fock term survives at s = 1: p_1 = 1/4
        got = poisson_limit_reference(1, 1.0, SignedThermalMixture.thermal(1.0))
        assert got == pytest.approx(0.25, abs=1e-15)

    def test_unsupported_state(self):
        with pytest.raises(UnsupportedStateError):
            poisson_limit_reference(0, 0.9, DisplacedThermal(1.0, 0.0))

    @pytest.mark.parametrize("nbar", [0.5, 1.0, 5.0])
    @pytest.mark.parametrize("eta", [0.5, 1.0])
    def test_large_multiplex_converges(self, nbar, eta):
        mux = ClickMultiplex(10_000, eta)
        state = SignedThermalMixture.thermal(nbar)
        for k in range(5):
            finite = click_probability(mux, k, state)
            limit = poisson_limit_reference(k, eta, state)
            assert abs(finite - limit) < 1e-3


class TestFockDiagonal:
    def test_single_detector_no_click(self):
        eta = 0.8
        coeffs = povm_fock_diagonal(1, 0, eta, 12)
        assert np.allclose(coeffs, (1 - eta) ** np.arange(13), atol=1e-15)

    def test_fewer_photons_than_clicks_is_exactly_zero(self):
        coeffs = povm_fock_diagonal(2, 2, 0.9, 10)
        assert coeffs[0] == 0.0 and coeffs[1] == 0.0

    def test_one_photon_on_two_perfect_detectors(self):
        # evaluate the alternating sum by hand: 2 * [0.5^1 - 0^1] = 1
        coeffs = povm_fock_diagonal(2, 1, 1.0, 4)
        assert coeffs[1] == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("detectors,clicks", [(2, 1), (3, 2), (4, 4), (4, 2)])
    def test_fock_support(self, detectors, clicks):
        coeffs = povm_fock_diagonal(detectors, clicks, 0.9, 30)
        assert np.all(coeffs[:clicks] == 0.0)
        assert np.all(coeffs >= 0.0) and np.all(coeffs <= 1.0)

    def test_single_detector_reduction_termwise(self):
        # Pr on a truncated state must reproduce the two N = 1 Fock series;
        # at n_max = 300 the thermal tail is ~1e-75 and cannot matter.
        eta, nbar, n_max = 0.7, 1.3, 300
        n = np.arange(n_max + 1)
        p = (nbar / (1 + nbar)) ** n / (1 + nbar)
        no_click = math.fsum(((1 - eta) ** n * p).tolist())
        click = math.fsum(((1 - (1 - eta) ** n) * p).tolist())
        mux = ClickMultiplex(1, eta)
        state = SignedThermalMixture.thermal(nbar)
        assert click_probability(mux, 0, state) == pytest.approx(no_click, abs=1e-12)
        assert click_probability(mux, 1, state) == pytest.approx(click, abs=1e-12)
