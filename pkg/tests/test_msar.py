from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regimetest.msar import (
    MSARSpec,
    RegimeParams,
    TransitionMatrix,
    ergodic_probabilities,
    filtered_mixture_components,
    four_state_transition,
    min_root_modulus,
    mixture_moments,
    simulate_chain,
    simulate_msar,
)


def batch_se(x: np.ndarray, stat, n_batches: int = 100) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of a statistic via batch means."""
    batches = np.array_split(np.asarray(x), n_batches)
    vals = np.array([stat(b) for b in batches])
    return float(stat(x)), float(vals.std(ddof=1) / np.sqrt(n_batches))


class TestTransitionMatrix:
    def test_off_diagonals(self):
        P = TransitionMatrix(0.9, 0.5)
        assert P.p12 == pytest.approx(0.1)
        assert P.p21 == pytest.approx(0.5)
        assert np.allclose(P.as_array().sum(axis=1), 1.0)

    def test_probability_bounds(self):
        with pytest.raises(ValueError):
            TransitionMatrix(1.2, 0.5)
        with pytest.raises(ValueError):
            TransitionMatrix(0.5, -0.1)

    @pytest.mark.parametrize(
        "p11,p22,ergodic",
        [(0.9, 0.9, True), (1.0, 0.9, False), (0.9, 1.0, False), (0.0, 0.0, False), (0.0, 0.5, True)],
    )
    def test_ergodicity_flag(self, p11, p22, ergodic):
        assert TransitionMatrix(p11, p22).is_ergodic is ergodic


class TestErgodicProbabilities:
    def test_symmetric_chain(self):
        assert ergodic_probabilities(TransitionMatrix(0.9, 0.9)) == pytest.approx((0.5, 0.5))

    def test_formula_value(self):
        # (1 - 0.5) / (2 - 0.9 - 0.5) = 5/6
        pi1, pi2 = ergodic_probabilities(TransitionMatrix(0.9, 0.5))
        assert pi1 == pytest.approx(5.0 / 6.0, rel=1e-12)
        assert pi2 == pytest.approx(1.0 / 6.0, rel=1e-12)

    def test_matches_long_run_frequencies(self):
        P = TransitionMatrix(0.9, 0.5)
        pi1, _ = ergodic_probabilities(P)
        states = simulate_chain(P, 200_000, np.random.default_rng(7))
        freq, se = batch_se(states == 1, np.mean)
        assert abs(freq - pi1) < 3 * se

    def test_non_ergodic_rejected(self):
        with pytest.raises(ValueError, match="p11"):
            ergodic_probabilities(TransitionMatrix(1.0, 0.9))
        with pytest.raises(ValueError, match="p11 \\+ p22"):
            ergodic_probabilities(TransitionMatrix(0.0, 0.0))

    @given(st.floats(0.0, 0.999), st.floats(0.001, 0.999))
    def test_sums_to_one(self, p11, p22):
        pi1, pi2 = ergodic_probabilities(TransitionMatrix(p11, p22))
        assert pi1 + pi2 == pytest.approx(1.0)
        assert 0.0 < pi1 < 1.0 and 0.0 < pi2 < 1.0


class TestSimulateChain:
    def test_transition_frequencies(self):
        P = TransitionMatrix(0.95, 0.95)
        states = simulate_chain(P, 100_000, np.random.default_rng(11))
        for regime, stay in ((1, P.p11), (2, P.p22)):
            here = states[:-1] == regime
            n = here.sum()
            stayed = (states[1:][here] == regime).mean()
            assert abs(stayed - stay) < 3 * np.sqrt(stay * (1 - stay) / n)

    def test_half_half_is_uniform(self):
        states = simulate_chain(TransitionMatrix(0.5, 0.5), 100_000, np.random.default_rng(3))
        freq = (states == 1).mean()
        assert abs(freq - 0.5) < 3 * np.sqrt(0.25 / len(states))

    def test_deterministic_given_seed(self):
        P = TransitionMatrix(0.8, 0.6)
        a = simulate_chain(P, 500, np.random.default_rng(5))
        b = simulate_chain(P, 500, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_non_ergodic_rejected(self):
        with pytest.raises(ValueError):
            simulate_chain(TransitionMatrix(1.0, 0.5), 10, np.random.default_rng(0))


class TestSimulateMSAR:
    def test_degenerate_noise_constant_path(self):
        spec = MSARSpec(RegimeParams(1.5, 1.5, 0.0, 0.0), TransitionMatrix(0.9, 0.9))
        y = simulate_msar(spec, 50, np.random.default_rng(0))
        assert np.all(y == 1.5)

    def test_ar1_autocorrelation(self):
        spec = MSARSpec(RegimeParams(0.0, 0.0, 1.0, 1.0), TransitionMatrix(0.9, 0.9), (0.9,))
        y = simulate_msar(spec, 50_000, np.random.default_rng(21))
        d = y - y.mean()
        r1 = (d[1:] * d[:-1]).mean() / (d**2).mean()
        # asymptotic se of the lag-1 autocorrelation of an AR(1)
        assert abs(r1 - 0.9) < 3 * np.sqrt((1 - 0.81) / len(y))

    def test_symmetric_mixture_has_zero_skewness(self):
        # p11 = p22 makes the weights equal, so the mean-separated mixture is symmetric
        spec = MSARSpec(RegimeParams(-1.0, 1.0, 1.0, 1.0), TransitionMatrix(0.5, 0.5))
        y = simulate_msar(spec, 200_000, np.random.default_rng(2))

        def skew(v):
            d = v - v.mean()
            return (d**3).mean() / (d**2).mean() ** 1.5

        value, se = batch_se(y, skew)
        assert abs(value) < 3 * se

    def test_nonstationary_phi_rejected(self):
        spec = MSARSpec(RegimeParams(0.0, 0.0, 1.0, 1.0), TransitionMatrix(0.9, 0.9), (1.0,))
        with pytest.raises(ValueError, match="stationary"):
            simulate_msar(spec, 100, np.random.default_rng(0))

    def test_linear_model_ignores_transition_matrix(self):
        # with equal regime parameters the path cannot depend on the chain
        regimes = RegimeParams(0.3, 0.3, 1.2, 1.2)
        a = simulate_msar(MSARSpec(regimes, TransitionMatrix(0.9, 0.9), (0.5,)), 400,
                          np.random.default_rng(9))
        b = simulate_msar(MSARSpec(regimes, TransitionMatrix(0.2, 0.7), (0.5,)), 400,
                          np.random.default_rng(9))
        assert np.array_equal(a, b)


class TestMixtureMoments:
    def test_single_component_collapse(self):
        mm = mixture_moments(RegimeParams(1.0, 1.0, 2.0, 2.0), 0.3)
        assert (mm.mean, mm.variance) == pytest.approx((1.0, 4.0))
        assert (mm.skewness, mm.excess_kurtosis) == (0.0, 0.0)

    def test_mean_separated_mixture(self):
        mm = mixture_moments(RegimeParams(-1.0, 1.0, 1.0, 1.0), 0.5)
        assert mm.mean == pytest.approx(0.0)
        assert mm.variance == pytest.approx(2.0)
        assert mm.skewness == pytest.approx(0.0)
        assert mm.excess_kurtosis == pytest.approx(-0.5)

    def test_scale_separated_mixture(self):
        mm = mixture_moments(RegimeParams(0.0, 0.0, 1.0, 2.0), 0.5)
        assert mm.mean == pytest.approx(0.0)
        assert mm.variance == pytest.approx(2.5)
        assert mm.skewness == pytest.approx(0.0)
        assert mm.excess_kurtosis == pytest.approx(1.08)

    def test_against_sampled_moments(self):
        # one asymmetric point; the randomized grid lives in the acceptance suite
        regimes = RegimeParams(0.0, 2.0, 1.0, 1.5)
        pi1 = 0.7
        mm = mixture_moments(regimes, pi1)
        rng = np.random.default_rng(17)
        n = 1_000_000
        ones = rng.uniform(size=n) < pi1
        draws = np.where(ones, regimes.mu1 + regimes.sigma1 * rng.standard_normal(n),
                         regimes.mu2 + regimes.sigma2 * rng.standard_normal(n))

        def skew(v):
            d = v - v.mean()
            return (d**3).mean() / (d**2).mean() ** 1.5

        def kurt(v):
            d = v - v.mean()
            return (d**4).mean() / (d**2).mean() ** 2 - 3.0

        for target, stat in ((mm.mean, np.mean), (mm.variance, lambda v: v.var()),
                             (mm.skewness, skew), (mm.excess_kurtosis, kurt)):
            value, se = batch_se(draws, stat)
            assert abs(value - target) < 3 * se

    def test_variance_dominates_component_average(self):
        regimes = RegimeParams(0.0, 3.0, 1.0, 2.0)
        for pi1 in (0.2, 0.5, 0.8):
            mm = mixture_moments(regimes, pi1)
            floor = pi1 * regimes.sigma1**2 + (1 - pi1) * regimes.sigma2**2
            assert mm.variance >= floor

    def test_degenerate_weight_rejected(self):
        with pytest.raises(ValueError):
            mixture_moments(RegimeParams(0.0, 1.0, 1.0, 1.0), 0.0)
        with pytest.raises(ValueError):
            mixture_moments(RegimeParams(0.0, 1.0, 1.0, 1.0), 1.0)


class TestFilteredMixtureComponents:
    @pytest.mark.parametrize(
        "mu1,mu2,phi,expected,n_distinct",
        [
            (0.0, 2.0, 0.0, (0.0, 2.0, 0.0, 2.0), 2),
            (0.0, 2.0, 1.0, (0.0, 2.0, -2.0, 0.0), 3),
            (0.0, 2.0, 0.5, (0.0, 2.0, -1.0, 1.0), 4),
        ],
    )
    def test_component_means(self, mu1, mu2, phi, expected, n_distinct):
        got = filtered_mixture_components(mu1, mu2, phi)
        assert got == pytest.approx(expected)
        assert len(set(got)) == n_distinct

    @given(
        st.floats(-5, 5), st.floats(-5, 5),
        st.floats(-0.99, 0.99).filter(lambda p: abs(p) > 1e-6),
    )
    @settings(max_examples=200)
    def test_distinct_count_cases(self, mu1, mu2, phi):
        if abs(mu1 - mu2) < 1e-6:
            return
        values = filtered_mixture_components(mu1, mu2, phi)
        assert len({round(v, 10) for v in values}) == 4


class TestFourStateTransition:
    def test_block_pattern(self):
        M = four_state_transition(TransitionMatrix(0.9, 0.5))
        expected = np.array(
            [[0.9, 0.1, 0.0, 0.0],
             [0.0, 0.0, 0.5, 0.5],
             [0.9, 0.1, 0.0, 0.0],
             [0.0, 0.0, 0.5, 0.5]]
        )
        np.testing.assert_allclose(M, expected)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_rows_sum_to_one(self, p11, p22):
        M = four_state_transition(TransitionMatrix(p11, p22))
        np.testing.assert_allclose(M.sum(axis=1), 1.0)

    def test_stationary_distribution_marginalizes_to_ergodic(self):
        P = TransitionMatrix(0.8, 0.6)
        M = four_state_transition(P)
        w, v = np.linalg.eig(M.T)
        stat = np.real(v[:, np.argmin(np.abs(w - 1.0))])
        stat = stat / stat.sum()
        pi1, _ = ergodic_probabilities(P)
        # states 1 and 3 carry current regime 1
        assert stat[0] + stat[2] == pytest.approx(pi1, rel=1e-10)


class TestMinRootModulus:
    def test_single_lag(self):
        assert min_root_modulus(np.array([0.5])) == pytest.approx(2.0)

    def test_unit_root_boundary(self):
        assert min_root_modulus(np.array([1.0])) == pytest.approx(1.0)

    def test_zero_polynomial_is_infinite(self):
        assert min_root_modulus(np.array([0.0, 0.0])) == np.inf
        assert min_root_modulus(np.array([])) == np.inf

    def test_known_ar4_value(self):
        # smallest root modulus of the reference output-growth AR(4) fit
        value = min_root_modulus(np.array([0.31, 0.13, -0.12, -0.09]))
        assert value == pytest.approx(1.50, abs=0.01)
