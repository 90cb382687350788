import numpy as np
import pytest

from tailgraph import (
    DataError,
    DegenerateMarginError,
    DimensionError,
    InsufficientExceedancesError,
    TailSample,
    ar1_matrix,
    construct,
    estimate_mass,
    estimate_sigma_pair,
    estimate_tpdm,
    marginal_transform,
    polar2,
    sample_noise,
    softplus_inv,
    solve_delta,
)
from tailgraph.tpdm import _preimage_mean


class TestSolveDelta:
    def test_reproduces_known_shift(self):
        assert solve_delta() == pytest.approx(0.9352, abs=5e-4)

    def test_shiftless_preimage_mean_positive(self):
        assert _preimage_mean(0.0) > 0.0

    def test_monte_carlo_centering(self):
        delta = solve_delta()
        rng = np.random.default_rng(17)
        x = 1.0 / np.sqrt(1.0 - rng.random(10 ** 6)) - delta
        assert abs(float(np.mean(softplus_inv(x)))) < 3e-3


class TestMarginalTransform:
    def test_three_point_column(self):
        delta = solve_delta()
        sample = marginal_transform(np.array([[1.0], [2.0], [3.0]]))
        expected = np.array([1.0 / np.sqrt(0.75), 1.0 / np.sqrt(0.5), 2.0]) - delta
        np.testing.assert_allclose(sample.data[:, 0], expected, atol=1e-12)
        assert sample.margin == "shifted-pareto"
        assert sample.delta == pytest.approx(delta)

    def test_preserves_order(self):
        raw = np.random.default_rng(1).normal(size=(500, 1))
        out = marginal_transform(raw).data[:, 0]
        assert np.array_equal(np.argsort(raw[:, 0]), np.argsort(out))

    def test_upper_quantile_matches_pareto(self):
        delta = solve_delta()
        raw = np.random.default_rng(11).gamma(2.0, 3.0, (10 ** 5, 1))
        q99 = np.quantile(marginal_transform(raw).data[:, 0], 0.99)
        assert q99 == pytest.approx(10.0 - delta, rel=0.05)

    def test_all_outputs_above_support_floor(self):
        delta = solve_delta()
        raw = np.random.default_rng(2).normal(size=(200, 3))
        out = marginal_transform(raw)
        assert out.data.min() > 1.0 - delta > 0.0

    def test_ties_get_average_ranks(self):
        sample = marginal_transform(np.array([[1.0], [1.0], [2.0], [3.0]]))
        assert sample.data[0, 0] == sample.data[1, 0]

    def test_constant_column_rejected(self):
        with pytest.raises(DegenerateMarginError):
            marginal_transform(np.ones((50, 2)))

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            marginal_transform(np.array([[1.0], [np.inf]]))


class TestPolar2:
    def test_three_four_five(self):
        r, w = polar2(np.array([3.0]), np.array([4.0]))
        assert r[0] == pytest.approx(5.0)
        np.testing.assert_allclose(w[0], [0.6, 0.8])

    def test_diagonal_direction(self):
        for a in (0.1, 7.0):
            _, w = polar2(np.array([a]), np.array([a]))
            np.testing.assert_allclose(w[0], [1 / np.sqrt(2)] * 2, atol=1e-15)

    def test_unit_norm(self):
        rng = np.random.default_rng(0)
        _, w = polar2(rng.random(100) + 0.01, rng.random(100) + 0.01)
        np.testing.assert_allclose(np.linalg.norm(w, axis=1), 1.0, atol=1e-12)

    def test_zero_rows_skipped_with_warning(self):
        with pytest.warns(UserWarning, match="zero observations"):
            r, w = polar2(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
        assert r.shape == (1,)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            polar2(np.ones(3), np.ones(4))


class TestEstimateSigmaPair:
    def test_comonotone_is_exactly_one(self):
        x = 1.0 / np.sqrt(1.0 - np.random.default_rng(0).random(2000))
        sigma, k, angles = estimate_sigma_pair(x, x, 0.95, mass=2.0)
        assert sigma == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(angles, 1 / np.sqrt(2), atol=1e-12)

    def test_independent_pairs_bias_decays_with_threshold(self):
        # On the positive orthant the angular products of independent pairs
        # stay ~0.1 per unit mass at moderate thresholds and vanish only as
        # the threshold grows; both regimes are pinned here.
        delta = solve_delta()
        u = np.random.default_rng(0).random((10 ** 6, 2))
        x = 1.0 / np.sqrt(1.0 - u) - delta
        s95, _, _ = estimate_sigma_pair(x[:10 ** 5, 0], x[:10 ** 5, 1], 0.95, mass=2.0)
        s999, _, _ = estimate_sigma_pair(x[:, 0], x[:, 1], 0.999, mass=2.0)
        assert 0.1 < s95 < 0.3
        assert abs(s999) < 0.1 < abs(s95)

    def test_ar1_lag2_entry(self):
        A = ar1_matrix(0.7, 4)
        X = construct(A, sample_noise(4, 10 ** 5, seed=0))
        sigma, k, _ = estimate_sigma_pair(X[:, 1], X[:, 3], 0.95, mass="estimate")
        assert sigma == pytest.approx(0.7301, abs=0.1)
        assert k >= 4000

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        x, y = rng.pareto(2, 1000) + 1, rng.pareto(2, 1000) + 1
        a, _, _ = estimate_sigma_pair(x, y, 0.9, mass=2.0)
        b, _, _ = estimate_sigma_pair(y, x, 0.9, mass=2.0)
        assert a == b

    def test_too_few_exceedances(self):
        x = 1.0 / np.sqrt(1.0 - np.random.default_rng(0).random(60))
        with pytest.raises(InsufficientExceedancesError):
            estimate_sigma_pair(x, x, 0.95)

    def test_too_short(self):
        with pytest.raises(DataError):
            estimate_sigma_pair(np.ones(10), np.ones(10))


class TestEstimateMass:
    def test_exact_algebra(self):
        # with r_(k) = sqrt(n/k) the estimate collapses to 1
        n, k = 100, 5
        r = np.full(n, 0.5)
        r[-k:] = np.sqrt(n / k)
        assert estimate_mass(r, k, n) == pytest.approx(1.0, abs=1e-12)

    def test_unit_scale_bivariate(self):
        u = np.random.default_rng(5).random((10 ** 5, 2))
        x = 1.0 / np.sqrt(1.0 - u)  # exactly unit-scale margins
        r = np.hypot(x[:, 0], x[:, 1])
        k = int((r > np.quantile(r, 0.95)).sum())
        assert estimate_mass(r, k, 10 ** 5) == pytest.approx(2.0, abs=0.2)

    def test_scale_equivariance(self):
        r = np.random.default_rng(1).random(500) + 0.5
        assert estimate_mass(2 * r, 50, 500) == pytest.approx(4 * estimate_mass(r, 50, 500))


class TestEstimateTpdm:
    def test_comonotone_pairwise(self):
        x = 1.0 / np.sqrt(1.0 - np.random.default_rng(3).random(5000))
        sample = TailSample(np.column_stack([x, x]), margin="shifted-pareto")
        S = estimate_tpdm(sample, 0.95, mode="pairwise", mass="fixed")
        np.testing.assert_allclose(S.entries, np.ones((2, 2)), atol=1e-12)

    def test_symmetric_output(self):
        X = construct(ar1_matrix(0.5, 4), sample_noise(4, 3000, seed=9))
        S = estimate_tpdm(TailSample(X, margin="raw"), 0.9, mode="pairwise", mass="estimate")
        np.testing.assert_array_equal(S.entries, S.entries.T)
        assert S.kind == "estimated"
        assert S.k_used.min() >= 10

    def test_row_permutation_invariance(self):
        X = construct(ar1_matrix(0.5, 3), sample_noise(3, 2000, seed=10))
        S1 = estimate_tpdm(TailSample(X, margin="raw"), 0.9, mode="global", mass="estimate")
        perm = np.random.default_rng(0).permutation(2000)
        S2 = estimate_tpdm(TailSample(X[perm], margin="raw"), 0.9, mode="global", mass="estimate")
        np.testing.assert_allclose(S1.entries, S2.entries, atol=1e-12)

    def test_global_trace_equals_mass(self):
        X = construct(ar1_matrix(0.7, 4), sample_noise(4, 5000, seed=11))
        S = estimate_tpdm(TailSample(X, margin="raw"), 0.95, mode="global", mass="estimate")
        assert np.trace(S.entries) == pytest.approx(S.mass, rel=1e-12)

    def test_global_fixed_mass_uses_dimension(self):
        x = 1.0 / np.sqrt(1.0 - np.random.default_rng(3).random((4000, 2)))
        S = estimate_tpdm(TailSample(x, margin="shifted-pareto"), 0.9, mode="global", mass="fixed")
        assert np.trace(S.entries) == pytest.approx(2.0, rel=1e-12)

    def test_unknown_mode(self):
        X = np.ones((100, 2)) + np.random.default_rng(0).random((100, 2))
        with pytest.raises(Exception):
            estimate_tpdm(TailSample(X), mode="sideways")

    def test_insufficient_exceedances_propagates(self):
        X = 1.0 + np.random.default_rng(0).random((60, 2))
        with pytest.raises(InsufficientExceedancesError):
            estimate_tpdm(TailSample(X), 0.95, mode="pairwise")

    def test_inverse_of_estimate_is_near_tridiagonal(self):
        from tailgraph import invert_ipm

        X = construct(ar1_matrix(0.7, 4), sample_noise(4, 10 ** 5, seed=400))
        S = estimate_tpdm(TailSample(X, margin="raw"), 0.98, mode="global", mass="estimate")
        Q = invert_ipm(S).entries
        off = max(abs(Q[0, 2]), abs(Q[0, 3]), abs(Q[1, 3]))
        assert off < 0.3
