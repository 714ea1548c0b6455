import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from anisospec import reference
from anisospec.bessel import j0
from anisospec.errors import ConfigurationError, DegenerateVarianceError
from anisospec.estimators import (
    TestConfig,
    c0_hat,
    d1_efficient,
    d2_efficient,
    f4_hat,
    isotropy_test,
    normal_cdf,
    normal_quantile,
    normal_sf,
    spectral_core,
    tau_bc_from_core,
    tau_h0_biascorrected,
    tau_h0_plain,
)
from anisospec.fields import SpatialSample
from anisospec.spectral import FrequencyGrid, squared_norm_classes, tapered_periodogram, weighted_dft
from anisospec.windows import CosinePower, Rectangular, h_coefficient

COS3 = CosinePower(3)


def make_sample(n, lam, seed=0):
    rng = np.random.default_rng(seed)
    return SpatialSample(
        lam=lam,
        locations=rng.uniform(-lam / 2, lam / 2, size=(n, 2)),
        values=rng.standard_normal(n),
        n=n,
    )


class TestNormalHelpers:
    def test_quantile_reference_value(self):
        assert normal_quantile(0.95) == pytest.approx(1.6448536269514722, abs=1e-13)
        assert normal_quantile(0.5) == pytest.approx(0.0, abs=1e-14)

    def test_cdf_sf_complement(self):
        for x in (-3.0, -0.2, 0.0, 1.7, 6.0):
            assert normal_cdf(x) + normal_sf(x) == pytest.approx(1.0, abs=1e-15)
        # sf stays accurate deep in the tail where 1-cdf would cancel
        assert normal_sf(10.0) == pytest.approx(7.61985302416053e-24, rel=1e-10)

    def test_quantile_domain(self):
        with pytest.raises(ConfigurationError):
            normal_quantile(1.0)


class TestAgainstBruteForce:
    # small fast versions; the acceptance suite runs these wide
    def test_d1_matches_restricted_quadruple_sum(self):
        for seed in range(4):
            sample = make_sample(6, 5.0, seed=seed)
            grid = FrequencyGrid(a=2, lam=5.0)
            fast = d1_efficient(sample, COS3, grid)
            brute = reference.d1_brute(sample, COS3, grid, constraint="cyclic")
            assert fast == pytest.approx(brute, rel=1e-9)

    def test_d1_decomposes_over_index_sets(self):
        # cyclic tuples = pairwise-distinct tuples + coincidence corrections
        sample = make_sample(7, 5.0, seed=11)
        grid = FrequencyGrid(a=2, lam=5.0)
        total = d1_efficient(sample, COS3, grid)
        pairwise = reference.d1_naive(sample, COS3, grid)
        corrections = reference.d1_brute(
            sample, COS3, grid, constraint="cyclic_minus_pairwise"
        )
        assert total == pytest.approx(pairwise + corrections, rel=1e-9)

    def test_d2_matches_restricted_sextuple_sum(self):
        for seed in range(3):
            sample = make_sample(6, 5.0, seed=20 + seed)
            config = TestConfig(
                a=2, lam=5.0, a_r=4, lam_r=10.0, taper=COS3, truncate_c0=False
            )
            fast, cut = d2_efficient(sample, COS3, config)
            brute = reference.d2_brute(sample, COS3, config, constraint="halves")
            assert cut == 4
            assert fast == pytest.approx(brute, rel=1e-9)

    def test_variance_bracket_matches_exhaustive_sum(self):
        sample = make_sample(6, 5.0, seed=31)
        grid = FrequencyGrid(a=2, lam=5.0)
        core = spectral_core(sample, COS3, grid)
        brute = reference.quadruple_sums(sample, COS3, grid, constraint="cyclic")
        assert_allclose(
            core.quad_sum.ravel(),
            brute.real,
            rtol=1e-9,
            atol=1e-9 * np.abs(brute.real).max(),
        )


class TestEstimatorIdentities:
    def test_zero_field_gives_zero_estimates(self):
        sample = SpatialSample(
            lam=6.0,
            locations=np.random.default_rng(1).uniform(-3, 3, size=(8, 2)),
            values=np.zeros(8),
            n=8,
        )
        grid = FrequencyGrid(a=2, lam=6.0)
        assert d1_efficient(sample, COS3, grid) == 0.0
        assert f4_hat(sample, COS3, grid) == 0.0
        assert tau_h0_biascorrected(sample, COS3, grid) == 0.0

    def test_f4_hat_is_quartic_periodogram_sum(self):
        # definitionally (1/24)(2pi/lam)^2 sum of the f-normalized
        # periodogram ((2pi)^2 I) to the fourth power
        sample = make_sample(3, 4.0, seed=42)
        grid = FrequencyGrid(a=3, lam=4.0)
        field = weighted_dft(sample, COS3, grid)
        i_tilde = (2 * math.pi) ** 2 * tapered_periodogram(field)
        direct = (2 * math.pi / 4.0) ** 2 / 24.0 * np.sum(i_tilde**4)
        assert f4_hat(sample, COS3, grid) == pytest.approx(direct, rel=1e-12)

    def test_tau_plain_proportional_to_f4(self):
        sample = make_sample(12, 6.0, seed=43)
        grid = FrequencyGrid(a=3, lam=6.0)
        h0 = h_coefficient(COS3, (0, 0))
        ratio = sum(
            h_coefficient(COS3, (m1, m2)) ** 4
            for m1 in range(-3, 3)
            for m2 in range(-3, 3)
        ) / h0**4
        expected = 2 * (2 * math.pi) ** 2 * f4_hat(sample, COS3, grid) * ratio
        assert tau_h0_plain(sample, COS3, grid) == pytest.approx(expected, rel=1e-12)

    def test_c0_at_radius_zero(self):
        # J0(0) = 1 collapses c0 to the plain pair sum
        sample = make_sample(15, 6.0, seed=44)
        grid = FrequencyGrid(a=3, lam=6.0)
        core = spectral_core(sample, COS3, grid)
        h0 = h_coefficient(COS3, (0, 0))
        expected = np.sum(core.power - core.q_total) / (15**2 * h0)
        got = c0_hat(sample, COS3, grid, [0.0])
        assert got.shape == (1,)
        assert got[0] == pytest.approx(expected, rel=1e-12)

    def test_c0_matches_pairwise_definition(self):
        sample = make_sample(10, 5.0, seed=45)
        grid = FrequencyGrid(a=2, lam=5.0)
        pair = reference.pair_sums(sample, COS3, grid)  # sum_{j1 != j2} per k
        norms, inverse = squared_norm_classes(grid)
        h0 = h_coefficient(COS3, (0, 0))
        for r in (0.5, 1.7):
            expected = float(
                np.sum(pair.real * j0(r * norms[inverse]))
            ) / (sample.n**2 * h0)
            got = c0_hat(sample, COS3, grid, [r])[0]
            assert got == pytest.approx(expected, rel=1e-10)


class TestInvariances:
    CONFIG = TestConfig(a=6, lam=8.0, a_r=30, lam_r=30.0, taper=COS3)

    def test_scale_invariance_of_statistic(self):
        sample = make_sample(60, 8.0, seed=50)
        base = isotropy_test(sample, self.CONFIG)
        for c in (0.01, 7.3):
            scaled = SpatialSample(
                lam=8.0, locations=sample.locations, values=c * sample.values, n=60
            )
            res = isotropy_test(scaled, self.CONFIG)
            assert res.statistic == pytest.approx(base.statistic, rel=1e-9)
            assert res.d1_hat == pytest.approx(c**4 * base.d1_hat, rel=1e-9)

    def test_permutation_invariance(self):
        sample = make_sample(40, 8.0, seed=51)
        base = isotropy_test(sample, self.CONFIG)
        rng = np.random.default_rng(0)
        perm = rng.permutation(40)
        shuffled = SpatialSample(
            lam=8.0,
            locations=sample.locations[perm],
            values=sample.values[perm],
            n=40,
        )
        res = isotropy_test(shuffled, self.CONFIG)
        assert res.statistic == pytest.approx(base.statistic, rel=1e-12)
        assert res.d2_hat == pytest.approx(base.d2_hat, rel=1e-12)

    def test_truncation_never_increases_d2(self):
        for seed in range(5):
            sample = make_sample(30, 8.0, seed=60 + seed)
            on, cut_on = d2_efficient(sample, COS3, self.CONFIG)
            off, cut_off = d2_efficient(
                sample,
                COS3,
                TestConfig(a=6, lam=8.0, a_r=30, lam_r=30.0, truncate_c0=False),
            )
            assert 0 <= cut_on <= cut_off == 30
            assert on <= off + 1e-12


class TestIsotropyTest:
    def test_result_is_coherent(self):
        sample = make_sample(80, 10.0, seed=70)
        config = TestConfig(a=8, lam=10.0, a_r=40, lam_r=40.0)
        res = isotropy_test(sample, config)
        assert res.m_hat == pytest.approx(res.d1_hat - res.d2_hat, rel=1e-12)
        assert res.critical == pytest.approx(1.6448536269514722, abs=1e-12)
        assert res.reject == (res.statistic > res.critical)
        assert res.p_value == pytest.approx(normal_sf(res.statistic), abs=1e-15)
        assert res.tau_h0_sq_hat > 0
        assert 0 <= res.c0_truncation_index <= 40
        d = res.as_dict()
        assert d["statistic"] == res.statistic

    def test_truncation_index_none_when_disabled(self):
        sample = make_sample(40, 10.0, seed=71)
        config = TestConfig(a=4, lam=10.0, a_r=20, lam_r=20.0, truncate_c0=False)
        assert isotropy_test(sample, config).c0_truncation_index is None

    def test_rectangular_taper_refused(self):
        sample = make_sample(20, 10.0)
        config = TestConfig(a=4, lam=10.0, a_r=20, lam_r=20.0, taper=Rectangular())
        with pytest.raises(ConfigurationError, match="rectangular"):
            isotropy_test(sample, config)

    def test_low_order_cosine_refused(self):
        sample = make_sample(20, 10.0)
        config = TestConfig(a=4, lam=10.0, a_r=20, lam_r=20.0, taper=CosinePower(2))
        with pytest.raises(ConfigurationError, match="alpha"):
            isotropy_test(sample, config)

    def test_tiny_sample_refused(self):
        sample = make_sample(3, 10.0)
        config = TestConfig(a=4, lam=10.0, a_r=20, lam_r=20.0)
        with pytest.raises(ConfigurationError, match="at least 4"):
            isotropy_test(sample, config)

    def test_degenerate_variance_raises(self):
        sample = SpatialSample(
            lam=10.0,
            locations=np.random.default_rng(2).uniform(-5, 5, size=(12, 2)),
            values=np.zeros(12),
            n=12,
        )
        config = TestConfig(a=4, lam=10.0, a_r=20, lam_r=20.0)
        with pytest.raises(DegenerateVarianceError):
            isotropy_test(sample, config)

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            TestConfig(alpha_level=1.5)
        with pytest.raises(ConfigurationError):
            TestConfig(a=0)
        with pytest.raises(ConfigurationError):
            TestConfig(lam=-3.0)
