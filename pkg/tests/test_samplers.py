"""Sampler laws against their closed-form oracles.

Monte Carlo assertions use 3-sigma bands around exact moments and
transforms; Gamma-measure routes get an additional linear allowance
for the documented truncation threshold eps.
"""

import math

import numpy as np
import pytest
from scipy import stats

from polyasum import (AtomicMeasure, MixingMeasure, PointConfiguration,
                      PolyaParams, ReferenceMeasure, RngSeed, TestFunction,
                      Window, laplace_polya, logseries_mean, nb_pmf_table,
                      sample_gamma_measure, sample_gamma_measure_batch,
                      sample_mixed, sample_mixed_batch, sample_poisson,
                      sample_poisson_batch, sample_polya_cox,
                      sample_polya_cox_batch, sample_polya_direct,
                      sample_polya_direct_batch, sample_posterior,
                      sample_posterior_batch)
from polyasum.transforms import ParameterError, empirical_laplace_from_values

EPS = 1e-6
EPS_SLACK = 10 * EPS


@pytest.fixture(scope="module")
def gamma_batch_large():
    """One shared 1e5-replica Gamma-measure batch (m=2, z=0.5)."""
    w = Window.interval(0.0, 1.0, 4)
    params = PolyaParams(0.5, ReferenceMeasure.uniform(w, 2.0))
    batch = sample_gamma_measure_batch(params, EPS, 100_000, RngSeed(1001))
    return params, batch


class TestPoisson:
    def test_zero_intensity_always_empty(self, window4):
        rho = ReferenceMeasure(window4, np.zeros(4))
        for seed in range(5):
            assert sample_poisson(rho, RngSeed(seed)).points == ()

    def test_atom_multiplicity_mean(self, window4):
        intensity = AtomicMeasure(window4, (((0.5,), 2.0),))
        batch = sample_poisson_batch(intensity, 100_000, RngSeed(2))
        counts = batch.counts()
        se = counts.std(ddof=1) / math.sqrt(counts.size)
        assert abs(counts.mean() - 2.0) < 3 * se

    def test_diffuse_moments(self, window4):
        rho = ReferenceMeasure.uniform(window4, 3.0)
        batch = sample_poisson_batch(rho, 100_000, RngSeed(3))
        counts = batch.counts()
        n = counts.size
        se_mean = counts.std(ddof=1) / math.sqrt(n)
        assert abs(counts.mean() - 3.0) < 3 * se_mean
        # Poisson variance equals the mean; 3-sigma band via the
        # large-sample variance of the sample variance
        var = counts.var(ddof=1)
        se_var = math.sqrt((stats.moment(counts, 4)
                            - (n - 3) / (n - 1) * var**2) / n)
        assert abs(var - 3.0) < 3 * se_var

    def test_diffuse_points_are_simple(self, window4):
        rho = ReferenceMeasure.uniform(window4, 3.0)
        batch = sample_poisson_batch(rho, 2000, RngSeed(4))
        assert np.all(batch.mult == 1)

    def test_rejects_wrong_type(self):
        with pytest.raises(TypeError):
            sample_poisson(3.0, RngSeed(0))


class TestGammaMeasure:
    def test_mass_mean(self, gamma_batch_large):
        params, batch = gamma_batch_large
        masses = batch.masses()
        se = masses.std(ddof=1) / math.sqrt(masses.size)
        target = 2.0 * 0.5 / 0.5  # m z/(1-z)
        assert abs(masses.mean() - target) < 3 * se + EPS

    def test_mass_distribution_is_gamma(self, gamma_batch_large):
        # window mass m with rate a = (1-z)/z: total mass ~ Gamma(m, a)
        params, batch = gamma_batch_large
        ks = stats.kstest(batch.masses(), "gamma", args=(2.0, 0.0, 1.0))
        assert ks.statistic < 0.01

    def test_huge_eps_single_remainder_atom(self, window4):
        params = PolyaParams(0.5, ReferenceMeasure.uniform(window4, 2.0))
        mean_total = 2.0  # m/a
        for seed in range(5):
            kappa = sample_gamma_measure(params, 10.0, RngSeed(seed))
            assert len(kappa.atoms) == 1
            assert kappa.total_mass <= mean_total + 1e-12

    def test_z_zero_gives_zero_measure(self, window4, rho_mass2):
        kappa = sample_gamma_measure(PolyaParams(0.0, rho_mass2), EPS,
                                     RngSeed(0))
        assert kappa.atoms == ()

    def test_eps_must_be_positive(self, rho_mass2):
        with pytest.raises(ParameterError):
            sample_gamma_measure(PolyaParams(0.5, rho_mass2), 0.0, RngSeed(0))

    def test_atomic_reference_mass_handled_proportionally(self):
        w = Window.interval(0.0, 1.0, 2)
        rho = ReferenceMeasure(w, np.array([0.5, 0.0]), (((0.75,), 1.5),))
        params = PolyaParams(0.5, rho)
        batch = sample_gamma_measure_batch(params, EPS, 20_000, RngSeed(9))
        masses = batch.masses()
        se = masses.std(ddof=1) / math.sqrt(masses.size)
        assert abs(masses.mean() - 2.0) < 3 * se + EPS
        # mass at the reference atom's cell carries its share
        f = TestFunction.indicator(w, [1])
        at_atom = batch.zeta(f)
        se_atom = at_atom.std(ddof=1) / math.sqrt(at_atom.size)
        assert abs(at_atom.mean() - 1.5) < 3 * se_atom + EPS


class TestPolyaDirect:
    def test_z_zero_always_empty(self, rho_mass2):
        for seed in range(5):
            mu = sample_polya_direct(PolyaParams(0.0, rho_mass2),
                                     RngSeed(seed))
            assert mu.points == ()

    def test_void_probability(self, window4):
        params = PolyaParams(0.5, ReferenceMeasure.uniform(window4, 1.0))
        batch = sample_polya_direct_batch(params, 100_000, RngSeed(11))
        empty = (batch.counts() == 0).astype(float)
        se = empty.std(ddof=1) / math.sqrt(empty.size)
        assert abs(empty.mean() - 0.5) < 3 * se

    def test_distinct_count_is_poisson(self, window4):
        # the cluster count is exactly Poisson(-log(1-z) m): chi-square
        # goodness of fit on 1e5 replicas
        params = PolyaParams(0.5, ReferenceMeasure.uniform(window4, 2.0))
        batch = sample_polya_direct_batch(params, 100_000, RngSeed(12))
        distinct = batch.distinct_counts()
        lam = -math.log1p(-0.5) * 2.0
        kmax = int(stats.poisson.ppf(1 - 1e-6, lam))
        observed = np.bincount(np.minimum(distinct, kmax),
                               minlength=kmax + 1).astype(float)
        expected = stats.poisson.pmf(np.arange(kmax + 1), lam)
        expected[-1] = 1.0 - expected[:-1].sum()
        expected *= distinct.size
        keep = expected >= 5
        gof = stats.chisquare(observed[keep],
                              expected[keep] * observed[keep].sum()
                              / expected[keep].sum())
        assert gof.pvalue > 0.001

    def test_multiplicity_law_mean(self, window4):
        params = PolyaParams(0.5, ReferenceMeasure.uniform(window4, 2.0))
        batch = sample_polya_direct_batch(params, 50_000, RngSeed(13))
        mult = batch.mult.astype(float)
        se = mult.std(ddof=1) / math.sqrt(mult.size)
        assert abs(mult.mean() - logseries_mean(0.5)) < 3 * se

    def test_independent_increments(self, window4):
        params = PolyaParams(0.5, ReferenceMeasure.uniform(window4, 2.0))
        batch = sample_polya_direct_batch(params, 50_000, RngSeed(14))
        left = batch.counts([0, 1]).astype(float)
        right = batch.counts([2, 3]).astype(float)
        corr = np.corrcoef(left, right)[0, 1]
        assert abs(corr) < 3.0 / math.sqrt(left.size)

    def test_atomic_reference_merges_multiplicities(self):
        w = Window.interval(0.0, 1.0, 1)
        rho = ReferenceMeasure(w, np.array([0.1]), (((0.5,), 5.0),))
        mu = sample_polya_direct(PolyaParams(0.8, rho), RngSeed(15))
        # clusters landing on the reference atom must merge into one
        # located point; the invariant is simply a valid configuration
        assert len({loc for loc, _ in mu.points}) == len(mu.points)


class TestPolyaCox:
    def test_count_mean(self, window4):
        params = PolyaParams(0.5, ReferenceMeasure.uniform(window4, 2.0))
        batch = sample_polya_cox_batch(params, EPS, 30_000, RngSeed(21))
        counts = batch.counts()
        se = counts.std(ddof=1) / math.sqrt(counts.size)
        assert abs(counts.mean() - 2.0) < 3 * se + EPS_SLACK

    def test_distinct_mean_matches_thinned_jump_intensity(self, window4):
        # jumps of size r are hit at all with probability 1 - e^-r;
        # integrating against the Levy density gives -log(1-z) m
        params = PolyaParams(0.5, ReferenceMeasure.uniform(window4, 2.0))
        batch = sample_polya_cox_batch(params, EPS, 30_000, RngSeed(22))
        distinct = batch.distinct_counts().astype(float)
        se = distinct.std(ddof=1) / math.sqrt(distinct.size)
        target = -math.log1p(-0.5) * 2.0
        assert abs(distinct.mean() - target) < 3 * se + EPS_SLACK

    def test_empirical_laplace_matches_closed_form(self, window4):
        params = PolyaParams(0.5, ReferenceMeasure.uniform(window4, 2.0))
        batch = sample_polya_cox_batch(params, EPS, 30_000, RngSeed(23))
        rng = np.random.default_rng(77)
        for _ in range(20):
            g = TestFunction(window4, rng.uniform(0.0, 2.5, 4))
            est, se = empirical_laplace_from_values(batch.zeta(g))
            exact = laplace_polya(g, 0.5, params.rho).value
            assert abs(est - exact) < 3 * se + EPS_SLACK

    def test_requires_z_in_open_interval(self, rho_mass2):
        with pytest.raises(ParameterError):
            sample_polya_cox(PolyaParams(0.0, rho_mass2), EPS, RngSeed(0))


class TestDirectRouteLaplace:
    def test_twenty_random_test_functions(self, window4):
        params = PolyaParams(0.5, ReferenceMeasure.uniform(window4, 2.0))
        batch = sample_polya_direct_batch(params, 50_000, RngSeed(31))
        rng = np.random.default_rng(88)
        for _ in range(20):
            g = TestFunction(window4, rng.uniform(0.0, 2.5, 4))
            est, se = empirical_laplace_from_values(batch.zeta(g))
            exact = laplace_polya(g, 0.5, params.rho).value
            assert abs(est - exact) < 3 * se

    def test_void_probability_through_object_samples(self, window4):
        # e^-zeta with an infinite test function is the void indicator
        from polyasum import empirical_laplace
        params = PolyaParams(0.5, ReferenceMeasure.uniform(window4, 1.0))
        samples = sample_polya_direct_batch(
            params, 10_000, RngSeed(32)).to_configurations()
        f_inf = TestFunction.constant(window4, np.inf)
        est, se = empirical_laplace(samples, f_inf)
        assert abs(est - 0.5) < 3 * se


class TestPosterior:
    def test_empty_observation_is_plain_gamma_draw(self, window4, rho_mass2):
        params = PolyaParams(0.5, rho_mass2)
        mu = PointConfiguration(window4, ())
        a = sample_posterior(mu, params, EPS, RngSeed(41))
        z_post = 0.5 / 1.5
        b = sample_gamma_measure(PolyaParams(z_post, rho_mass2), EPS,
                                 RngSeed(41))
        assert a == b

    def test_observed_point_weight_mean(self, window4, rho_mass2):
        # weight at an observed point of multiplicity k has mean
        # k/(a+1) = z k
        params = PolyaParams(0.5, rho_mass2)
        loc = (0.375,)
        mu = PointConfiguration(window4, ((loc, 3),))
        batch = sample_posterior_batch(mu, params, EPS, 100_000, RngSeed(42))
        at_point = np.isclose(batch.coords[:, 0], loc[0], rtol=0, atol=0)
        weights = batch.weight[at_point]
        assert weights.size == 100_000
        se = weights.std(ddof=1) / math.sqrt(weights.size)
        assert abs(weights.mean() - 1.5) < 3 * se

    def test_diffuse_cell_mean(self, window4, rho_mass2):
        params = PolyaParams(0.5, rho_mass2)
        mu = PointConfiguration(window4, ())
        batch = sample_posterior_batch(mu, params, EPS, 50_000, RngSeed(43))
        cell_mass = batch.zeta(TestFunction.indicator(window4, [2]))
        se = cell_mass.std(ddof=1) / math.sqrt(cell_mass.size)
        assert abs(cell_mass.mean() - 0.5 * 0.5) < 3 * se + EPS_SLACK


class TestMixed:
    def test_degenerate_mixture_matches_plain_polya(self, window4):
        rho0 = ReferenceMeasure.uniform(window4, 2.0)
        mixing = MixingMeasure(rho0, ((0.5, 1.0, 1.0),))
        batch, z_lat, w_lat = sample_mixed_batch(mixing, "direct", EPS,
                                                 50_000, RngSeed(51))
        assert np.all(z_lat == 0.5) and np.all(w_lat == 1.0)
        table = nb_pmf_table(2.0, 0.5)
        counts = batch.counts()
        emp = np.bincount(counts, minlength=len(table)).astype(float)
        emp /= counts.size
        kmax = min(len(table), emp.size)
        tv = 0.5 * np.abs(emp[:kmax] - table[:kmax]).sum()
        assert tv < 0.01

    def test_two_atom_mixture_laplace(self, window4):
        rho0 = ReferenceMeasure.uniform(window4, 2.0)
        mixing = MixingMeasure(rho0, ((0.3, 1.0, 0.5), (0.6, 1.0, 0.5)))
        batch, _, _ = sample_mixed_batch(mixing, "direct", EPS, 50_000,
                                         RngSeed(52))
        rng = np.random.default_rng(5)
        for _ in range(5):
            g = TestFunction(window4, rng.uniform(0.0, 2.0, 4))
            est, se = empirical_laplace_from_values(batch.zeta(g))
            exact = 0.5 * laplace_polya(g, 0.3, rho0).value \
                + 0.5 * laplace_polya(g, 0.6, rho0).value
            assert abs(est - exact) < 3 * se

    def test_degenerate_zero_atom_gives_empty(self, window4):
        rho0 = ReferenceMeasure.uniform(window4, 2.0)
        mixing = MixingMeasure(rho0, ((0.0, 0.0, 1.0),))
        mu, (z, w) = sample_mixed(mixing, "direct", EPS, RngSeed(53))
        assert mu.points == () and z == 0.0 and w == 0.0

    def test_latents_reported_per_replica(self, window4):
        rho0 = ReferenceMeasure.uniform(window4, 1.0)
        mixing = MixingMeasure(rho0, ((0.3, 1.0, 0.5), (0.7, 2.0, 0.5)))
        _, z_lat, w_lat = sample_mixed_batch(mixing, "direct", EPS, 1000,
                                             RngSeed(54))
        assert set(zip(z_lat.tolist(), w_lat.tolist())) \
            <= {(0.3, 1.0), (0.7, 2.0)}

    def test_probabilities_must_sum_to_one(self, window4, rho_mass2):
        with pytest.raises(ParameterError):
            MixingMeasure(rho_mass2, ((0.3, 1.0, 0.6), (0.6, 1.0, 0.6)))


class TestReproducibility:
    def test_same_seed_same_samples(self, window4, rho_mass2):
        params = PolyaParams(0.5, rho_mass2)
        a = sample_polya_direct(params, RngSeed(7, stream=3))
        b = sample_polya_direct(params, RngSeed(7, stream=3))
        assert a == b
        ka = sample_gamma_measure(params, EPS, RngSeed(7, stream=3))
        kb = sample_gamma_measure(params, EPS, RngSeed(7, stream=3))
        assert ka == kb

    def test_same_seed_same_batches(self, window4, rho_mass2):
        params = PolyaParams(0.5, rho_mass2)
        b1 = sample_polya_cox_batch(params, EPS, 500, RngSeed(8))
        b2 = sample_polya_cox_batch(params, EPS, 500, RngSeed(8))
        assert np.array_equal(b1.rep, b2.rep)
        assert np.array_equal(b1.mult, b2.mult)
        assert np.array_equal(b1.coords, b2.coords)

    def test_streams_are_independent(self, window4, rho_mass2):
        params = PolyaParams(0.5, rho_mass2)
        a = sample_polya_direct_batch(params, 200, RngSeed(7, stream=0))
        b = sample_polya_direct_batch(params, 200, RngSeed(7, stream=1))
        assert not (a.rep.size == b.rep.size
                    and np.array_equal(a.coords, b.coords))


class TestObjectBatchConsistency:
    def test_object_api_equals_batch_of_one(self, window4, rho_mass2):
        params = PolyaParams(0.5, rho_mass2)
        obj = sample_polya_direct(params, RngSeed(91))
        via_batch = sample_polya_direct_batch(
            params, 1, RngSeed(91)).to_configurations()[0]
        assert obj == via_batch
