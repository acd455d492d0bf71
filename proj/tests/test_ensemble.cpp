#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pwspec/ensemble.hpp"
#include "pwspec/random.hpp"

using namespace pwspec;

TEST(CounterStream, ReproducibleAndKeyedByStream)
{
    CounterStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    for (int i = 0; i < 100; ++i) {
        auto const x = a();
        EXPECT_EQ(x, b());
        EXPECT_NE(x, c());
        EXPECT_NE(x, d());
    }
}

TEST(CounterStream, DistributionMoments)
{
    CounterStream rng(1, 0);
    std::size_t const n = 400000;
    double su = 0, sn = 0, sn2 = 0, sg = 0, sg2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double const u = rng.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        double const z = rng.normal();
        sn += z;
        sn2 += z * z;
        double const g = rng.gamma_three_halves();
        ASSERT_GE(g, 0.0);
        sg += g;
        sg2 += g * g;
    }
    double const N = static_cast<double>(n);
    EXPECT_NEAR(su / N, 0.5, 5 * std::sqrt(1.0 / 12 / N));
    EXPECT_NEAR(sn / N, 0.0, 5 / std::sqrt(N));
    EXPECT_NEAR(sn2 / N, 1.0, 5 * std::sqrt(2.0 / N));
    // Gamma(3/2, 1): mean 3/2, variance 3/2, E[X^2] = 15/4
    EXPECT_NEAR(sg / N, 1.5, 5 * std::sqrt(1.5 / N));
    EXPECT_NEAR(sg2 / N, 3.75, 5 * std::sqrt((945.0 / 16 - 3.75 * 3.75) / N));
}

TEST(ExcitedModeCdf, MatchesQuadratureOfDensity)
{
    for (double q : {-3.0, -1.0, -0.2, 0.0, 0.4, 1.0, 2.5}) {
        double const ref = oracle::integrate([](double x) { return excited_mode_density(x); }, -12.0, q);
        EXPECT_NEAR(excited_mode_cdf(q), ref, 1e-12) << q;
    }
}

TEST(ExcitedModeCdf, BarrierMasses)
{
    // P(|Q| < 1) at equilibrium, mpmath
    EXPECT_NEAR(excited_mode_cdf(1.0) - excited_mode_cdf(-1.0), 0.427593295529120166, 1e-12);
    // w = 1/4: mass beyond |Q| = 1 is the equilibrium mass beyond |Q| = 4
    EXPECT_NEAR(2.0 * (1.0 - excited_mode_cdf(4.0)), 5.233e-7, 1e-9);
}

TEST(SampleEquilibrium, MarginalsPassKs)
{
    std::size_t const n = 20000;
    auto const e = sample_equilibrium(n, 20170101);
    double const band = 1.63 / std::sqrt(static_cast<double>(n));
    auto const yp = coordinates(e, Axis::yp);
    auto const q = coordinates(e, Axis::q);
    EXPECT_LT(ks_statistic_standard_normal(yp), band);
    EXPECT_LT(ks_statistic(q, excited_mode_cdf), band);
    double inner = 0;
    for (double x : q)
        inner += std::abs(x) < 1.0;
    double const p = 0.427593295529120166;
    EXPECT_NEAR(inner / n, p, 4 * std::sqrt(p * (1 - p) / n));
}

TEST(SampleWidened, ScalesQOnly)
{
    auto const base = sample_equilibrium(500, 5);
    auto const wide = sample_widened(500, 4.0, 5);
    for (std::size_t i = 0; i < 500; ++i) {
        if (base.points[i].yp != wide.points[i].yp)
            continue;  // resampled near a singular manifold in one of them
        EXPECT_DOUBLE_EQ(wide.points[i].q, 4.0 * base.points[i].q);
    }
    auto const q = coordinates(sample_widened(20000, 0.25, 9), Axis::q);
    double const band = 1.63 / std::sqrt(20000.0);
    EXPECT_LT(ks_statistic(q, [](double x) { return excited_mode_cdf(x / 0.25); }), band);
    double m2 = 0;
    for (double x : q)
        m2 += x * x;
    EXPECT_NEAR(m2 / q.size(), widened_second_moment(0.25), 0.03 * widened_second_moment(0.25));
}

TEST(SampleWidened, PrefixStableAndSeedSensitive)
{
    auto const small = sample_widened(50, 2.0, 11);
    auto const big = sample_widened(200, 2.0, 11);
    for (std::size_t i = 0; i < 50; ++i)
        EXPECT_EQ(small.points[i], big.points[i]);
    auto const other = sample_widened(50, 2.0, 12);
    EXPECT_NE(small.points[0], other.points[0]);
}

TEST(SampleWidened, AvoidsSingularManifoldsAndDrawsVacuum)
{
    auto const e = sample_widened(5000, 1.0, 3, ModeSpectrum::uniform(4, 1.0));
    double s2 = 0;
    for (auto const& p : e.points) {
        EXPECT_GE(std::abs(p.q), singular_exclusion);
        EXPECT_GE(std::abs(p.gap), singular_exclusion);
        ASSERT_EQ(p.vacuum.size(), 4u);
        for (double qk : p.vacuum) {
            EXPECT_GE(std::abs(qk), singular_exclusion);
            s2 += qk * qk;
        }
    }
    EXPECT_NEAR(s2 / (4 * 5000.0), 0.5, 0.03);
}

TEST(SampleWidened, RejectsBadArguments)
{
    EXPECT_THROW(sample_widened(0, 1.0, 1), std::invalid_argument);
    EXPECT_THROW(sample_widened(10, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(sample_widened(10, -2.0, 1), std::invalid_argument);
}

TEST(Evolve, ThreadCountDoesNotChangeResults)
{
    auto const e = sample_widened(300, 4.0, 21);
    std::vector<double> const times{0.0, 5.0, 20.0};
    auto const one = evolve_to_snapshots(e, times, IntegratorSettings{}, 1);
    auto const many = evolve_to_snapshots(e, times, IntegratorSettings{}, 5);
    ASSERT_EQ(one.ensembles.size(), 3u);
    for (std::size_t j = 0; j < times.size(); ++j) {
        EXPECT_EQ(one.ensembles[j].t_now, times[j]);
        for (std::size_t i = 0; i < e.size(); ++i)
            ASSERT_EQ(one.ensembles[j].points[i], many.ensembles[j].points[i]);
    }
    for (std::size_t i = 0; i < e.size(); ++i)
        EXPECT_EQ(one.ensembles[0].points[i], e.points[i]);
}

TEST(Evolve, EquilibriumStaysEquilibrium)
{
    std::size_t const n = 4000;
    auto const e = sample_equilibrium(n, 31);
    auto const snaps = evolve_to_snapshots(e, std::vector<double>{5.0, 20.0}, IntegratorSettings{});
    for (auto const& s : snaps.ensembles)
        EXPECT_LT(ks_statistic_standard_normal(coordinates(s, Axis::yp)), 1.63 / std::sqrt(double(n)));
}

TEST(Evolve, RejectsBadTimes)
{
    auto e = sample_equilibrium(10, 1);
    EXPECT_THROW(evolve_to_snapshots(e, std::vector<double>{}, IntegratorSettings{}), std::invalid_argument);
    EXPECT_THROW(evolve_to_snapshots(e, std::vector<double>{5.0, 5.0}, IntegratorSettings{}),
                 std::invalid_argument);
    e.t_now = 3.0;
    EXPECT_THROW(evolve_to_snapshots(e, std::vector<double>{1.0}, IntegratorSettings{}), std::invalid_argument);
}

TEST(Evolve, FailureAbortsWithLowestIndex)
{
    auto e = sample_equilibrium(40, 2);
    IntegratorSettings s;
    s.max_steps = 3;
    try {
        evolve_to_snapshots(e, std::vector<double>{50.0}, s, 4);
        FAIL() << "expected EnsembleEvolutionError";
    } catch (EnsembleEvolutionError const& err) {
        EXPECT_EQ(err.index(), 0u);
        EXPECT_EQ(err.seed(), 2u);
    }
}

TEST(Histogram, NormalizationAndOutOfRangeMass)
{
    std::vector<double> const v{-6.0, -1.0, -0.5, 0.0, 0.0, 1.0, 4.99, 5.0, 7.0, 0.25};
    auto const h = histogram_of(v, 10, -5.0, 5.0, SpectrumUnits::pointer);
    EXPECT_NO_THROW(h.validate());
    EXPECT_DOUBLE_EQ(h.out_of_range_mass, 0.2);
    EXPECT_DOUBLE_EQ(h.mass(9), 0.2);  // 4.99 and the closed right edge
    EXPECT_DOUBLE_EQ(h.mass(5), 0.3);  // 0, 0, 0.25
    EXPECT_THROW(histogram_of(v, 1, -5.0, 5.0, SpectrumUnits::pointer), std::invalid_argument);
    EXPECT_THROW(histogram_of(std::vector<double>{}, 4, -5.0, 5.0, SpectrumUnits::pointer), std::invalid_argument);
}

TEST(Histogram, ValidateCatchesBrokenInvariants)
{
    SpectrumHistogram h;
    h.edges = {0.0, 1.0, 2.0};
    h.densities = {0.5, 0.4};
    EXPECT_THROW(h.validate(), std::invalid_argument);
    h.out_of_range_mass = 0.1;
    EXPECT_NO_THROW(h.validate());
    h.densities = {-0.1, 1.0};
    EXPECT_THROW(h.validate(), std::invalid_argument);
}

TEST(Statistics, KsAndMoments)
{
    std::vector<double> const one{0.0};
    EXPECT_DOUBLE_EQ(ks_statistic_standard_normal(one), 0.5);
    std::vector<double> const v{1.0, 2.0, 3.0, 4.0};
    EXPECT_DOUBLE_EQ(sample_mean(v), 2.5);
    EXPECT_DOUBLE_EQ(sample_stddev(v), std::sqrt(5.0 / 3.0));
    EXPECT_THROW(sample_stddev(one), std::invalid_argument);
}
