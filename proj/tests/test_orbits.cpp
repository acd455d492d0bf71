#include <cmath>

#include <gtest/gtest.h>

#include "pwspec/orbits.hpp"

using namespace pwspec;

namespace {

// Period of small oscillations about a stationary point from the linearized flow.
double harmonic_period(double q)
{
    double const a = (1.0 / q - q) / 6.0;
    double const g = -1.0 / (3.0 * q * q * q) + 2.0 * q / 3.0;
    return 2.0 * std::acos(-1.0) / std::sqrt(-a * g);
}

}  // namespace

TEST(AxisCrossing, LiesOnTheLevelSet)
{
    for (auto region : {Region::outer, Region::inner}) {
        for (double dg : {0.01, 0.5, 3.0}) {
            double const level = region_floor(region) + dg;
            double const q = axis_crossing(level, region);
            EXPECT_NEAR(conserved_G_reduced(q, 0.0), level, 1e-12);
            EXPECT_EQ(region_of(q), region);
        }
    }
    EXPECT_THROW(axis_crossing(1.0, Region::outer), std::domain_error);
}

TEST(DetectPeriod, SmallOrbitsMatchTheLinearizedFlow)
{
    for (auto region : {Region::outer, Region::inner}) {
        auto const [qmin, floor] = region_minimum(region);
        auto const orbit = trace_orbit(floor + 1e-6, region);
        EXPECT_NEAR(orbit.period, harmonic_period(qmin), 1e-3 * harmonic_period(qmin)) << to_string(region);
    }
}

TEST(DetectPeriod, OrbitIsClosedAndConservesG)
{
    auto const orbit = trace_orbit(2.5, Region::outer);
    auto const& path = orbit.path;
    ASSERT_GT(path.size(), 10u);
    EXPECT_NEAR(path.states.back().q, path.states.front().q, 1e-6);
    EXPECT_NEAR(path.states.back().yp, path.states.front().yp, 1e-6);
    for (double g : path.g_values)
        EXPECT_NEAR(g, 2.5, 1e-6);
}

TEST(DetectPeriod, ClassifiesDegenerateTrajectories)
{
    auto const [q, f] = stationary_points()[3];
    (void)f;
    auto const still = integrate(PhaseState(q, 0.0), 5.0, IntegratorSettings{});
    EXPECT_EQ(detect_period(still).status, PeriodEstimate::Status::stationary);

    auto const short_run = integrate(PhaseState(2.0, 0.1), 0.5, IntegratorSettings{});
    EXPECT_EQ(detect_period(short_run).status, PeriodEstimate::Status::no_return);
    EXPECT_FALSE(detect_period(short_run));
}

TEST(DetectPeriod, CrossingSpacingIsRegular)
{
    auto const traj = integrate(PhaseState(axis_crossing(3.0, Region::inner), -1e-9), 200.0, IntegratorSettings{});
    auto const est = detect_period(traj);
    ASSERT_TRUE(est);
    ASSERT_GE(est.crossing_times.size(), 3u);
    for (std::size_t i = 1; i < est.crossing_times.size(); ++i)
        EXPECT_NEAR(est.crossing_times[i] - est.crossing_times[i - 1], est.period, 1e-5 * est.period);
}

// Maximum |Y'| on an orbit is reached where f(Q) is minimal, so it equals
// sqrt(2 (G - f_min)).
TEST(HalfWidth, TrajectoryMaximumMatchesDerivedConvention)
{
    for (auto region : {Region::outer, Region::inner}) {
        double const level = region_floor(region) + 0.5;
        auto const orbit = trace_orbit(level, region);
        double peak = 0.0;
        for (auto const& s : orbit.path.states)
            peak = std::max(peak, std::abs(s.yp));
        double const derived = half_width_bound(level, region, HalfWidthConvention::derived);
        // the recorded steps sample the maximum; allow for step spacing
        EXPECT_NEAR(peak, derived, 2e-3) << to_string(region);
        EXPECT_LE(peak, derived + 1e-9);
    }
}

TEST(DetectPeriod, NearStationaryOrbitPeriod)
{
    // 2 pi / sqrt(0.12862) from the linearized flow at the outer stationary point
    double const q = stationary_points()[3].first + 1e-3;
    auto const orbit = trace_orbit(conserved_G_reduced(q, 0.0), Region::outer);
    EXPECT_NEAR(orbit.period, 17.52, 0.1);
    EXPECT_NEAR(orbit.period, harmonic_period(stationary_points()[3].first), 1e-3);
}
