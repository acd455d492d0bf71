#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pwspec/quantum_state.hpp"

using namespace pwspec;

// mpmath, 30 digits: (1/sqrt(2 pi)) (2/sqrt(pi)) e^-1
constexpr double density_at_1_0 = 0.16560393163270388;

TEST(EquilibriumDensity, VanishesOnExcitedStateNode)
{
    for (double yp : {-3.0, 0.0, 0.5, 7.0})
        EXPECT_EQ(equilibrium_density(0.0, yp), 0.0);
}

TEST(EquilibriumDensity, ClosedFormValue)
{
    EXPECT_NEAR(equilibrium_density(1.0, 0.0), density_at_1_0, 1e-15);
    EXPECT_NEAR(equilibrium_density(1.0, 0.0), 0.165605, 2e-6);
}

TEST(EquilibriumDensity, NormalizedByQuadrature)
{
    double const mass = oracle::integrate2d([](double q, double y) { return equilibrium_density(q, y); }, -8, 8,
                                            -8, 8);
    EXPECT_NEAR(mass, 1.0, 1e-9);
}

TEST(WidenedDensity, ReducesToEquilibriumAtUnitWidth)
{
    EXPECT_EQ(widened_density(1.0, 0.0, 1.0), equilibrium_density(1.0, 0.0));
    EXPECT_NEAR(widened_density(2.0, 0.0, 2.0), density_at_1_0 / 2.0, 1e-15);
}

TEST(WidenedDensity, ScalingIdentityIsExact)
{
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> q(-6, 6), y(-5, 5), w(0.1, 5);
    for (int i = 0; i < 1000; ++i) {
        double const a = q(gen), b = y(gen), c = w(gen);
        EXPECT_EQ(widened_density(a, b, c) - equilibrium_density(a / c, b) / c, 0.0);
    }
}

TEST(WidenedDensity, NormalizedAndSecondMoment)
{
    for (double w : {0.25, 1.0, 2.0, 4.0}) {
        double const mass = oracle::integrate2d([w](double q, double y) { return widened_density(q, y, w); },
                                                -8 * w, 8 * w, -8, 8);
        EXPECT_NEAR(mass, 1.0, 1e-9) << "w = " << w;
        double const q2 = oracle::integrate(
            [w](double q) { return q * q * oracle::integrate([&](double y) { return widened_density(q, y, w); }, -8, 8, 32); },
            -8 * w, 8 * w, 64);
        EXPECT_NEAR(q2, widened_second_moment(w), 1e-8) << "w = " << w;
    }
    EXPECT_DOUBLE_EQ(widened_second_moment(2.0), 6.0);
}

TEST(WidenedDensity, PointerMarginalIsStandardNormal)
{
    for (double w : {0.25, 2.0}) {
        for (double yp : {-2.0, 0.0, 1.3}) {
            double const marginal
                = oracle::integrate([&](double q) { return widened_density(q, yp, w); }, -8 * w, 8 * w);
            EXPECT_NEAR(marginal, pointer_density(yp), 1e-12);
        }
    }
}

TEST(WidenedDensity, RejectsNonpositiveWidth)
{
    EXPECT_THROW(widened_density(1.0, 0.0, 0.0), std::invalid_argument);
    EXPECT_THROW(widened_density(1.0, 0.0, -2.0), std::invalid_argument);
}

TEST(DispersionModel, ResolutionIsReciprocalOfFractionalDispersion)
{
    EXPECT_DOUBLE_EQ(DispersionModel(1.0, 5.0).fractional_dispersion(), 0.2);
    EXPECT_DOUBLE_EQ(DispersionModel(1.0, 10.0).fractional_dispersion(), 0.1);
    EXPECT_DOUBLE_EQ(DispersionModel(1.0, 100.0).fractional_dispersion(), 0.01);
    EXPECT_DOUBLE_EQ(DispersionModel::from_fractional_dispersion(3.0, 0.2).T(), 5.0);
    EXPECT_THROW(DispersionModel(0.0, 5.0), std::invalid_argument);
    EXPECT_THROW(DispersionModel(1.0, 0.0), std::invalid_argument);
}

TEST(DispersionPdf, PeakValueAndLocation)
{
    DispersionModel const m(1.0, 10.0);
    EXPECT_NEAR(dispersion_pdf(1.0, m), 10.0 / std::sqrt(2.0 * std::numbers::pi), 1e-14);
    EXPECT_NEAR(dispersion_pdf(1.0, m), 3.98942, 1e-5);
    for (double d : {1e-3, 1e-2, 0.1})
        EXPECT_LT(dispersion_pdf(1.0 + d, m), dispersion_pdf(1.0, m));
}

TEST(DispersionPdf, MomentsByQuadrature)
{
    for (auto [eg, t] : {std::pair{1.0, 10.0}, {130.0, 5.0}, {2.5, 100.0}}) {
        DispersionModel const m(eg, t);
        double const s = eg / t;
        double const mass = oracle::integrate([&](double e) { return dispersion_pdf(e, m); }, eg - 12 * s, eg + 12 * s);
        double const var = oracle::integrate([&](double e) { return (e - eg) * (e - eg) * dispersion_pdf(e, m); },
                                             eg - 12 * s, eg + 12 * s);
        EXPECT_NEAR(mass, 1.0, 1e-12);
        EXPECT_NEAR(var / (s * s), 1.0, 1e-6);
    }
}

TEST(PointerEnergy, Examples)
{
    EXPECT_DOUBLE_EQ(pointer_to_energy(0.0, DispersionModel(7.0, 3.0)), 7.0);
    EXPECT_DOUBLE_EQ(pointer_to_energy(2.0, DispersionModel(100.0, 10.0)), 120.0);
    EXPECT_DOUBLE_EQ(pointer_to_energy(-1.0, DispersionModel(1.0, 5.0)), 0.8);
}

TEST(PointerEnergy, RoundTrip)
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> y(-6, 6), eg(0.1, 500), t(1, 100);
    for (int i = 0; i < 10000; ++i) {
        DispersionModel const m(eg(gen), t(gen));
        double const yp = y(gen);
        double const back = energy_to_pointer(pointer_to_energy(yp, m), m);
        EXPECT_NEAR(back, yp, 1e-12 * std::max(1.0, std::abs(yp)));
    }
}
