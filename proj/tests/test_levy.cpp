#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hybridjd/levy.hpp"

using namespace hybridjd;

namespace {

// |phi''|_{L1} for the standard normal pdf phi: phi'' = (z^2 - 1) phi changes sign at
// +-1, so the integral is 4 phi(1).
const double kNormalSecondL1 = 4.0 * std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi);

}  // namespace

TEST(JumpLaw, KouDensityAtZeroFromTheRight) {
    const auto law = JumpLaw::kou(1.0, 0.5, 10.0, 5.0);
    EXPECT_DOUBLE_EQ(law.density(0.0), 5.0);
    EXPECT_DOUBLE_EQ(density(law, -1e-300), 2.5);
}

TEST(JumpLaw, DensitiesIntegrateToOne) {
    for (const auto& law : {JumpLaw::merton(1.0, -0.1, 0.15), JumpLaw::kou(1.0, 0.3, 12.0, 4.0)}) {
        double sum = 0.0;
        const double dx = 1e-4;
        for (double x = -20.0; x <= 20.0; x += dx) sum += law.density(x) * dx;
        EXPECT_NEAR(sum, 1.0, 1e-3);
    }
}

TEST(JumpLaw, NoneHasZeroIntensity) {
    const auto law = JumpLaw::none();
    EXPECT_TRUE(law.is_none());
    EXPECT_EQ(law.intensity(), 0.0);
    EXPECT_FALSE(law.active());
    EXPECT_EQ(law.nu(0.3), 0.0);
    EXPECT_EQ(law.mean_relative_jump(), 0.0);
}

TEST(JumpLaw, SecondDerivativeL1Norms) {
    EXPECT_NEAR(JumpLaw::merton(1.0, 0.0, 1.0).nu_second_l1(), kNormalSecondL1, 1e-10);
    // scaling: nu'' of N(m, d^2) has L1 norm 4 phi(1) / d^2, times lambda
    EXPECT_NEAR(JumpLaw::merton(0.2, -0.1, 0.15).nu_second_l1(), 0.2 * kNormalSecondL1 / 0.0225,
                1e-9);
    // Kou: nu'' = lambda p eta1^3 e^{-eta1 x} on x > 0, so the L1 norm is lambda (p eta1^2 + q eta2^2)
    const double p = 0.4, e1 = 10.0, e2 = 5.0, lam = 2.0;
    EXPECT_NEAR(JumpLaw::kou(lam, p, e1, e2).nu_second_l1(),
                lam * (p * e1 * e1 + (1 - p) * e2 * e2), 1e-9);
}

TEST(JumpLaw, MeanRelativeJump) {
    EXPECT_NEAR(JumpLaw::merton(1.0, -0.1, 0.15).mean_relative_jump(),
                std::exp(-0.1 + 0.5 * 0.0225) - 1.0, 1e-15);
    const double p = 0.3, e1 = 12.0, e2 = 4.0;
    EXPECT_NEAR(JumpLaw::kou(1.0, p, e1, e2).mean_relative_jump(),
                p * e1 / (e1 - 1) + (1 - p) * e2 / (e2 + 1) - 1.0, 1e-15);
}

TEST(JumpLaw, TailMass) {
    const auto merton = JumpLaw::merton(2.0, 0.0, 1.0);
    EXPECT_NEAR(merton.tail_mass(0.0), 2.0, 1e-15);
    EXPECT_NEAR(merton.tail_mass(1.96), 2.0 * 0.04999579029644087, 1e-12);
    const auto kou = JumpLaw::kou(1.0, 0.5, 10.0, 5.0);
    EXPECT_NEAR(kou.tail_mass(0.1), 0.5 * std::exp(-1.0) + 0.5 * std::exp(-0.5), 1e-15);
}

TEST(JumpLaw, SamplesHaveTheRightMoments) {
    std::mt19937_64 rng(5);
    const auto law = JumpLaw::kou(1.0, 0.3, 12.0, 4.0);
    const int n = 400000;
    double sum = 0.0, sum_exp = 0.0;
    for (int i = 0; i < n; ++i) {
        const double j = law.sample(rng);
        sum += j;
        sum_exp += std::exp(j);
    }
    const double mean = 0.3 / 12.0 - 0.7 / 4.0;
    EXPECT_NEAR(sum / n, mean, 4.0 * 0.31 / std::sqrt(n));
    EXPECT_NEAR(sum_exp / n - 1.0, law.mean_relative_jump(), 4.0 * 0.26 / std::sqrt(n));
}

TEST(JumpLaw, RejectsInvalidParameters) {
    EXPECT_THROW(JumpLaw::merton(-1.0, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(JumpLaw::merton(1.0, 0.0, 0.0), std::invalid_argument);
    EXPECT_THROW(JumpLaw::kou(1.0, 1.5, 10.0, 5.0), std::invalid_argument);
    EXPECT_THROW(JumpLaw::kou(1.0, 0.5, 1.0, 5.0), std::invalid_argument);
    EXPECT_THROW(JumpLaw::kou(1.0, 0.5, 10.0, 0.0), std::invalid_argument);
}

TEST(Quadrature, NoJumpsGiveEmptyWeights) {
    const auto q = build_quadrature(JumpLaw::none(), 1.0, 0.1);
    EXPECT_TRUE(q.empty());
    EXPECT_EQ(q.total_mass, 0.0);
    const auto zero = build_quadrature(JumpLaw::merton(0.0, 0.0, 1.0), 1.0, 0.1);
    EXPECT_TRUE(zero.empty());
}

TEST(Quadrature, MassWithinTheTrapezoidalBound) {
    const auto law = JumpLaw::merton(1.0, 0.0, 1.0);
    for (double dx : {0.2, 0.1, 0.05, 0.025}) {
        const auto q = build_quadrature(law, 1.0, dx);
        const double bound = dx * dx / 12.0 * kNormalSecondL1;
        EXPECT_LE(std::abs(q.total_mass - 1.0), bound) << "dx=" << dx;
        EXPECT_NEAR(quadrature_error_bound(law, 1.0, dx), bound, 1e-12);
        EXPECT_LT(q.truncated_mass, 1e-12);
    }
}

TEST(Quadrature, ScalingByGamma) {
    const auto law = JumpLaw::merton(1.0, 0.0, 1.0);
    const double dx = 0.1;
    const auto unit = build_quadrature(law, 1.0, dx);
    const auto wide = build_quadrature(law, 2.0, dx);
    // density halved at the origin, spread doubled
    EXPECT_NEAR(wide.center_weight(), 0.5 * unit.center_weight(), 1e-15);
    EXPECT_NEAR(wide.weight(20), 0.5 * unit.weight(10), 1e-15);
    EXPECT_NEAR(wide.half_window, 2 * unit.half_window, 2);
    const double bound = dx * dx / (12.0 * 4.0) * kNormalSecondL1;
    EXPECT_LE(std::abs(wide.total_mass - 1.0), bound);
    // a negative scale mirrors the weights
    const auto mirrored = build_quadrature(JumpLaw::merton(1.0, -0.3, 0.5), -1.0, dx);
    const auto direct = build_quadrature(JumpLaw::merton(1.0, -0.3, 0.5), 1.0, dx);
    EXPECT_NEAR(mirrored.weight(3), direct.weight(-3), 1e-15);
}

TEST(Quadrature, CNuMatchesItsDefinition) {
    const auto law = JumpLaw::merton(0.2, -0.1, 0.15);
    const double dx = 0.01, gamma = 1.0;
    const auto q = build_quadrature(law, gamma, dx);
    EXPECT_NEAR(q.c_nu, 1.0 + dx * dx * law.nu_second_l1() / (12.0 * 0.2), 1e-14);
}

TEST(Quadrature, TailBelowTolerance) {
    const auto law = JumpLaw::kou(3.0, 0.4, 10.0, 5.0);
    const auto q = build_quadrature(law, 1.0, 0.01, 1e-9);
    EXPECT_LT(q.truncated_mass, 1e-9);
    // one step narrower would not be enough
    EXPECT_GE(law.tail_mass((q.half_window - 1) * 0.01), 1e-9);
}

TEST(Quadrature, KouHeuristicBound) {
    const auto law = JumpLaw::kou(1.0, 0.5, 10.0, 5.0);
    for (double dx : {0.02, 0.01, 0.005}) {
        const auto q = build_quadrature(law, 1.0, dx);
        EXPECT_LE(std::abs(q.total_mass - 1.0), quadrature_error_bound(law, 1.0, dx));
    }
}

TEST(Quadrature, RejectsZeroScaleWithJumps) {
    EXPECT_THROW(build_quadrature(JumpLaw::merton(1.0, 0.0, 1.0), 0.0, 0.1), std::invalid_argument);
    EXPECT_THROW(build_quadrature(JumpLaw::merton(1.0, 0.0, 1.0), 1.0, 0.0), std::invalid_argument);
}
