#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "cverase/metrics.hpp"
#include "cverase/operations.hpp"
#include "oracles.hpp"

using namespace cverase;

namespace {

constexpr double kPi = std::numbers::pi;

GaussianState diagonal_state(double vx, double vp, double mx = 0, double mp = 0) {
    Eigen::VectorXd mean(2);
    mean << mx, mp;
    return GaussianState(mean, Eigen::Vector2d(vx, vp).asDiagonal().toDenseMatrix());
}

GaussianState random_pure(std::mt19937_64& rng) {
    std::normal_distribution<double> shift(0, 1);
    const Eigen::Matrix2d s = oracle::random_symplectic_2x2(rng);
    Eigen::VectorXd mean(2);
    mean << shift(rng), shift(rng);
    const Eigen::Matrix2d cov = s * s.transpose();
    return GaussianState(mean, 0.5 * (cov + cov.transpose()));
}

}  // namespace

TEST(Gains, ValuesAtReferenceTransmittance) {
    const auto g = gains(0.477);
    EXPECT_NEAR(g.marker, 0.723187, 1e-6);
    EXPECT_NEAR(g.signal, 0.690652, 1e-6);
    EXPECT_NEAR(g.erased, 1.447907, 1e-6);
    EXPECT_THROW(gains(0.0), std::invalid_argument);
    EXPECT_THROW(gains(1.0), std::invalid_argument);
}

TEST(AddedNoise, Definition) {
    EXPECT_DOUBLE_EQ(added_noise(1.0, 1.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(added_noise(4.0, 2.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(added_noise(0.5, 1.0, 1.0), -0.5);
    // Marker amplitude output for a 3 dB marker at T = 0.477.
    EXPECT_NEAR(added_noise(0.810631, gains(0.477).marker, 1.0), 0.549964, 1e-6);
    EXPECT_NEAR(added_noise(0.55 * 0.523 + 0.523, gains(0.477).marker, 1.0), 0.55, 1e-12);
    EXPECT_THROW(added_noise(1.0, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(added_noise(-1.0, 1.0, 1.0), std::invalid_argument);
}

TEST(UncertaintyProduct, Bound) {
    const auto u = uncertainty_product(0.55, 455);
    EXPECT_NEAR(u.product, 250.25, 1e-12);
    EXPECT_TRUE(u.satisfied);
    EXPECT_TRUE(uncertainty_product(1.0, 1.0).satisfied);
    EXPECT_TRUE(uncertainty_product(0.5, 2.0 - 1e-10).satisfied);
    EXPECT_FALSE(uncertainty_product(0.5, 1.5).satisfied);
}

TEST(Decibels, ConversionsAndRoundTrip) {
    EXPECT_NEAR(noise_dB(0.14), 0.569049, 1e-6);
    EXPECT_NEAR(from_dB(-3.0), 0.501187, 1e-6);
    EXPECT_DOUBLE_EQ(to_dB(1.0), 0.0);
    for (double v : {1e-6, 0.3, 1.0, 7.5, 1e6}) EXPECT_NEAR(from_dB(to_dB(v)) / v, 1.0, 1e-14);
    EXPECT_THROW(to_dB(0.0), std::invalid_argument);
    EXPECT_THROW(from_dB(INFINITY), std::invalid_argument);
}

TEST(NoiseReport, CarriesProductAndDecibels) {
    const auto r = make_noise_report(0.477, 0.55, 455, 0.14);
    EXPECT_NEAR(r.product, 250.25, 1e-12);
    EXPECT_NEAR(*r.n_p_erased_dB(), 0.569049, 1e-6);
    EXPECT_FALSE(r.n_x_erased_dB().has_value());
    EXPECT_NEAR(r.gains.erased, 1.447907, 1e-6);
}

TEST(Fidelity, IdenticalStatesGiveOne) {
    std::mt19937_64 rng(5);
    EXPECT_NEAR(fidelity_gaussian(vacuum(1), vacuum(1)), 1.0, 1e-15);
    for (int i = 0; i < 20; ++i) {
        const auto s = oracle::random_mode(rng, 1 + i);
        EXPECT_NEAR(fidelity_gaussian(s, s), 1.0, 1e-9);
    }
}

TEST(Fidelity, CoherentStatesHalfOverlap) {
    // exp(-|d|^2 / 4) for two coherent states in shot-noise units.
    const double d = std::sqrt(4 * std::log(2.0));
    EXPECT_NEAR(fidelity_gaussian(vacuum(1), displace(vacuum(1), 0, d, 0)), 0.5, 1e-14);
    EXPECT_NEAR(fidelity_gaussian(vacuum(1), displace(vacuum(1), 0, d / std::sqrt(2.0), d / std::sqrt(2.0))), 0.5,
                1e-14);
}

TEST(Fidelity, RestoredOutputWithMeasuredNoise) {
    EXPECT_NEAR(fidelity_gaussian(vacuum(1), diagonal_state(1.54, 2.39)), 0.681574, 1e-6);
    EXPECT_NEAR(fidelity_gaussian(vacuum(1), diagonal_state(1.0, 1.0 / 0.477)), 2 / std::sqrt(2 * (1 + 1 / 0.477)),
                1e-14);
}

TEST(Fidelity, SymmetricAndInvariantUnderCommonOperations) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = oracle::random_mode(rng);
        const auto b = oracle::random_mode(rng);
        const double f = fidelity_gaussian(a, b);
        EXPECT_NEAR(f, fidelity_gaussian(b, a), 1e-12);
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, 1.0);
        const double phi = 2 * kPi * u(rng);
        const double s = 0.1 + 0.9 * u(rng);
        const double theta = kPi * u(rng);
        auto op = [&](const GaussianState& x) {
            return displace(apply_squeeze(apply_phase_rotation(x, 0, phi), 0, s, theta), 0, 0.3, -1.2);
        };
        EXPECT_NEAR(fidelity_gaussian(op(a), op(b)), f, 1e-9);
    }
}

TEST(Fidelity, MatchesOverlapIntegralWhenOneStateIsPure) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 3; ++trial) {
        const auto pure = random_pure(rng);
        const auto mixed = oracle::random_mode(rng, 2.0);
        EXPECT_NEAR(fidelity_gaussian(pure, mixed), oracle::overlap(pure, mixed, 14.0, 700), 1e-4);
    }
    EXPECT_NEAR(oracle::overlap(vacuum(1), diagonal_state(1.54, 2.39), 12.0, 600), 0.681574, 1e-4);
}

TEST(Fidelity, Errors) {
    EXPECT_THROW(fidelity_gaussian(vacuum(2), vacuum(2)), std::invalid_argument);
    EXPECT_THROW(fidelity_gaussian(vacuum(1), diagonal_state(0.5, 1.0)), std::invalid_argument);
}

TEST(WignerContour, CircleAndAxes) {
    const auto c = wigner_contour(displace(vacuum(1), 0, 1.0, -2.0), 0);
    EXPECT_DOUBLE_EQ(c.center_x, 1.0);
    EXPECT_DOUBLE_EQ(c.center_p, -2.0);
    EXPECT_NEAR(c.semi_major, 1.0, 1e-14);
    EXPECT_NEAR(c.semi_minor, 1.0, 1e-14);
    EXPECT_EQ(c.orientation, 0.0);

    const auto sq = wigner_contour(squeezed_vacuum(0.25, 0.0), 0);
    EXPECT_NEAR(sq.semi_major, 2.0, 1e-12);
    EXPECT_NEAR(sq.semi_minor, 0.5, 1e-12);
    EXPECT_NEAR(sq.semi_major / sq.semi_minor, 4.0, 1e-12);
    EXPECT_NEAR(sq.orientation, kPi / 2, 1e-12);
}

TEST(WignerContour, OrientationFollowsRotation) {
    for (double phi : {0.1, 0.7, 1.3, 2.0, 2.9}) {
        const auto c = wigner_contour(apply_phase_rotation(squeezed_vacuum(0.25, 0.0), 0, phi), 0);
        const double expected = std::fmod(kPi / 2 + phi, kPi);
        EXPECT_NEAR(c.orientation, expected, 1e-10) << phi;
        EXPECT_GE(c.orientation, 0.0);
        EXPECT_LT(c.orientation, kPi);
    }
}

TEST(WignerContour, ShrinksAsLevelRises) {
    const auto st = diagonal_state(1.54, 2.39);
    double previous = INFINITY;
    for (double level : {0.05, 0.2, 0.5, kOneSigmaLevel, 0.9}) {
        const auto c = wigner_contour(st, 0, level);
        EXPECT_LT(c.semi_major, previous);
        EXPECT_NEAR(c.semi_major / c.semi_minor, std::sqrt(2.39 / 1.54), 1e-12);
        previous = c.semi_major;
    }
    EXPECT_NEAR(wigner_contour(st, 0).semi_major, std::sqrt(2.39), 1e-12);
    // The contour really is the level set.
    const auto c = wigner_contour(st, 0, 0.3);
    const double peak = oracle::wigner(st, 0, 0);
    EXPECT_NEAR(oracle::wigner(st, 0, c.semi_major) / peak, 0.3, 1e-12);
    EXPECT_NEAR(oracle::wigner(st, c.semi_minor, 0) / peak, 0.3, 1e-12);
    EXPECT_THROW(wigner_contour(st, 0, 1.0), std::invalid_argument);
    EXPECT_THROW(wigner_contour(st, 0, 0.0), std::invalid_argument);
}
