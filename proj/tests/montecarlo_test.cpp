#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "cverase/errors.hpp"
#include "cverase/montecarlo.hpp"
#include "cverase/protocol.hpp"

using namespace cverase;

namespace {

const QuadratureAddress kAddrs2[] = {QuadratureAddress::amplitude(0), QuadratureAddress::phase(0)};
const QuadratureAddress kAddrs4[] = {QuadratureAddress::amplitude(0), QuadratureAddress::phase(0),
                                     QuadratureAddress::amplitude(1), QuadratureAddress::phase(1)};

GaussianState correlated_pair() {
    const auto marker = add_classical_noise(squeezed_vacuum(0.3, 0.0), QuadratureAddress::phase(0), 4.0);
    return displace(apply_beamsplitter(tensor(vacuum(1), marker), 0, 1, 0.477), 0, 1.0, -2.0);
}

double rms_variance_error(std::size_t n, int repeats) {
    const QuadratureAddress x[] = {QuadratureAddress::amplitude(0)};
    double sum2 = 0;
    for (int r = 0; r < repeats; ++r) {
        const auto b = mc::sample_quadratures(vacuum(1), x, n, 500 + static_cast<std::uint64_t>(r));
        const double m = b.values.col(0).mean();
        const double v = (b.values.col(0).array() - m).square().sum() / static_cast<double>(n - 1);
        sum2 += (v - 1) * (v - 1);
    }
    return std::sqrt(sum2 / repeats);
}

}  // namespace

TEST(MonteCarlo, VacuumVariance) {
    const auto report = mc::validate_against_analytic(vacuum(1), std::span<const QuadratureAddress>(kAddrs2), 200'000, 1);
    EXPECT_TRUE(report.passed());
    ASSERT_EQ(report.entries.size(), 5u);
    EXPECT_EQ(report.entries[0].label, "mean(x0)");
    EXPECT_EQ(report.entries[2].label, "var(x0)");
    EXPECT_EQ(report.entries[3].label, "cov(x0,p0)");
    EXPECT_NEAR(report.entries[2].empirical, 1.0, 0.02);
}

TEST(MonteCarlo, CorrelatedPairMatchesAnalytic) {
    const auto st = correlated_pair();
    const auto report = mc::validate_against_analytic(st, std::span<const QuadratureAddress>(kAddrs4), 300'000, 2);
    for (const auto& e : report.entries) EXPECT_TRUE(e.pass) << e.label << " z=" << e.z;
    EXPECT_EQ(report.entries.size(), 4u + 10u);
}

TEST(MonteCarlo, ConditionedPhaseOfCalibratedScenario) {
    const auto p = calibrate_to_reference();
    const auto joint = joint_state(p);
    const double g = cancellation_gain(p.transmittance);
    const std::vector<mc::Functional> f = {
        {"p0", {{QuadratureAddress::phase(0), 1.0}}},
        {"p1", {{QuadratureAddress::phase(1), 1.0}}},
        {"pc", {{QuadratureAddress::phase(0), 1.0}, {QuadratureAddress::phase(1), -g}}},
    };
    const auto report = mc::validate_against_analytic(joint, std::span<const mc::Functional>(f), 200'000, 3);
    for (const auto& e : report.entries) EXPECT_TRUE(e.pass) << e.label << " z=" << e.z;
    const auto& var_pc = report.entries[3 + 5];
    EXPECT_EQ(var_pc.label, "var(pc)");
    EXPECT_NEAR(var_pc.analytic, 1 / p.transmittance, 1e-9);
}

TEST(MonteCarlo, SeedDeterminismAndChunkStability) {
    const auto st = correlated_pair();
    const auto a = mc::sample_quadratures(st, kAddrs4, 100'000, 42);
    const auto b = mc::sample_quadratures(st, kAddrs4, 100'000, 42);
    EXPECT_EQ(a.values, b.values);
    const auto c = mc::sample_quadratures(st, kAddrs4, 100'000, 43);
    EXPECT_NE(a.values, c.values);
    // A shorter run is a prefix of a longer one.
    const auto prefix = mc::sample_quadratures(st, kAddrs4, 70'000, 42);
    EXPECT_EQ(prefix.values, a.values.topRows(70'000));
}

TEST(MonteCarlo, CorruptedSamplesAreFlagged) {
    const auto st = correlated_pair();
    const GaussianState inflated(st.mean(), 1.1 * st.cov());
    const auto batch = mc::sample_quadratures(inflated, kAddrs4, 200'000, 4);
    const auto f = mc::functionals_for(kAddrs4);
    const auto report = mc::compare_with_analytic(st, f, batch);
    EXPECT_FALSE(report.passed());
    int failing_variances = 0;
    for (const auto& e : report.entries)
        if (!e.pass && e.label.starts_with("var(")) ++failing_variances;
    EXPECT_EQ(failing_variances, 4);
}

TEST(MonteCarlo, ErrorShrinksAsInverseSqrtN) {
    const double small = rms_variance_error(1'000, 60);
    const double large = rms_variance_error(16'000, 60);
    const double slope = std::log(large / small) / std::log(16.0);
    EXPECT_NEAR(slope, -0.5, 0.15);
    EXPECT_NEAR(small, std::sqrt(2.0 / 999), 0.3 * std::sqrt(2.0 / 999));
}

TEST(MonteCarlo, ChunkStreamsAreUncorrelated) {
    const QuadratureAddress x[] = {QuadratureAddress::amplitude(0)};
    const auto b = mc::sample_quadratures(vacuum(1), x, 4 * mc::kChunkRows, 9);
    const auto rows = static_cast<Eigen::Index>(mc::kChunkRows);
    for (Eigen::Index k = 1; k < 4; ++k) {
        const Eigen::VectorXd a = b.values.col(0).head(rows);
        const Eigen::VectorXd c = b.values.col(0).segment(k * rows, rows);
        const double rho = ((a.array() - a.mean()) * (c.array() - c.mean())).sum() /
                           std::sqrt((a.array() - a.mean()).square().sum() * (c.array() - c.mean()).square().sum());
        EXPECT_LT(std::abs(rho), 4 / std::sqrt(static_cast<double>(rows))) << k;
        EXPECT_NE(a(0), c(0));
    }
}

TEST(MonteCarlo, LinearlyDependentFunctionalsAreSampled) {
    const std::vector<mc::Functional> f = {
        {"x0", {{QuadratureAddress::amplitude(0), 1.0}}},
        {"2x0", {{QuadratureAddress::amplitude(0), 2.0}}},
    };
    const auto b = mc::sample_functionals(vacuum(1), f, 1000, 1);
    EXPECT_LT((b.values.col(1) - 2 * b.values.col(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MonteCarlo, Errors) {
    EXPECT_THROW(mc::validate_against_analytic(vacuum(1), std::span<const QuadratureAddress>(kAddrs2), 999, 0),
                 std::invalid_argument);
    EXPECT_THROW(mc::sample_quadratures(vacuum(1), kAddrs2, 1, 0), std::invalid_argument);
    EXPECT_THROW(mc::sample_functionals(vacuum(1), std::span<const mc::Functional>(), 10, 0), std::invalid_argument);
    EXPECT_THROW(mc::sample_quadratures(vacuum(1), kAddrs4, 10, 0), std::invalid_argument);
    Eigen::MatrixXd bad(2, 2);
    bad << 1, 0, 0, -1;
    EXPECT_THROW(mc::detail::covariance_root(bad), InternalError);
}
