#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "cverase/errors.hpp"
#include "cverase/gaussian_state.hpp"
#include "cverase/measurement.hpp"

namespace cverase::mc {

/// Rows drawn per independently seeded chunk.
inline constexpr std::size_t kChunkRows = std::size_t{1} << 16;
inline constexpr std::size_t kDefaultSamples = 1'000'000;
inline constexpr double kDefaultThreshold = 4.0;

/// A named linear functional sum_k c_k q(address_k) of the quadratures.
struct Functional {
    std::string label;
    std::vector<Term> terms;
};

inline std::string address_label(const QuadratureAddress& a) {
    if (a.theta() == 0.0) return fmt::format("x{}", a.mode());
    if (a == QuadratureAddress::phase(a.mode())) return fmt::format("p{}", a.mode());
    return fmt::format("q{}({:.6f})", a.mode(), a.theta());
}

inline std::vector<Functional> functionals_for(std::span<const QuadratureAddress> addresses) {
    std::vector<Functional> out;
    out.reserve(addresses.size());
    for (const auto& a : addresses) out.push_back({address_label(a), {{a, 1.0}}});
    return out;
}

struct SampleBatch {
    std::size_t n;
    /// n rows, one column per functional.
    Eigen::MatrixXd values;
    std::uint64_t seed;
};

namespace detail {

inline Eigen::MatrixXd directions(const GaussianState& state, std::span<const Functional> functionals) {
    if (functionals.empty()) throw std::invalid_argument("nothing to sample");
    Eigen::MatrixXd u(state.cov().rows(), static_cast<Eigen::Index>(functionals.size()));
    for (std::size_t k = 0; k < functionals.size(); ++k) {
        u.col(static_cast<Eigen::Index>(k)) = combination_vector<double>(state.n_modes(), functionals[k].terms);
    }
    return u;
}

/// Symmetric square root L (L L^T = cov) via eigen-decomposition; tiny
/// negative eigenvalues from rounding are clamped to zero.
inline Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    Eigen::VectorXd lambda = eig.eigenvalues();
    const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i) < -1e-9 * scale) {
            throw InternalError(fmt::format(
                "restricted covariance has eigenvalue {:.3e}; state bookkeeping is broken", lambda(i)));
        }
        lambda(i) = std::max(lambda(i), 0.0);
    }
    return eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace detail

/// Draws n outcomes of the functionals from the classical multivariate normal
/// with mean U^T m and covariance U^T cov U. Chunk k uses the stream seeded
/// by (seed, k), so the batch is reproducible and chunks are independent.
inline SampleBatch sample_functionals(const GaussianState& state, std::span<const Functional> functionals,
                                      std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("need at least two samples");
    const Eigen::MatrixXd u = detail::directions(state, functionals);
    const Eigen::VectorXd mu = u.transpose() * state.mean();
    const Eigen::MatrixXd root = detail::covariance_root(u.transpose() * state.cov() * u);
    const auto k = u.cols();

    SampleBatch batch{n, Eigen::MatrixXd(static_cast<Eigen::Index>(n), k), seed};
    Eigen::VectorXd z(k);
    for (std::size_t start = 0, chunk = 0; start < n; start += kChunkRows, ++chunk) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(chunk)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal;
        const std::size_t stop = std::min(n, start + kChunkRows);
        for (std::size_t row = start; row < stop; ++row) {
            for (Eigen::Index j = 0; j < k; ++j) z(j) = normal(rng);
            batch.values.row(static_cast<Eigen::Index>(row)) = (mu + root * z).transpose();
        }
    }
    return batch;
}

inline SampleBatch sample_quadratures(const GaussianState& state, std::span<const QuadratureAddress> addresses,
                                      std::size_t n, std::uint64_t seed) {
    const auto f = functionals_for(addresses);
    return sample_functionals(state, f, n, seed);
}

struct ValidationEntry {
    std::string label;  // "mean(p0)", "var(x1)", "cov(x0,x1)"
    double analytic;
    double empirical;
    double z;
    bool pass;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;
    double threshold;

    bool passed() const {
        return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
    }
};

/// Compares a batch against the analytic moments of `state`: each mean,
/// variance and covariance gets a z-score against its large-n standard error.
inline ValidationReport compare_with_analytic(const GaussianState& state, std::span<const Functional> functionals,
                                              const SampleBatch& batch, double threshold = kDefaultThreshold) {
    const Eigen::MatrixXd u = detail::directions(state, functionals);
    if (batch.values.cols() != u.cols()) throw std::invalid_argument("batch does not match the functionals");
    const Eigen::VectorXd mu = u.transpose() * state.mean();
    const Eigen::MatrixXd sigma = u.transpose() * state.cov() * u;
    const auto n = static_cast<double>(batch.n);
    const Eigen::RowVectorXd emp_mean = batch.values.colwise().mean();
    const Eigen::MatrixXd centered = batch.values.rowwise() - emp_mean;
    const Eigen::MatrixXd emp_cov = centered.transpose() * centered / (n - 1);

    ValidationReport report{{}, threshold};
    auto add = [&](std::string label, double analytic, double empirical, double se) {
        const double z = se > 0 ? (empirical - analytic) / se : (empirical == analytic ? 0.0 : INFINITY);
        report.entries.push_back({std::move(label), analytic, empirical, z, std::abs(z) <= threshold});
    };
    const auto k = u.cols();
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& li = functionals[static_cast<std::size_t>(i)].label;
        add(fmt::format("mean({})", li), mu(i), emp_mean(i), std::sqrt(sigma(i, i) / n));
    }
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = i; j < k; ++j) {
            const auto& li = functionals[static_cast<std::size_t>(i)].label;
            const auto& lj = functionals[static_cast<std::size_t>(j)].label;
            // Var of a sample covariance of a bivariate normal: (s_ii s_jj + s_ij^2) / n.
            const double se = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / n);
            add(i == j ? fmt::format("var({})", li) : fmt::format("cov({},{})", li, lj), sigma(i, j),
                emp_cov(i, j), se);
        }
    }
    return report;
}

inline ValidationReport validate_against_analytic(const GaussianState& state, std::span<const Functional> functionals,
                                                  std::size_t n = kDefaultSamples, std::uint64_t seed = 0,
                                                  double threshold = kDefaultThreshold) {
    if (n < 1000) throw std::invalid_argument(fmt::format("validation needs n >= 1000, got {}", n));
    return compare_with_analytic(state, functionals, sample_functionals(state, functionals, n, seed), threshold);
}

inline ValidationReport validate_against_analytic(const GaussianState& state,
                                                  std::span<const QuadratureAddress> addresses,
                                                  std::size_t n = kDefaultSamples, std::uint64_t seed = 0,
                                                  double threshold = kDefaultThreshold) {
    const auto f = functionals_for(addresses);
    return validate_against_analytic(state, std::span<const Functional>(f), n, seed, threshold);
}

}  // namespace cverase::mc
