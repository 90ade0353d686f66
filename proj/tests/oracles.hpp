#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the measurement or metrics code it is used to check.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cverase/gaussian_state.hpp"

namespace oracle {

/// Conditional covariance of the quadratures `keep` given quadrature
/// `measured`, via the precision matrix of the (keep, measured) marginal:
/// Cov(keep | measured) = ((Sigma_sub^-1)_keep,keep)^-1.
inline Eigen::MatrixXd conditional_cov_by_precision(const Eigen::MatrixXd& cov, const std::vector<int>& keep,
                                                    int measured) {
    std::vector<int> idx = keep;
    idx.push_back(measured);
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd sub(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) sub(i, j) = cov(idx[i], idx[j]);
    const Eigen::MatrixXd precision = sub.inverse();
    return precision.topLeftCorner(n - 1, n - 1).inverse();
}

/// Normalised Wigner function of a single-mode Gaussian in shot-noise units.
inline double wigner(const cverase::GaussianState& s, double x, double p) {
    const Eigen::Matrix2d c = s.mode_cov(0);
    const Eigen::Vector2d d = Eigen::Vector2d(x, p) - s.mode_mean(0);
    return std::exp(-0.5 * d.dot(c.inverse() * d)) / (2 * std::numbers::pi * std::sqrt(c.determinant()));
}

/// Tr(rho sigma) = 4 pi * integral of W_rho W_sigma (shot-noise units), on a
/// square grid with the midpoint rule. Equals the fidelity when one of the
/// two states is pure.
inline double overlap(const cverase::GaussianState& a, const cverase::GaussianState& b, double half_width,
                      int points) {
    const double h = 2 * half_width / points;
    double sum = 0;
    for (int i = 0; i < points; ++i) {
        const double x = -half_width + (i + 0.5) * h;
        for (int j = 0; j < points; ++j) {
            const double p = -half_width + (j + 0.5) * h;
            sum += wigner(a, x, p) * wigner(b, x, p);
        }
    }
    return 4 * std::numbers::pi * sum * h * h;
}

/// Random real symplectic 2x2 block: rotation * squeeze * rotation.
inline Eigen::Matrix2d random_symplectic_2x2(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi);
    std::uniform_real_distribution<double> log_s(-1.0, 1.0);
    auto rot = [](double t) {
        Eigen::Matrix2d r;
        r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
        return r;
    };
    const double r = std::exp(log_s(rng));
    return rot(angle(rng)) * Eigen::Vector2d(r, 1 / r).asDiagonal() * rot(angle(rng));
}

/// Random mixed single-mode state: thermal variance nu >= 1 dressed by a
/// random symplectic, plus a random mean.
inline cverase::GaussianState random_mode(std::mt19937_64& rng, double max_thermal = 3.0) {
    std::uniform_real_distribution<double> thermal(1.0, max_thermal);
    std::normal_distribution<double> shift(0, 1);
    const Eigen::Matrix2d s = random_symplectic_2x2(rng);
    const Eigen::Matrix2d cov = s * (thermal(rng) * Eigen::Matrix2d::Identity()) * s.transpose();
    Eigen::VectorXd mean(2);
    mean << shift(rng), shift(rng);
    return cverase::GaussianState(mean, 0.5 * (cov + cov.transpose()));
}

}  // namespace oracle
