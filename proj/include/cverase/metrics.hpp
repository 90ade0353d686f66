#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "cverase/gaussian_state.hpp"

namespace cverase {

/// Transfer gains of a QND coupler with transmittance T: signal -> marker
/// (g_m), signal -> signal (g_s), and the overall gain once the conditioned
/// stage is included (g_e).
struct Gains {
    double marker;
    double signal;
    double erased;
};

inline Gains gains(double T) {
    if (!(T > 0 && T < 1)) {
        throw std::invalid_argument(fmt::format("gains need 0 < T < 1, got {}", T));
    }
    return {std::sqrt(1 - T), std::sqrt(T), 1 / std::sqrt(T)};
}

/// Gain-normalised added noise V_out / g^2 - V_in. Negative values are
/// returned as is.
inline double added_noise(double v_out, double gain, double v_in) {
    if (!(gain > 0)) throw std::invalid_argument(fmt::format("gain must be positive, got {}", gain));
    if (!(v_out >= 0) || !(v_in >= 0)) throw std::invalid_argument("variances must be non-negative");
    return v_out / (gain * gain) - v_in;
}

struct UncertaintyProduct {
    double product;
    bool satisfied;
};

inline UncertaintyProduct uncertainty_product(double n_x, double n_p) {
    const double product = n_x * n_p;
    return {product, product >= 1 - 1e-9};
}

inline double to_dB(double relative_variance) {
    if (!(relative_variance > 0)) {
        throw std::invalid_argument(fmt::format("dB needs a positive variance, got {}", relative_variance));
    }
    return 10 * std::log10(relative_variance);
}

inline double from_dB(double dB) {
    if (!std::isfinite(dB)) throw std::invalid_argument("dB value must be finite");
    return std::pow(10.0, dB / 10);
}

/// Added noise expressed as dB above the quantum noise level.
inline double noise_dB(double added) { return to_dB(1 + added); }

/// Figures of merit of one protocol run.
struct NoiseReport {
    double n_x_label;   // signal amplitude -> marker amplitude
    double n_p_signal;  // broadening of the signal phase
    std::optional<double> n_p_erased;
    std::optional<double> n_x_erased;
    Gains gains;
    double product;

    double n_x_label_dB() const { return noise_dB(n_x_label); }
    double n_p_signal_dB() const { return noise_dB(n_p_signal); }
    std::optional<double> n_p_erased_dB() const {
        return n_p_erased ? std::optional(noise_dB(*n_p_erased)) : std::nullopt;
    }
    std::optional<double> n_x_erased_dB() const {
        return n_x_erased ? std::optional(noise_dB(*n_x_erased)) : std::nullopt;
    }
};

inline NoiseReport make_noise_report(double T, double n_x_label, double n_p_signal,
                                     std::optional<double> n_p_erased = std::nullopt,
                                     std::optional<double> n_x_erased = std::nullopt) {
    return {n_x_label, n_p_signal, n_p_erased, n_x_erased, gains(T), n_x_label * n_p_signal};
}

/// Uhlmann fidelity of two single-mode Gaussian states in shot-noise units:
///   F = 2 exp(-d^T (A+B)^-1 d / 2) / (sqrt(D + L) - sqrt(L)),
/// D = det(A+B), L = (det A - 1)(det B - 1), d the mean difference.
template <std::floating_point Real>
Real fidelity_gaussian(const BasicGaussianState<Real>& a, const BasicGaussianState<Real>& b) {
    if (a.n_modes() != 1 || b.n_modes() != 1) {
        throw std::invalid_argument("fidelity is implemented for single-mode states only");
    }
    if (!is_physical(a) || !is_physical(b)) {
        throw std::invalid_argument("fidelity needs physical states");
    }
    const Eigen::Matrix<Real, 2, 2> sum = a.mode_cov(0) + b.mode_cov(0);
    const Eigen::Matrix<Real, 2, 1> d = a.mode_mean(0) - b.mode_mean(0);
    const Real big_delta = sum.determinant();
    const Real lambda = std::max(Real(0), (a.mode_cov(0).determinant() - 1) * (b.mode_cov(0).determinant() - 1));
    const Real exponent = d.dot(sum.inverse() * d) / 2;
    const Real f = 2 * std::exp(-exponent) / (std::sqrt(big_delta + lambda) - std::sqrt(lambda));
    return std::clamp(f, Real(0), Real(1));
}

/// Level contour of a mode's Wigner function (a 2-D Gaussian): the ellipse
/// where it drops to `level` times its peak.
struct ContourEllipse {
    double center_x;
    double center_p;
    double semi_major;
    double semi_minor;
    double orientation;  // angle of the major axis, [0, pi)
};

/// Peak fraction of the one-standard-deviation ellipse.
inline const double kOneSigmaLevel = std::exp(-0.5);

template <std::floating_point Real>
ContourEllipse wigner_contour(const BasicGaussianState<Real>& state, std::size_t mode,
                              double level = kOneSigmaLevel) {
    if (!(level > 0 && level < 1)) {
        throw std::invalid_argument(fmt::format("contour level must lie in (0, 1), got {}", level));
    }
    const Eigen::Matrix2d cov = state.mode_cov(mode).template cast<double>();
    const Eigen::Vector2d mean = state.mode_mean(mode).template cast<double>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(1);
    if (!(lo > 0)) throw std::invalid_argument("covariance block is not positive definite");
    const double scale = -2 * std::log(level);
    double orientation = 0.0;
    if (hi - lo > 1e-12 * hi) {
        const Eigen::Vector2d v = eig.eigenvectors().col(1);
        orientation = std::atan2(v(1), v(0));
        if (orientation < 0) orientation += std::numbers::pi;
        if (orientation >= std::numbers::pi) orientation -= std::numbers::pi;
    }
    return {mean(0), mean(1), std::sqrt(scale * hi), std::sqrt(scale * lo), orientation};
}

}  // namespace cverase
