#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace cverase {

/// Quadrature variance of the vacuum. Everything in this library is in
/// shot-noise units.
inline constexpr double kVacuumVariance = 1.0;

/// Largest tolerated asymmetry |cov - cov^T| for user-supplied covariances.
inline constexpr double kSymmetryTolerance = 1e-10;

/// Symplectic eigenvalues may dip this far below 1 and still count as
/// physical (rounding accumulated over a chain of operations).
inline constexpr double kPhysicalityTolerance = 1e-9;

/// Selects the rotated quadrature x cos(theta) + p sin(theta) of one mode.
///
/// theta and theta + pi address the same axis, so theta is stored reduced to
/// [0, pi). theta = 0 is the amplitude quadrature, theta = pi/2 the phase
/// quadrature.
class QuadratureAddress {
  public:
    QuadratureAddress(std::size_t mode, double theta) : mode_{mode}, theta_{reduce(theta)} {}

    static QuadratureAddress amplitude(std::size_t mode) { return {mode, 0.0}; }
    static QuadratureAddress phase(std::size_t mode) { return {mode, std::numbers::pi / 2}; }

    std::size_t mode() const { return mode_; }
    double theta() const { return theta_; }

    friend bool operator==(const QuadratureAddress&, const QuadratureAddress&) = default;

  private:
    static double reduce(double theta) {
        if (!std::isfinite(theta)) {
            throw std::invalid_argument("quadrature angle must be finite");
        }
        double r = std::fmod(theta, std::numbers::pi);
        if (r < 0) r += std::numbers::pi;
        if (r >= std::numbers::pi) r = 0.0;
        return r;
    }

    std::size_t mode_;
    double theta_;
};

/// Gaussian state of N optical modes: mean vector and covariance matrix over
/// the interleaved quadratures (x1, p1, ..., xN, pN). Vacuum has cov = I.
///
/// Values are immutable; every operation returns a new state.
template <std::floating_point Real>
class BasicGaussianState {
  public:
    using Scalar = Real;
    using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

    /// Validates dimensions and symmetry. Asymmetry up to kSymmetryTolerance
    /// is repaired by averaging with the transpose.
    BasicGaussianState(Vector mean, Matrix cov) : mean_{std::move(mean)}, cov_{std::move(cov)} {
        check_shape();
        const Real asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
        if (!(asym <= Real(kSymmetryTolerance))) {
            throw std::invalid_argument(
                fmt::format("covariance is not symmetric (max asymmetry {:.3e})", double(asym)));
        }
        cov_ = ((cov_ + cov_.transpose()) / Real(2)).eval();
    }

    /// Constructs from a covariance that is symmetric in exact arithmetic
    /// (the output of a congruence) and only needs rounding repaired.
    static BasicGaussianState assume_symmetric(Vector mean, Matrix cov) {
        BasicGaussianState s;
        s.mean_ = std::move(mean);
        s.cov_ = std::move(cov);
        s.check_shape();
        s.cov_ = ((s.cov_ + s.cov_.transpose()) / Real(2)).eval();
        return s;
    }

    std::size_t n_modes() const { return static_cast<std::size_t>(mean_.size() / 2); }
    const Vector& mean() const { return mean_; }
    const Matrix& cov() const { return cov_; }

    /// 2x2 covariance block of one mode.
    Eigen::Matrix<Real, 2, 2> mode_cov(std::size_t mode) const {
        check_mode(mode);
        return cov_.template block<2, 2>(2 * mode, 2 * mode);
    }

    Eigen::Matrix<Real, 2, 1> mode_mean(std::size_t mode) const {
        check_mode(mode);
        return mean_.template segment<2>(2 * mode);
    }

    void check_mode(std::size_t mode) const {
        if (mode >= n_modes()) {
            throw std::invalid_argument(
                fmt::format("mode index {} out of range for a {}-mode state", mode, n_modes()));
        }
    }

    void check_address(const QuadratureAddress& address) const { check_mode(address.mode()); }

    friend bool operator==(const BasicGaussianState& a, const BasicGaussianState& b) {
        return a.mean_ == b.mean_ && a.cov_ == b.cov_;
    }

  private:
    BasicGaussianState() = default;

    void check_shape() const {
        if (mean_.size() == 0 || mean_.size() % 2 != 0) {
            throw std::invalid_argument("mean must have positive even length 2*n_modes");
        }
        if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
            throw std::invalid_argument(fmt::format("covariance must be {0}x{0}, got {1}x{2}",
                                                    mean_.size(), cov_.rows(), cov_.cols()));
        }
        if (!mean_.allFinite() || !cov_.allFinite()) {
            throw std::invalid_argument("state contains non-finite entries");
        }
    }

    Vector mean_;
    Matrix cov_;
};

using GaussianState = BasicGaussianState<double>;

/// Unit phase-space direction (cos theta, sin theta) of an address, embedded
/// in the 2N-dimensional quadrature space.
template <std::floating_point Real>
Eigen::Matrix<Real, Eigen::Dynamic, 1> direction(const QuadratureAddress& address,
                                                 std::size_t n_modes) {
    if (address.mode() >= n_modes) {
        throw std::invalid_argument(
            fmt::format("mode index {} out of range for a {}-mode state", address.mode(), n_modes));
    }
    Eigen::Matrix<Real, Eigen::Dynamic, 1> u =
        Eigen::Matrix<Real, Eigen::Dynamic, 1>::Zero(static_cast<Eigen::Index>(2 * n_modes));
    u(2 * address.mode()) = std::cos(Real(address.theta()));
    u(2 * address.mode() + 1) = std::sin(Real(address.theta()));
    return u;
}

/// Phase-space rotation by phi: (x, p) -> (x cos phi - p sin phi, x sin phi + p cos phi).
template <std::floating_point Real>
Eigen::Matrix<Real, 2, 2> rotation_matrix(Real phi) {
    Eigen::Matrix<Real, 2, 2> r;
    r << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    return r;
}

template <std::floating_point Real = double>
BasicGaussianState<Real> vacuum(std::size_t n_modes) {
    if (n_modes == 0) throw std::invalid_argument("vacuum needs at least one mode");
    const auto dim = static_cast<Eigen::Index>(2 * n_modes);
    using S = BasicGaussianState<Real>;
    return S(S::Vector::Zero(dim), S::Matrix::Identity(dim, dim));
}

/// Pure single-mode squeezed vacuum with variance `s` along the quadrature at
/// angle theta and 1/s along the conjugate one. Anti-squeezing is expressed
/// by rotating theta, so s must lie in (0, 1].
template <std::floating_point Real = double>
BasicGaussianState<Real> squeezed_vacuum(std::type_identity_t<Real> s,
                                         std::type_identity_t<Real> theta) {
    if (!(s > 0 && s <= 1)) {
        throw std::invalid_argument(fmt::format("squeezed variance must lie in (0, 1], got {}", double(s)));
    }
    const Eigen::Matrix<Real, 2, 2> r = rotation_matrix<Real>(theta);
    const Eigen::Matrix<Real, 2, 2> d = Eigen::Vector<Real, 2>(s, Real(1) / s).asDiagonal();
    using S = BasicGaussianState<Real>;
    return S::assume_symmetric(S::Vector::Zero(2), r * d * r.transpose());
}

template <std::floating_point Real>
BasicGaussianState<Real> tensor(const BasicGaussianState<Real>& a, const BasicGaussianState<Real>& b) {
    using S = BasicGaussianState<Real>;
    const auto na = a.mean().size();
    const auto nb = b.mean().size();
    typename S::Vector mean(na + nb);
    mean << a.mean(), b.mean();
    typename S::Matrix cov = S::Matrix::Zero(na + nb, na + nb);
    cov.topLeftCorner(na, na) = a.cov();
    cov.bottomRightCorner(nb, nb) = b.cov();
    return S::assume_symmetric(std::move(mean), std::move(cov));
}

/// Quadrature indices (into mean/cov) of every mode except `mode`.
inline std::vector<Eigen::Index> remaining_indices(std::size_t n_modes, std::size_t mode) {
    std::vector<Eigen::Index> keep;
    keep.reserve(2 * n_modes);
    for (std::size_t k = 0; k < n_modes; ++k) {
        if (k == mode) continue;
        keep.push_back(static_cast<Eigen::Index>(2 * k));
        keep.push_back(static_cast<Eigen::Index>(2 * k + 1));
    }
    return keep;
}

/// Removes a mode (partial trace). Empty states are not representable.
template <std::floating_point Real>
BasicGaussianState<Real> trace_out(const BasicGaussianState<Real>& state, std::size_t mode) {
    state.check_mode(mode);
    if (state.n_modes() == 1) {
        throw std::invalid_argument("cannot trace out the last remaining mode");
    }
    using S = BasicGaussianState<Real>;
    const auto keep = remaining_indices(state.n_modes(), mode);
    return S::assume_symmetric(state.mean()(keep), state.cov()(keep, keep));
}

template <std::floating_point Real>
Real quad_variance(const BasicGaussianState<Real>& state, const QuadratureAddress& address) {
    state.check_address(address);
    const Eigen::Matrix<Real, 2, 1> u(std::cos(Real(address.theta())), std::sin(Real(address.theta())));
    return u.dot(state.mode_cov(address.mode()) * u);
}

template <std::floating_point Real>
Real quad_mean(const BasicGaussianState<Real>& state, const QuadratureAddress& address) {
    state.check_address(address);
    const Eigen::Matrix<Real, 2, 1> u(std::cos(Real(address.theta())), std::sin(Real(address.theta())));
    return u.dot(state.mode_mean(address.mode()));
}

/// Standard antisymmetric form, block-diagonal with [[0, 1], [-1, 0]] per mode.
template <std::floating_point Real = double>
Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> symplectic_form(std::size_t n_modes) {
    const auto dim = static_cast<Eigen::Index>(2 * n_modes);
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> omega =
        Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>::Zero(dim, dim);
    for (Eigen::Index k = 0; k < dim; k += 2) {
        omega(k, k + 1) = 1;
        omega(k + 1, k) = -1;
    }
    return omega;
}

/// Symplectic eigenvalues in ascending order, or an empty vector if the
/// covariance is not positive definite (no Williamson form exists).
///
/// Computed from the spectrum of K^T K with K = cov^(1/2) Omega cov^(1/2),
/// whose eigenvalues are the squared symplectic eigenvalues, each twice.
template <std::floating_point Real>
std::vector<Real> symplectic_eigenvalues(const BasicGaussianState<Real>& state) {
    using Matrix = typename BasicGaussianState<Real>::Matrix;
    const std::size_t n = state.n_modes();
    if (n == 1) {
        const auto& c = state.cov();
        const Real det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
        if (!(c(0, 0) > 0 && det > 0)) return {};
        return {std::sqrt(det)};
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(state.cov());
    if (!(eig.eigenvalues().minCoeff() > 0)) return {};
    const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
                        eig.eigenvectors().transpose();
    const Matrix k = root * symplectic_form<Real>(n) * root;
    Eigen::SelfAdjointEigenSolver<Matrix> kk(k.transpose() * k, Eigen::EigenvaluesOnly);
    std::vector<Real> nu;
    nu.reserve(n);
    for (Eigen::Index i = 0; i < kk.eigenvalues().size(); i += 2) {
        // Pairs are degenerate; average them to damp rounding.
        const Real sq = (kk.eigenvalues()(i) + kk.eigenvalues()(i + 1)) / 2;
        nu.push_back(std::sqrt(std::max(sq, Real(0))));
    }
    return nu;
}

/// True if cov + i Omega >= 0, i.e. every symplectic eigenvalue is at least
/// 1 - kPhysicalityTolerance.
template <std::floating_point Real>
bool is_physical(const BasicGaussianState<Real>& state) {
    const auto nu = symplectic_eigenvalues(state);
    if (nu.empty()) return false;
    return nu.front() >= Real(1) - Real(kPhysicalityTolerance);
}

/// Converts between floating-point precisions.
template <std::floating_point To, std::floating_point From>
BasicGaussianState<To> state_cast(const BasicGaussianState<From>& state) {
    using S = BasicGaussianState<To>;
    return S::assume_symmetric(state.mean().template cast<To>(), state.cov().template cast<To>());
}

}  // namespace cverase
