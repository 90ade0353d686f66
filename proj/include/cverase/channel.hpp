#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <type_traits>
#include <utility>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "cverase/gaussian_state.hpp"

namespace cverase {

/// Gaussian channel from n_in to n_out modes:
///   mean -> X mean + d,   cov -> X cov X^T + Y.
///
/// Channels compose with then(), so a whole optical setup can be reduced to
/// one map before it touches a state. Cancellations between paths then happen
/// in X, where the entries are O(1), instead of in a covariance that may carry
/// a 60 dB noise floor.
///
/// Channels built only from passive optics, loss and mode discards map vacuum
/// to vacuum (X X^T + Y = I). They carry a flag and are applied as
/// I + X (cov - I) X^T, which keeps vacuum exactly invariant.
template <std::floating_point Real>
class BasicGaussianChannel {
  public:
    using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

    BasicGaussianChannel(std::size_t n_in, std::size_t n_out, Matrix transfer, Matrix noise,
                         Vector shift, bool preserves_vacuum = false)
        : n_in_{n_in},
          n_out_{n_out},
          transfer_{std::move(transfer)},
          noise_{std::move(noise)},
          shift_{std::move(shift)},
          preserves_vacuum_{preserves_vacuum} {
        const auto in = static_cast<Eigen::Index>(2 * n_in_);
        const auto out = static_cast<Eigen::Index>(2 * n_out_);
        if (n_in_ == 0 || n_out_ == 0) throw std::invalid_argument("channels need at least one mode");
        if (transfer_.rows() != out || transfer_.cols() != in || noise_.rows() != out ||
            noise_.cols() != out || shift_.size() != out) {
            throw std::invalid_argument("channel matrices have inconsistent dimensions");
        }
    }

    static BasicGaussianChannel identity(std::size_t n_modes) {
        const auto dim = static_cast<Eigen::Index>(2 * n_modes);
        return {n_modes, n_modes, Matrix::Identity(dim, dim), Matrix::Zero(dim, dim),
                Vector::Zero(dim), true};
    }

    std::size_t n_in() const { return n_in_; }
    std::size_t n_out() const { return n_out_; }
    const Matrix& transfer() const { return transfer_; }
    const Matrix& noise() const { return noise_; }
    const Vector& shift() const { return shift_; }
    bool preserves_vacuum() const { return preserves_vacuum_; }

    /// The channel that applies *this first and `next` afterwards.
    BasicGaussianChannel then(const BasicGaussianChannel& next) const {
        if (next.n_in_ != n_out_) {
            throw std::invalid_argument(fmt::format(
                "cannot compose a {}-mode output with a {}-mode input", n_out_, next.n_in_));
        }
        Matrix noise = next.transfer_ * noise_ * next.transfer_.transpose() + next.noise_;
        noise = ((noise + noise.transpose()) / Real(2)).eval();
        return {n_in_,
                next.n_out_,
                next.transfer_ * transfer_,
                std::move(noise),
                next.transfer_ * shift_ + next.shift_,
                preserves_vacuum_ && next.preserves_vacuum_};
    }

  private:
    std::size_t n_in_;
    std::size_t n_out_;
    Matrix transfer_;
    Matrix noise_;
    Vector shift_;
    bool preserves_vacuum_;
};

using GaussianChannel = BasicGaussianChannel<double>;

template <std::floating_point Real>
BasicGaussianState<Real> apply(const BasicGaussianChannel<Real>& channel,
                               const BasicGaussianState<Real>& state) {
    using S = BasicGaussianState<Real>;
    if (state.n_modes() != channel.n_in()) {
        throw std::invalid_argument(fmt::format("channel expects {} modes, state has {}",
                                                channel.n_in(), state.n_modes()));
    }
    const auto& x = channel.transfer();
    typename S::Vector mean = x * state.mean() + channel.shift();
    typename S::Matrix cov;
    if (channel.preserves_vacuum()) {
        const auto in = state.cov().rows();
        const auto out = x.rows();
        cov = x * (state.cov() - S::Matrix::Identity(in, in)) * x.transpose();
        cov += S::Matrix::Identity(out, out);
    } else {
        cov = x * state.cov() * x.transpose() + channel.noise();
    }
    return S::assume_symmetric(std::move(mean), std::move(cov));
}

/// Coefficients w of an output functional c^T r expressed on the input
/// quadratures: c^T (X r + d) = w^T r + c^T d.
template <std::floating_point Real>
Eigen::Matrix<Real, Eigen::Dynamic, 1> pullback(const BasicGaussianChannel<Real>& channel,
                                                const Eigen::Matrix<Real, Eigen::Dynamic, 1>& c) {
    if (c.size() != channel.transfer().rows()) {
        throw std::invalid_argument("functional does not match the channel output dimension");
    }
    return channel.transfer().transpose() * c;
}

/// Variance of the output functional c^T r, evaluated on the input state
/// without forming the output covariance.
template <std::floating_point Real>
Real output_variance(const BasicGaussianChannel<Real>& channel, const BasicGaussianState<Real>& input,
                     const Eigen::Matrix<Real, Eigen::Dynamic, 1>& c) {
    if (input.n_modes() != channel.n_in()) {
        throw std::invalid_argument("state does not match the channel input");
    }
    const auto w = pullback(channel, c);
    if (channel.preserves_vacuum()) {
        const auto dim = input.cov().rows();
        return c.squaredNorm() +
               w.dot((input.cov() - BasicGaussianState<Real>::Matrix::Identity(dim, dim)) * w);
    }
    return w.dot(input.cov() * w) + c.dot(channel.noise() * c);
}

template <std::floating_point Real>
Real output_mean(const BasicGaussianChannel<Real>& channel, const BasicGaussianState<Real>& input,
                 const Eigen::Matrix<Real, Eigen::Dynamic, 1>& c) {
    if (input.n_modes() != channel.n_in()) {
        throw std::invalid_argument("state does not match the channel input");
    }
    return pullback(channel, c).dot(input.mean()) + c.dot(channel.shift());
}

namespace detail {

inline void check_mode(std::size_t n_modes, std::size_t mode) {
    if (mode >= n_modes) {
        throw std::invalid_argument(
            fmt::format("mode index {} out of range for a {}-mode system", mode, n_modes));
    }
}

template <std::floating_point Real>
BasicGaussianChannel<Real> local(std::size_t n_modes, std::size_t mode,
                                 const Eigen::Matrix<Real, 2, 2>& transfer,
                                 const Eigen::Matrix<Real, 2, 2>& noise, bool preserves_vacuum) {
    check_mode(n_modes, mode);
    auto ch = BasicGaussianChannel<Real>::identity(n_modes);
    auto x = ch.transfer();
    auto y = ch.noise();
    const auto k = static_cast<Eigen::Index>(2 * mode);
    x.template block<2, 2>(k, k) = transfer;
    y.template block<2, 2>(k, k) = noise;
    return {n_modes, n_modes, std::move(x), std::move(y), ch.shift(), preserves_vacuum};
}

}  // namespace detail

/// Two-mode mixer with power transmittance T:
///   out_i = sqrt(T) in_i + sqrt(1-T) in_j,   out_j = sqrt(1-T) in_i - sqrt(T) in_j,
/// applied identically to the x and p quadratures.
template <std::floating_point Real = double>
BasicGaussianChannel<Real> beamsplitter_channel(std::size_t n_modes, std::size_t mode_i,
                                                std::size_t mode_j, std::type_identity_t<Real> T) {
    detail::check_mode(n_modes, mode_i);
    detail::check_mode(n_modes, mode_j);
    if (mode_i == mode_j) throw std::invalid_argument("beam splitter needs two distinct modes");
    if (!(T >= 0 && T <= 1)) {
        throw std::invalid_argument(fmt::format("transmittance must lie in [0, 1], got {}", double(T)));
    }
    const Real t = std::sqrt(T);
    const Real r = std::sqrt(Real(1) - T);
    auto ch = BasicGaussianChannel<Real>::identity(n_modes);
    auto x = ch.transfer();
    const auto i = static_cast<Eigen::Index>(2 * mode_i);
    const auto j = static_cast<Eigen::Index>(2 * mode_j);
    for (Eigen::Index q = 0; q < 2; ++q) {
        x(i + q, i + q) = t;
        x(i + q, j + q) = r;
        x(j + q, i + q) = r;
        x(j + q, j + q) = -t;
    }
    return {n_modes, n_modes, std::move(x), ch.noise(), ch.shift(), true};
}

template <std::floating_point Real = double>
BasicGaussianChannel<Real> rotation_channel(std::size_t n_modes, std::size_t mode,
                                            std::type_identity_t<Real> phi) {
    if (!std::isfinite(phi)) throw std::invalid_argument("rotation angle must be finite");
    return detail::local<Real>(n_modes, mode, rotation_matrix<Real>(phi),
                               Eigen::Matrix<Real, 2, 2>::Zero(), true);
}

/// Scales the theta quadrature by sqrt(s) and its conjugate by 1/sqrt(s).
template <std::floating_point Real = double>
BasicGaussianChannel<Real> squeeze_channel(std::size_t n_modes, std::size_t mode,
                                           std::type_identity_t<Real> s,
                                           std::type_identity_t<Real> theta) {
    if (!(s > 0) || !std::isfinite(s)) {
        throw std::invalid_argument(fmt::format("squeeze factor must be positive, got {}", double(s)));
    }
    const Eigen::Matrix<Real, 2, 2> r = rotation_matrix<Real>(theta);
    const Eigen::Matrix<Real, 2, 2> d =
        Eigen::Matrix<Real, 2, 1>(std::sqrt(s), Real(1) / std::sqrt(s)).asDiagonal();
    return detail::local<Real>(n_modes, mode, r * d * r.transpose(),
                               Eigen::Matrix<Real, 2, 2>::Zero(), s == 1);
}

template <std::floating_point Real = double>
BasicGaussianChannel<Real> displacement_channel(std::size_t n_modes, std::size_t mode,
                                                std::type_identity_t<Real> dx,
                                                std::type_identity_t<Real> dp) {
    detail::check_mode(n_modes, mode);
    if (!std::isfinite(dx) || !std::isfinite(dp)) {
        throw std::invalid_argument("displacement must be finite");
    }
    const auto dim = static_cast<Eigen::Index>(2 * n_modes);
    typename BasicGaussianChannel<Real>::Vector d = BasicGaussianChannel<Real>::Vector::Zero(dim);
    d(2 * mode) = dx;
    d(2 * mode + 1) = dp;
    // Not flagged vacuum-preserving: the flag asserts the mean of vacuum stays 0.
    return {n_modes, n_modes, BasicGaussianChannel<Real>::Matrix::Identity(dim, dim),
            BasicGaussianChannel<Real>::Matrix::Zero(dim, dim), std::move(d), false};
}

/// Beam splitter of transmittance eta against vacuum, vacuum port discarded.
template <std::floating_point Real = double>
BasicGaussianChannel<Real> loss_channel(std::size_t n_modes, std::size_t mode,
                                        std::type_identity_t<Real> eta) {
    if (!(eta >= 0 && eta <= 1)) {
        throw std::invalid_argument(fmt::format("efficiency must lie in [0, 1], got {}", double(eta)));
    }
    return detail::local<Real>(n_modes, mode,
                               std::sqrt(eta) * Eigen::Matrix<Real, 2, 2>::Identity(),
                               (Real(1) - eta) * Eigen::Matrix<Real, 2, 2>::Identity(), true);
}

/// Classical Gaussian noise of variance `added` along one quadrature.
template <std::floating_point Real = double>
BasicGaussianChannel<Real> noise_channel(std::size_t n_modes, const QuadratureAddress& address,
                                         std::type_identity_t<Real> added) {
    if (!(added >= 0) || !std::isfinite(added)) {
        throw std::invalid_argument(fmt::format("added noise must be non-negative, got {}", double(added)));
    }
    const Eigen::Matrix<Real, 2, 1> u(std::cos(Real(address.theta())), std::sin(Real(address.theta())));
    return detail::local<Real>(n_modes, address.mode(), Eigen::Matrix<Real, 2, 2>::Identity(),
                               added * u * u.transpose(), added == 0);
}

/// Partial trace over one mode.
template <std::floating_point Real = double>
BasicGaussianChannel<Real> discard_channel(std::size_t n_modes, std::size_t mode) {
    detail::check_mode(n_modes, mode);
    if (n_modes == 1) throw std::invalid_argument("cannot discard the last remaining mode");
    const auto keep = remaining_indices(n_modes, mode);
    const auto dim = static_cast<Eigen::Index>(2 * n_modes);
    const auto out = static_cast<Eigen::Index>(keep.size());
    typename BasicGaussianChannel<Real>::Matrix x = BasicGaussianChannel<Real>::Matrix::Zero(out, dim);
    for (Eigen::Index row = 0; row < out; ++row) x(row, keep[static_cast<std::size_t>(row)]) = 1;
    return {n_modes, n_modes - 1, std::move(x), BasicGaussianChannel<Real>::Matrix::Zero(out, out),
            BasicGaussianChannel<Real>::Vector::Zero(out), true};
}

/// Unconditional (ensemble) effect of measuring `meter` and displacing the
/// target mode along the target quadrature by -gain times the outcome. The
/// meter mode is consumed by the detector. Quadratures of the target mode
/// orthogonal to the target direction are untouched.
template <std::floating_point Real = double>
BasicGaussianChannel<Real> feedforward_channel(std::size_t n_modes, const QuadratureAddress& meter,
                                               const QuadratureAddress& target,
                                               std::type_identity_t<Real> gain) {
    detail::check_mode(n_modes, meter.mode());
    detail::check_mode(n_modes, target.mode());
    if (meter.mode() == target.mode()) {
        throw std::invalid_argument("feed-forward meter and target must be different modes");
    }
    if (!std::isfinite(gain)) throw std::invalid_argument("feed-forward gain must be finite");
    const auto dim = static_cast<Eigen::Index>(2 * n_modes);
    using Ch = BasicGaussianChannel<Real>;
    const auto u_t = direction<Real>(target, n_modes);
    const auto u_m = direction<Real>(meter, n_modes);
    typename Ch::Matrix x = Ch::Matrix::Identity(dim, dim) - gain * u_t * u_m.transpose();
    Ch kick(n_modes, n_modes, std::move(x), Ch::Matrix::Zero(dim, dim), Ch::Vector::Zero(dim), gain == 0);
    return kick.then(discard_channel<Real>(n_modes, meter.mode()));
}

}  // namespace cverase
