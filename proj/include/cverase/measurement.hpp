#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "cverase/channel.hpp"
#include "cverase/errors.hpp"
#include "cverase/gaussian_state.hpp"

namespace cverase {

/// Meter variances at or below this are treated as degenerate.
inline constexpr double kDegenerateVariance = 1e-12;

/// Outcome of a homodyne detection together with the post-measurement state
/// of the modes that were not detected.
template <std::floating_point Real>
struct BasicMeasurementRecord {
    QuadratureAddress address;
    Real outcome;
    Real prior_variance;
    BasicGaussianState<Real> conditioned_state;
};

using MeasurementRecord = BasicMeasurementRecord<double>;

/// One summand coefficient * q(address) of a linear combination of
/// photocurrents.
struct Term {
    QuadratureAddress address;
    double coefficient;
};

/// How the subtraction / feed-forward gain G in  target - G * meter  is chosen.
class GainStrategy {
  public:
    enum class Kind { fixed, optimal, cancellation };

    static GainStrategy fixed(double gain) { return GainStrategy(Kind::fixed, gain); }
    /// Least-squares gain Cov(target, meter) / Var(meter).
    static GainStrategy optimal() { return GainStrategy(Kind::optimal, 0.0); }
    /// -sqrt((1-T)/T): removes the marker from the conditioned quadrature exactly.
    static GainStrategy cancellation() { return GainStrategy(Kind::cancellation, 0.0); }

    Kind kind() const { return kind_; }
    /// Only meaningful for Kind::fixed.
    double gain() const { return gain_; }

    friend bool operator==(const GainStrategy&, const GainStrategy&) = default;

  private:
    GainStrategy(Kind kind, double gain) : kind_{kind}, gain_{gain} {}
    Kind kind_;
    double gain_;
};

/// Coefficient vector c over the 2N quadratures for sum_k coefficient_k q(address_k).
template <std::floating_point Real>
Eigen::Matrix<Real, Eigen::Dynamic, 1> combination_vector(std::size_t n_modes, std::span<const Term> terms) {
    if (terms.empty()) throw std::invalid_argument("a combination needs at least one term");
    Eigen::Matrix<Real, Eigen::Dynamic, 1> c =
        Eigen::Matrix<Real, Eigen::Dynamic, 1>::Zero(static_cast<Eigen::Index>(2 * n_modes));
    for (const auto& t : terms) c += Real(t.coefficient) * direction<Real>(t.address, n_modes);
    return c;
}

template <std::floating_point Real>
Real combination_variance(const BasicGaussianState<Real>& state, std::span<const Term> terms) {
    const auto c = combination_vector<Real>(state.n_modes(), terms);
    return c.dot(state.cov() * c);
}

template <std::floating_point Real>
Real combination_mean(const BasicGaussianState<Real>& state, std::span<const Term> terms) {
    return combination_vector<Real>(state.n_modes(), terms).dot(state.mean());
}

/// Projects the state on outcome `outcome` of the homodyne measurement of
/// `address` (Schur-complement update of the joint Gaussian). The detected
/// mode is removed along with its unmeasured conjugate quadrature.
template <std::floating_point Real>
BasicMeasurementRecord<Real> homodyne_condition(const BasicGaussianState<Real>& state,
                                                const QuadratureAddress& address,
                                                std::type_identity_t<Real> outcome) {
    using S = BasicGaussianState<Real>;
    if (state.n_modes() < 2) {
        throw std::invalid_argument("homodyne conditioning needs at least two modes");
    }
    state.check_address(address);
    if (!std::isfinite(outcome)) throw std::invalid_argument("outcome must be finite");
    const auto u = direction<Real>(address, state.n_modes());
    const typename S::Vector sigma = state.cov() * u;
    const Real v = u.dot(sigma);
    if (!(v > Real(kDegenerateVariance))) {
        throw DegenerateMeasurement(
            fmt::format("measured quadrature has variance {:.3e}; cannot condition on it", double(v)));
    }
    const Real innovation = outcome - u.dot(state.mean());
    const auto keep = remaining_indices(state.n_modes(), address.mode());
    const typename S::Vector s = sigma(keep);
    typename S::Vector mean = state.mean()(keep) + s * (innovation / v);
    typename S::Matrix cov = state.cov()(keep, keep) - s * s.transpose() / v;
    return {address, outcome, v, S::assume_symmetric(std::move(mean), std::move(cov))};
}

/// Draws the outcome from the marginal N(mean, variance) and conditions on it.
template <std::floating_point Real, std::uniform_random_bit_generator Rng>
BasicMeasurementRecord<Real> homodyne_sample(const BasicGaussianState<Real>& state,
                                             const QuadratureAddress& address, Rng& rng) {
    state.check_address(address);
    const Real v = quad_variance(state, address);
    if (!(v > Real(kDegenerateVariance))) {
        throw DegenerateMeasurement(
            fmt::format("measured quadrature has variance {:.3e}; cannot sample it", double(v)));
    }
    std::normal_distribution<double> normal(double(quad_mean(state, address)), std::sqrt(double(v)));
    return homodyne_condition(state, address, Real(normal(rng)));
}

template <std::floating_point Real>
BasicMeasurementRecord<Real> homodyne_sample(const BasicGaussianState<Real>& state,
                                             const QuadratureAddress& address, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return homodyne_sample(state, address, rng);
}

inline double cancellation_gain(double T) {
    if (!(T > 0 && T < 1)) {
        throw std::invalid_argument(fmt::format("cancellation gain needs 0 < T < 1, got {}", T));
    }
    return -std::sqrt((1 - T) / T);
}

/// Least-squares gain minimising Var(target - G * meter).
template <std::floating_point Real>
Real optimal_gain(const BasicGaussianState<Real>& state, const QuadratureAddress& target,
                  const QuadratureAddress& meter) {
    state.check_address(target);
    state.check_address(meter);
    if (target.mode() == meter.mode()) {
        throw std::invalid_argument("target and meter must be on different modes");
    }
    const auto u_t = direction<Real>(target, state.n_modes());
    const auto u_m = direction<Real>(meter, state.n_modes());
    const Real v = u_m.dot(state.cov() * u_m);
    if (!(v > Real(kDegenerateVariance))) {
        throw DegenerateMeasurement(fmt::format("meter variance {:.3e} is degenerate", double(v)));
    }
    return u_t.dot(state.cov() * u_m) / v;
}

/// Turns a strategy into a number. Cancellation needs the coupler
/// transmittance.
template <std::floating_point Real>
Real resolve_gain(const GainStrategy& strategy, const BasicGaussianState<Real>& state,
                  const QuadratureAddress& target, const QuadratureAddress& meter,
                  std::optional<double> transmittance = std::nullopt) {
    switch (strategy.kind()) {
        case GainStrategy::Kind::fixed:
            return Real(strategy.gain());
        case GainStrategy::Kind::optimal:
            return optimal_gain(state, target, meter);
        case GainStrategy::Kind::cancellation:
            if (!transmittance) {
                throw std::invalid_argument("cancellation gain requires the coupler transmittance");
            }
            return Real(cancellation_gain(*transmittance));
    }
    throw std::invalid_argument("unknown gain strategy");
}

/// Ensemble output of measure-and-displace: the target quadrature becomes
/// target - gain * meter, the meter mode is consumed.
template <std::floating_point Real>
BasicGaussianState<Real> feedforward(const BasicGaussianState<Real>& state, const QuadratureAddress& meter,
                                     const QuadratureAddress& target, std::type_identity_t<Real> gain) {
    if (state.n_modes() < 2) throw std::invalid_argument("feed-forward needs at least two modes");
    return apply(feedforward_channel<Real>(state.n_modes(), meter, target, gain), state);
}

template <std::floating_point Real>
BasicGaussianState<Real> feedforward(const BasicGaussianState<Real>& state, const QuadratureAddress& meter,
                                     const QuadratureAddress& target, const GainStrategy& strategy,
                                     std::optional<double> transmittance = std::nullopt) {
    if (meter.mode() == target.mode()) {
        throw std::invalid_argument("feed-forward meter and target must be different modes");
    }
    return feedforward(state, meter, target, resolve_gain(strategy, state, target, meter, transmittance));
}

template <std::floating_point Real>
struct BasicFeedforwardTrajectory {
    Real outcome;
    BasicGaussianState<Real> state;
};

using FeedforwardTrajectory = BasicFeedforwardTrajectory<double>;

/// One stochastic run: sample the meter, condition, then displace the target
/// quadrature by -gain * outcome.
template <std::floating_point Real>
BasicFeedforwardTrajectory<Real> feedforward_trajectory(const BasicGaussianState<Real>& state,
                                                        const QuadratureAddress& meter,
                                                        const QuadratureAddress& target,
                                                        std::type_identity_t<Real> gain,
                                                        std::uint64_t seed) {
    state.check_address(target);
    if (meter.mode() == target.mode()) {
        throw std::invalid_argument("feed-forward meter and target must be different modes");
    }
    auto record = homodyne_sample(state, meter, seed);
    const std::size_t shifted = target.mode() > meter.mode() ? target.mode() - 1 : target.mode();
    const QuadratureAddress moved(shifted, target.theta());
    const auto& cond = record.conditioned_state;
    auto mean = cond.mean();
    mean += (-gain * record.outcome) * direction<Real>(moved, cond.n_modes());
    return {record.outcome, BasicGaussianState<Real>::assume_symmetric(std::move(mean), cond.cov())};
}

}  // namespace cverase
