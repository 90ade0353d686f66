#pragma once

#include <concepts>
#include <cstddef>
#include <type_traits>

#include "cverase/channel.hpp"
#include "cverase/gaussian_state.hpp"

namespace cverase {

// State-level operations. Each one is the matching single-step channel from
// channel.hpp applied to the state.

template <std::floating_point Real>
BasicGaussianState<Real> displace(const BasicGaussianState<Real>& state, std::size_t mode,
                                  std::type_identity_t<Real> dx, std::type_identity_t<Real> dp) {
    return apply(displacement_channel<Real>(state.n_modes(), mode, dx, dp), state);
}

template <std::floating_point Real>
BasicGaussianState<Real> apply_beamsplitter(const BasicGaussianState<Real>& state, std::size_t mode_i,
                                            std::size_t mode_j, std::type_identity_t<Real> T) {
    return apply(beamsplitter_channel<Real>(state.n_modes(), mode_i, mode_j, T), state);
}

template <std::floating_point Real>
BasicGaussianState<Real> apply_phase_rotation(const BasicGaussianState<Real>& state, std::size_t mode,
                                              std::type_identity_t<Real> phi) {
    return apply(rotation_channel<Real>(state.n_modes(), mode, phi), state);
}

template <std::floating_point Real>
BasicGaussianState<Real> apply_loss(const BasicGaussianState<Real>& state, std::size_t mode,
                                    std::type_identity_t<Real> eta) {
    return apply(loss_channel<Real>(state.n_modes(), mode, eta), state);
}

template <std::floating_point Real>
BasicGaussianState<Real> apply_squeeze(const BasicGaussianState<Real>& state, std::size_t mode,
                                       std::type_identity_t<Real> s, std::type_identity_t<Real> theta) {
    return apply(squeeze_channel<Real>(state.n_modes(), mode, s, theta), state);
}

template <std::floating_point Real>
BasicGaussianState<Real> add_classical_noise(const BasicGaussianState<Real>& state,
                                             const QuadratureAddress& address,
                                             std::type_identity_t<Real> added) {
    state.check_address(address);
    return apply(noise_channel<Real>(state.n_modes(), address, added), state);
}

}  // namespace cverase
