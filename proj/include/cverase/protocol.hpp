#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cverase/channel.hpp"
#include "cverase/errors.hpp"
#include "cverase/gaussian_state.hpp"
#include "cverase/measurement.hpp"
#include "cverase/metrics.hpp"
#include "cverase/operations.hpp"

namespace cverase {

/// Mode layout of every protocol state.
inline constexpr std::size_t kSignalMode = 0;
inline constexpr std::size_t kMarkerMode = 1;

enum class MarkerBasis { amplitude, phase };

struct SignalInput {
    enum class Kind { vacuum, coherent };

    Kind kind = Kind::vacuum;
    double dx = 0.0;
    double dp = 0.0;

    static SignalInput vacuum() { return {}; }
    static SignalInput coherent(double dx, double dp) { return {Kind::coherent, dx, dp}; }

    GaussianState state() const {
        const auto v = cverase::vacuum(1);
        return kind == Kind::vacuum ? v : displace(v, 0, dx, dp);
    }
};

/// One configuration of the eraser.
struct EraserParams {
    double transmittance = 0.477;
    /// Amplitude squeezing of the marker below shot noise, in dB (>= 0).
    double marker_squeeze_dB = 0.0;
    /// Classical phase noise carried by the marker before the coupler.
    double marker_excess_phase_noise = 0.0;
    /// Per-detector efficiency, applied to both output beams.
    double detection_efficiency = 1.0;
    GainStrategy gain_strategy = GainStrategy::cancellation();
    SignalInput signal_input{};
    /// Informational only; the model is single-sideband.
    double sideband_freq_MHz = 20.5;
    /// Residual noise of the feed-forward loop, added to the restored output
    /// (already renormalised), per quadrature.
    double feedforward_noise_x = 0.0;
    double feedforward_noise_p = 0.0;

    void validate() const {
        auto require = [](bool ok, const char* what, double value) {
            if (!ok) throw std::invalid_argument(fmt::format("{} (got {})", what, value));
        };
        require(transmittance > 0 && transmittance < 1, "transmittance must lie in (0, 1)", transmittance);
        require(marker_squeeze_dB >= 0 && std::isfinite(marker_squeeze_dB),
                "marker squeezing must be a finite non-negative dB value", marker_squeeze_dB);
        require(marker_excess_phase_noise >= 0 && std::isfinite(marker_excess_phase_noise),
                "marker excess phase noise must be non-negative", marker_excess_phase_noise);
        require(detection_efficiency >= 0 && detection_efficiency <= 1,
                "detection efficiency must lie in [0, 1]", detection_efficiency);
        require(feedforward_noise_x >= 0 && std::isfinite(feedforward_noise_x),
                "feed-forward noise must be non-negative", feedforward_noise_x);
        require(feedforward_noise_p >= 0 && std::isfinite(feedforward_noise_p),
                "feed-forward noise must be non-negative", feedforward_noise_p);
        require(std::isfinite(signal_input.dx) && std::isfinite(signal_input.dp),
                "signal displacement must be finite", signal_input.dx);
        require(std::isfinite(sideband_freq_MHz), "sideband frequency must be finite", sideband_freq_MHz);
        if (gain_strategy.kind() == GainStrategy::Kind::fixed) {
            require(std::isfinite(gain_strategy.gain()), "fixed gain must be finite", gain_strategy.gain());
        }
    }

    /// Squeezed-quadrature variance of the marker.
    double marker_variance() const { return from_dB(-marker_squeeze_dB); }
};

struct LabeledContour {
    std::string panel;
    ContourEllipse ellipse;
};

struct ExperimentResult {
    std::string experiment;
    NoiseReport noise;
    std::optional<GaussianState> output_state;
    std::optional<double> fidelity;
    std::optional<double> gain;
    std::optional<MarkerBasis> marker_basis;
    std::vector<LabeledContour> contours;
    /// Keyed "<stage>.<beam>.<quadrature>".
    std::map<std::string, double> variances;
    /// Digest of the post-coupler joint state every branch starts from.
    std::uint64_t joint_state_digest = 0;
};

struct SweepRow {
    double squeeze_dB;
    double n_x_label;
    double n_p_signal;
    double n_p_erased;
};

/// FNV-1a over the raw bytes of mean and covariance.
inline std::uint64_t state_digest(const GaussianState& state) {
    std::uint64_t h = 14695981039346656037ULL;
    auto feed = [&h](const double* data, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, data + i, sizeof bits);
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xffU;
                h *= 1099511628211ULL;
            }
        }
    };
    feed(state.mean().data(), state.mean().size());
    feed(state.cov().data(), state.cov().size());
    return h;
}

inline void require_physical(const GaussianState& state, const char* stage) {
    if (!is_physical(state)) {
        throw PhysicalityError(fmt::format("{} state violates the uncertainty bound", stage));
    }
}

/// Squeezed marker with its fibre phase noise.
inline GaussianState prepare_marker(const EraserParams& params) {
    params.validate();
    const auto squeezed = squeezed_vacuum(params.marker_variance(), 0.0);
    return add_classical_noise(squeezed, QuadratureAddress::phase(0), params.marker_excess_phase_noise);
}

/// signal (mode 0) tensor marker (mode 1), before the coupler.
inline GaussianState prepare_input(const EraserParams& params) {
    const auto signal = params.signal_input.state();
    const auto marker = prepare_marker(params);
    require_physical(signal, "signal input");
    require_physical(marker, "marker input");
    return tensor(signal, marker);
}

/// Coupler followed by one detection loss per output beam.
inline GaussianChannel qnd_channel(const EraserParams& params) {
    params.validate();
    const double eta = params.detection_efficiency;
    return beamsplitter_channel(2, kSignalMode, kMarkerMode, params.transmittance)
        .then(loss_channel(2, kSignalMode, eta))
        .then(loss_channel(2, kMarkerMode, eta));
}

inline GaussianState joint_state(const EraserParams& params) {
    return apply(qnd_channel(params), prepare_input(params));
}

namespace detail {

inline const QuadratureAddress kSignalX = QuadratureAddress::amplitude(kSignalMode);
inline const QuadratureAddress kSignalP = QuadratureAddress::phase(kSignalMode);
inline const QuadratureAddress kMarkerX = QuadratureAddress::amplitude(kMarkerMode);
inline const QuadratureAddress kMarkerP = QuadratureAddress::phase(kMarkerMode);

inline void check_variances(const ExperimentResult& r) {
    for (const auto& [key, v] : r.variances) {
        if (!(v > 0)) throw PhysicalityError(fmt::format("variance '{}' is not positive ({})", key, v));
    }
}

inline ExperimentResult qnd_result(const EraserParams& params, const GaussianState& input,
                                   const GaussianState& joint, const char* experiment) {
    const Gains g = gains(params.transmittance);
    ExperimentResult r;
    r.experiment = experiment;
    const double vin_x = quad_variance(input, kSignalX);
    const double vin_p = quad_variance(input, kSignalP);
    r.variances["input.signal.x"] = vin_x;
    r.variances["input.signal.p"] = vin_p;
    r.variances["input.marker.x"] = quad_variance(input, kMarkerX);
    r.variances["input.marker.p"] = quad_variance(input, kMarkerP);
    r.variances["qnd.signal.x"] = quad_variance(joint, kSignalX);
    r.variances["qnd.signal.p"] = quad_variance(joint, kSignalP);
    r.variances["qnd.marker.x"] = quad_variance(joint, kMarkerX);
    r.variances["qnd.marker.p"] = quad_variance(joint, kMarkerP);
    const double n_x = added_noise(r.variances["qnd.marker.x"], g.marker, vin_x);
    const double n_p = added_noise(r.variances["qnd.signal.p"], g.signal, vin_p);
    r.noise = make_noise_report(params.transmittance, n_x, n_p);
    r.joint_state_digest = state_digest(joint);
    return r;
}

/// p_s - G p_m on the detected beams.
inline Eigen::VectorXd conditioned_phase(double gain) {
    const Term terms[] = {{kSignalP, 1.0}, {kMarkerP, -gain}};
    return combination_vector<double>(2, terms);
}

}  // namespace detail

/// Labelling stage: couples the signal to the marker and reports how well the
/// amplitude was copied (N_x_label) and how much the phase was broadened
/// (N_p_signal).
inline ExperimentResult run_qnd_stage(const EraserParams& params) {
    const auto input = prepare_input(params);
    const auto joint = apply(qnd_channel(params), input);
    auto r = detail::qnd_result(params, input, joint, "qnd");
    detail::check_variances(r);
    return r;
}

/// Electronic erasure: the marker phase is detected and its photocurrent,
/// scaled by G, is subtracted from the signal phase photocurrent.
inline ExperimentResult run_erasure_electronic(const EraserParams& params) {
    const auto input = prepare_input(params);
    const auto channel = qnd_channel(params);
    const auto joint = apply(channel, input);
    auto r = detail::qnd_result(params, input, joint, "erase-electronic");
    const double gain = resolve_gain(params.gain_strategy, joint, detail::kSignalP, detail::kMarkerP,
                                     params.transmittance);
    // Evaluated on the input so the marker's noise cancels in the
    // coefficients, not in the covariance.
    const double v_pc = output_variance(channel, input, detail::conditioned_phase(gain));
    const double v_xs = r.variances["qnd.signal.x"];
    r.variances["erased.signal.pc"] = v_pc;
    r.gain = gain;
    const Gains g = r.noise.gains;
    r.noise.n_p_erased = added_noise(v_pc, g.erased, r.variances["input.signal.p"]);
    r.noise.n_x_erased = added_noise(v_xs, 1 / g.erased, r.variances["input.signal.x"]);
    detail::check_variances(r);
    return r;
}

/// Channel from (signal, marker) input to the restored, renormalised signal.
inline GaussianChannel restoration_channel(const EraserParams& params, double gain) {
    return qnd_channel(params)
        .then(feedforward_channel(2, detail::kMarkerP, detail::kSignalP, gain))
        .then(squeeze_channel(1, 0, params.transmittance, std::numbers::pi / 2))
        .then(noise_channel(1, QuadratureAddress::amplitude(0), params.feedforward_noise_x))
        .then(noise_channel(1, QuadratureAddress::phase(0), params.feedforward_noise_p));
}

/// Optical erasure: the marker phase outcome drives a phase modulator on the
/// signal, and the output is renormalised by a local squeeze to undo the
/// coupler gain. Reports the restored state, its added noises and its
/// fidelity to the input, plus Wigner contours of input, post-coupler and
/// restored signal.
inline ExperimentResult run_erasure_feedforward(const EraserParams& params,
                                                double contour_level = kOneSigmaLevel) {
    const auto input = prepare_input(params);
    const auto joint = apply(qnd_channel(params), input);
    auto r = detail::qnd_result(params, input, joint, "erase-feedforward");
    const double gain = resolve_gain(params.gain_strategy, joint, detail::kSignalP, detail::kMarkerP,
                                     params.transmittance);
    r.gain = gain;

    const auto to_output = qnd_channel(params).then(
        feedforward_channel(2, detail::kMarkerP, detail::kSignalP, gain));
    r.variances["feedforward.signal.p"] =
        output_variance(to_output, input, direction<double>(QuadratureAddress::phase(0), 1));
    r.variances["feedforward.signal.x"] =
        output_variance(to_output, input, direction<double>(QuadratureAddress::amplitude(0), 1));

    const auto output = apply(restoration_channel(params, gain), input);
    require_physical(output, "restored");
    const auto signal_in = params.signal_input.state();
    const double out_x = quad_variance(output, QuadratureAddress::amplitude(0));
    const double out_p = quad_variance(output, QuadratureAddress::phase(0));
    r.variances["restored.signal.x"] = out_x;
    r.variances["restored.signal.p"] = out_p;
    r.noise.n_x_erased = out_x - r.variances["input.signal.x"];
    r.noise.n_p_erased = out_p - r.variances["input.signal.p"];
    r.fidelity = fidelity_gaussian(signal_in, output);
    r.output_state = output;

    const auto post_qnd = trace_out(joint, kMarkerMode);
    r.contours.push_back({"input", wigner_contour(signal_in, 0, contour_level)});
    r.contours.push_back({"post-qnd", wigner_contour(post_qnd, 0, contour_level)});
    r.contours.push_back({"restored", wigner_contour(output, 0, contour_level)});
    detail::check_variances(r);
    return r;
}

/// Reads the marker in the chosen basis after the signal is already out of
/// the coupler. Amplitude: which-eigenstate readout, conditioning the signal
/// amplitude on the marker amplitude. Phase: erasure, identical to
/// run_erasure_electronic.
inline ExperimentResult run_delayed_choice(const EraserParams& params, MarkerBasis basis) {
    if (basis == MarkerBasis::phase) {
        auto r = run_erasure_electronic(params);
        r.experiment = "delayed-choice";
        r.marker_basis = basis;
        return r;
    }
    const auto input = prepare_input(params);
    const auto joint = apply(qnd_channel(params), input);
    auto r = detail::qnd_result(params, input, joint, "delayed-choice");
    r.marker_basis = basis;
    const auto record = homodyne_condition(joint, detail::kMarkerX, quad_mean(joint, detail::kMarkerX));
    const auto& cond = record.conditioned_state;
    r.variances["we.signal.x"] = quad_variance(cond, QuadratureAddress::amplitude(0));
    r.variances["we.signal.p"] = quad_variance(cond, QuadratureAddress::phase(0));
    detail::check_variances(r);
    return r;
}

/// Erasure results for each marker squeezing value, everything else fixed.
inline std::vector<SweepRow> sweep_squeezing(const EraserParams& params, std::span<const double> squeeze_dB) {
    if (squeeze_dB.empty()) throw std::invalid_argument("squeezing sweep needs at least one value");
    std::vector<SweepRow> rows;
    rows.reserve(squeeze_dB.size());
    for (const double dB : squeeze_dB) {
        EraserParams p = params;
        p.marker_squeeze_dB = dB;
        const auto r = run_erasure_electronic(p);
        rows.push_back({dB, r.noise.n_x_label, r.noise.n_p_signal, *r.noise.n_p_erased});
    }
    return rows;
}

struct CalibrationTarget {
    double transmittance;
    double n_x_label;
    double n_p_signal;
    double detection_efficiency;
};

/// Inverts the labelling stage in closed form: finds the marker squeezing and
/// excess phase noise that make run_qnd_stage report the target added noises
/// with a vacuum signal and the given detection efficiency.
inline EraserParams calibrate(const CalibrationTarget& target) {
    const double T = target.transmittance;
    const double eta = target.detection_efficiency;
    if (!(T > 0 && T < 1)) throw std::invalid_argument("calibration needs 0 < T < 1");
    if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("calibration needs 0 < efficiency <= 1");
    // Undo the detection loss: V_detected = eta V + (1 - eta).
    auto undo_loss = [eta](double detected) { return (detected - (1 - eta)) / eta; };
    const double marker_x_out = undo_loss((1 + target.n_x_label) * (1 - T));
    double s = (marker_x_out - (1 - T)) / T;
    if (std::abs(s - 1) < 1e-12) s = 1;
    if (!(s > 0 && s <= 1)) {
        throw std::invalid_argument(fmt::format(
            "target N_x = {} needs marker variance {} outside (0, 1]", target.n_x_label, s));
    }
    const double signal_p_out = undo_loss((1 + target.n_p_signal) * T);
    const double marker_p = (signal_p_out - T) / (1 - T);
    double excess = marker_p - 1 / s;
    if (excess < 0 && excess > -1e-9) excess = 0;
    if (!(excess >= 0)) {
        throw std::invalid_argument(fmt::format(
            "target N_p = {} is below the minimum-uncertainty value for this squeezing", target.n_p_signal));
    }
    EraserParams p;
    p.transmittance = T;
    p.marker_squeeze_dB = -to_dB(s);
    p.marker_excess_phase_noise = excess;
    p.detection_efficiency = eta;
    return p;
}

/// Reference operating point of the experiment: T = 0.477, N_x = 0.55 and
/// N_p = 455 with 70% detection efficiency.
inline EraserParams calibrate_to_reference() { return calibrate({0.477, 0.55, 455.0, 0.70}); }

}  // namespace cverase
