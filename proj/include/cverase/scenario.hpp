#pragma once

// Scenario files, result serialisation and the bodies of the command-line
// subcommands. The executable in tools/ only parses flags and calls into
// here, so everything below is testable in-process.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "cverase/errors.hpp"
#include "cverase/gaussian_state.hpp"
#include "cverase/measurement.hpp"
#include "cverase/metrics.hpp"
#include "cverase/montecarlo.hpp"
#include "cverase/protocol.hpp"

namespace cverase::scenario {

using nlohmann::json;

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kSuccess = 0,
    kBadConfig = 1,
    kUnphysical = 2,
    kValidationFailed = 3,
};

/// Malformed or invalid scenario file.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Experiment { qnd, erase_electronic, erase_feedforward, delayed_choice, sweep };

inline const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::qnd: return "qnd";
        case Experiment::erase_electronic: return "erase-electronic";
        case Experiment::erase_feedforward: return "erase-feedforward";
        case Experiment::delayed_choice: return "delayed-choice";
        case Experiment::sweep: return "sweep";
    }
    return "?";
}

inline const char* to_string(MarkerBasis b) { return b == MarkerBasis::amplitude ? "amplitude" : "phase"; }

struct Scenario {
    Experiment experiment = Experiment::qnd;
    EraserParams params{};
    std::vector<double> sweep;
    /// Delayed choice only; empty means both bases.
    std::optional<MarkerBasis> marker_basis;
    double contour_level = kOneSigmaLevel;
    std::optional<std::string> output;
    std::optional<std::uint64_t> seed;
};

namespace detail {

inline void reject_unknown(const json& object, std::initializer_list<const char*> allowed, const char* where) {
    if (!object.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", where));
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : object.items()) {
        if (!keys.contains(item.key())) {
            throw ConfigError(fmt::format("unknown key '{}' in {}", item.key(), where));
        }
    }
}

inline double number(const json& j, const char* key) {
    if (!j.is_number()) throw ConfigError(fmt::format("'{}' must be a number", key));
    return j.get<double>();
}

inline GainStrategy parse_gain(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "cancellation") return GainStrategy::cancellation();
        if (s == "optimal") return GainStrategy::optimal();
        throw ConfigError(fmt::format("unknown gain strategy '{}'", s));
    }
    reject_unknown(j, {"kind", "gain"}, "gain_strategy");
    const auto kind = j.value("kind", std::string{});
    if (kind == "fixed") {
        if (!j.contains("gain")) throw ConfigError("fixed gain strategy needs 'gain'");
        return GainStrategy::fixed(number(j["gain"], "gain"));
    }
    if (j.contains("gain")) throw ConfigError("'gain' is only valid for the fixed strategy");
    if (kind == "cancellation") return GainStrategy::cancellation();
    if (kind == "optimal") return GainStrategy::optimal();
    throw ConfigError(fmt::format("unknown gain strategy '{}'", kind));
}

inline SignalInput parse_signal(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "vacuum") return SignalInput::vacuum();
        throw ConfigError(fmt::format("unknown signal input '{}'", j.get<std::string>()));
    }
    reject_unknown(j, {"kind", "dx", "dp"}, "signal_input");
    const auto kind = j.value("kind", std::string{});
    if (kind == "vacuum") {
        if (j.contains("dx") || j.contains("dp")) throw ConfigError("vacuum input takes no displacement");
        return SignalInput::vacuum();
    }
    if (kind == "coherent") {
        return SignalInput::coherent(j.contains("dx") ? number(j["dx"], "dx") : 0.0,
                                     j.contains("dp") ? number(j["dp"], "dp") : 0.0);
    }
    throw ConfigError(fmt::format("unknown signal input '{}'", kind));
}

inline EraserParams parse_params(const json& j) {
    reject_unknown(j,
                   {"preset", "transmittance", "marker_squeeze_dB", "marker_excess_phase_noise",
                    "detection_efficiency", "gain_strategy", "signal_input", "sideband_freq_MHz",
                    "feedforward_noise_x", "feedforward_noise_p"},
                   "params");
    EraserParams p;
    if (j.contains("preset")) {
        if (j["preset"] != "reference") {
            throw ConfigError(fmt::format("unknown preset {}", j["preset"].dump()));
        }
        p = calibrate_to_reference();
    }
    auto set = [&j](const char* key, double& field) {
        if (j.contains(key)) field = number(j[key], key);
    };
    set("transmittance", p.transmittance);
    set("marker_squeeze_dB", p.marker_squeeze_dB);
    set("marker_excess_phase_noise", p.marker_excess_phase_noise);
    set("detection_efficiency", p.detection_efficiency);
    set("sideband_freq_MHz", p.sideband_freq_MHz);
    set("feedforward_noise_x", p.feedforward_noise_x);
    set("feedforward_noise_p", p.feedforward_noise_p);
    if (j.contains("gain_strategy")) p.gain_strategy = parse_gain(j["gain_strategy"]);
    if (j.contains("signal_input")) p.signal_input = parse_signal(j["signal_input"]);
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return p;
}

}  // namespace detail

inline Scenario parse_scenario(const json& j) {
    detail::reject_unknown(j, {"experiment", "params", "sweep", "marker_basis", "contour_level", "output", "seed"},
                           "scenario");
    Scenario s;
    if (!j.contains("experiment") || !j["experiment"].is_string()) {
        throw ConfigError("scenario needs a string 'experiment'");
    }
    const auto name = j["experiment"].get<std::string>();
    bool known = false;
    for (auto e : {Experiment::qnd, Experiment::erase_electronic, Experiment::erase_feedforward,
                   Experiment::delayed_choice, Experiment::sweep}) {
        if (name == to_string(e)) {
            s.experiment = e;
            known = true;
        }
    }
    if (!known) throw ConfigError(fmt::format("unknown experiment '{}'", name));
    s.params = detail::parse_params(j.value("params", json::object()));

    if (j.contains("sweep")) {
        if (s.experiment != Experiment::sweep) throw ConfigError("'sweep' is only valid for the sweep experiment");
        if (!j["sweep"].is_array()) throw ConfigError("'sweep' must be an array of dB values");
        for (const auto& v : j["sweep"]) {
            const double dB = detail::number(v, "sweep");
            if (!(dB >= 0) || !std::isfinite(dB)) throw ConfigError("sweep values must be non-negative dB");
            s.sweep.push_back(dB);
        }
    }
    if (s.experiment == Experiment::sweep && s.sweep.empty()) {
        throw ConfigError("the sweep experiment needs a non-empty 'sweep' list");
    }
    if (j.contains("marker_basis")) {
        if (s.experiment != Experiment::delayed_choice) {
            throw ConfigError("'marker_basis' is only valid for delayed-choice");
        }
        const auto b = j["marker_basis"].is_string() ? j["marker_basis"].get<std::string>() : std::string{};
        if (b == "amplitude") s.marker_basis = MarkerBasis::amplitude;
        else if (b == "phase") s.marker_basis = MarkerBasis::phase;
        else if (b != "both") throw ConfigError("marker_basis must be amplitude, phase or both");
    }
    if (j.contains("contour_level")) {
        s.contour_level = detail::number(j["contour_level"], "contour_level");
        if (!(s.contour_level > 0 && s.contour_level < 1)) throw ConfigError("contour_level must lie in (0, 1)");
    }
    if (j.contains("output")) {
        if (!j["output"].is_string()) throw ConfigError("'output' must be a string");
        s.output = j["output"].get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
        s.seed = j["seed"].get<std::uint64_t>();
    }
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read scenario file '{}'", path.string()));
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return parse_scenario(j);
}

// ---------------------------------------------------------------------------
// Serialisation

inline json to_json(const GainStrategy& g) {
    switch (g.kind()) {
        case GainStrategy::Kind::fixed: return {{"kind", "fixed"}, {"gain", g.gain()}};
        case GainStrategy::Kind::optimal: return "optimal";
        case GainStrategy::Kind::cancellation: return "cancellation";
    }
    return nullptr;
}

inline json to_json(const EraserParams& p) {
    json signal = p.signal_input.kind == SignalInput::Kind::vacuum
                      ? json("vacuum")
                      : json{{"kind", "coherent"}, {"dx", p.signal_input.dx}, {"dp", p.signal_input.dp}};
    return {{"transmittance", p.transmittance},
            {"marker_squeeze_dB", p.marker_squeeze_dB},
            {"marker_excess_phase_noise", p.marker_excess_phase_noise},
            {"detection_efficiency", p.detection_efficiency},
            {"gain_strategy", to_json(p.gain_strategy)},
            {"signal_input", std::move(signal)},
            {"sideband_freq_MHz", p.sideband_freq_MHz},
            {"feedforward_noise_x", p.feedforward_noise_x},
            {"feedforward_noise_p", p.feedforward_noise_p}};
}

inline json to_json(const GaussianState& s) {
    json mean = json::array();
    for (Eigen::Index i = 0; i < s.mean().size(); ++i) mean.push_back(s.mean()(i));
    json cov = json::array();
    for (Eigen::Index r = 0; r < s.cov().rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < s.cov().cols(); ++c) row.push_back(s.cov()(r, c));
        cov.push_back(std::move(row));
    }
    return {{"mean", std::move(mean)}, {"cov", std::move(cov)}};
}

inline json to_json(const ContourEllipse& e) {
    return {{"center_x", e.center_x},     {"center_p", e.center_p},   {"semi_major", e.semi_major},
            {"semi_minor", e.semi_minor}, {"orientation", e.orientation}};
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const NoiseReport& n) {
    const auto product = uncertainty_product(n.n_x_label, n.n_p_signal);
    return {{"n_x_label", n.n_x_label},
            {"n_p_signal", n.n_p_signal},
            {"n_p_erased", optional_json(n.n_p_erased)},
            {"n_x_erased", optional_json(n.n_x_erased)},
            {"dB",
             {{"n_x_label", n.n_x_label_dB()},
              {"n_p_signal", n.n_p_signal_dB()},
              {"n_p_erased", optional_json(n.n_p_erased_dB())},
              {"n_x_erased", optional_json(n.n_x_erased_dB())}}},
            {"gains", {{"g_m", n.gains.marker}, {"g_s", n.gains.signal}, {"g_e", n.gains.erased}}},
            {"product", product.product},
            {"product_satisfied", product.satisfied}};
}

inline json to_json(const ExperimentResult& r) {
    json contours = json::array();
    for (const auto& c : r.contours) {
        auto e = to_json(c.ellipse);
        e["panel"] = c.panel;
        contours.push_back(std::move(e));
    }
    return {{"experiment", r.experiment},
            {"noise", to_json(r.noise)},
            {"gain", optional_json(r.gain)},
            {"fidelity", optional_json(r.fidelity)},
            {"marker_basis", r.marker_basis ? json(to_string(*r.marker_basis)) : json(nullptr)},
            {"output_state", r.output_state ? to_json(*r.output_state) : json(nullptr)},
            {"contours", std::move(contours)},
            {"variances", r.variances},
            {"joint_state_digest", fmt::format("{:016x}", r.joint_state_digest)}};
}

inline json to_json(const std::vector<SweepRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"squeeze_dB", r.squeeze_dB},
                       {"n_x_label", r.n_x_label},
                       {"n_p_signal", r.n_p_signal},
                       {"n_p_erased", r.n_p_erased}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Running

/// Runs the scenario and returns the full result document.
inline json run_scenario(const Scenario& s) {
    json doc{{"experiment", to_string(s.experiment)}, {"params", to_json(s.params)}};
    switch (s.experiment) {
        case Experiment::qnd:
            doc["results"] = {{"qnd", to_json(run_qnd_stage(s.params))}};
            break;
        case Experiment::erase_electronic:
            doc["results"] = {{"erase-electronic", to_json(run_erasure_electronic(s.params))}};
            break;
        case Experiment::erase_feedforward: {
            const auto r = run_erasure_feedforward(s.params, s.contour_level);
            doc["results"] = {{"erase-feedforward", to_json(r)}};
            if (s.seed) {
                const auto joint = joint_state(s.params);
                const auto traj = feedforward_trajectory(joint, QuadratureAddress::phase(kMarkerMode),
                                                         QuadratureAddress::phase(kSignalMode), *r.gain, *s.seed);
                const auto restore = squeeze_channel(1, 0, s.params.transmittance, std::numbers::pi / 2);
                const auto restored = apply(restore, traj.state);
                doc["trajectory"] = {{"seed", *s.seed},
                                     {"meter_outcome", traj.outcome},
                                     {"restored_mean", {restored.mean()(0), restored.mean()(1)}}};
            }
            break;
        }
        case Experiment::delayed_choice: {
            json results = json::object();
            for (auto b : {MarkerBasis::amplitude, MarkerBasis::phase}) {
                if (s.marker_basis && *s.marker_basis != b) continue;
                results[to_string(b)] = to_json(run_delayed_choice(s.params, b));
            }
            doc["results"] = std::move(results);
            break;
        }
        case Experiment::sweep:
            doc["sweep"] = to_json(sweep_squeezing(s.params, s.sweep));
            break;
    }
    return doc;
}

namespace detail {

/// Fixed-point text without a "-0.000" artefact.
inline std::string fixed(double v, int digits) {
    auto s = fmt::format("{:.{}f}", v, digits);
    if (s.starts_with('-') && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

inline std::string noise_line(const char* name, const json& value, const json& dB) {
    if (value.is_null()) return {};
    return fmt::format("  {:<14}{:>12}  ({} dB)\n", name, fixed(value.get<double>(), 3), fixed(dB.get<double>(), 2));
}

}  // namespace detail

/// Human-readable table built only from the result document, so re-parsing
/// the emitted JSON reproduces it exactly.
inline std::string summarize(const json& doc) {
    std::ostringstream out;
    out << fmt::format("experiment: {}\n", doc.at("experiment").get<std::string>());
    if (doc.contains("sweep")) {
        out << fmt::format("  {:>10}{:>14}{:>14}{:>14}\n", "squeeze_dB", "N_x_label", "N_p_signal", "N_p_erased");
        for (const auto& row : doc["sweep"]) {
            out << fmt::format("  {:>10}{:>14}{:>14}{:>14}\n", detail::fixed(row["squeeze_dB"].get<double>(), 2),
                               detail::fixed(row["n_x_label"].get<double>(), 3),
                               detail::fixed(row["n_p_signal"].get<double>(), 3),
                               detail::fixed(row["n_p_erased"].get<double>(), 3));
        }
        return out.str();
    }
    for (const auto& [branch, r] : doc.at("results").items()) {
        out << fmt::format("[{}]\n", branch);
        const auto& n = r.at("noise");
        const auto& dB = n.at("dB");
        out << detail::noise_line("N_x_label", n["n_x_label"], dB["n_x_label"]);
        out << detail::noise_line("N_p_signal", n["n_p_signal"], dB["n_p_signal"]);
        out << fmt::format("  {:<14}{:>12}  ({})\n", "product", detail::fixed(n["product"].get<double>(), 3),
                           n["product_satisfied"].get<bool>() ? "bound satisfied" : "BOUND VIOLATED");
        if (!r["gain"].is_null()) {
            out << fmt::format("  {:<14}{:>12}\n", "gain G", detail::fixed(r["gain"].get<double>(), 3));
        }
        out << detail::noise_line("N_p_erased", n["n_p_erased"], dB["n_p_erased"]);
        out << detail::noise_line("N_x_erased", n["n_x_erased"], dB["n_x_erased"]);
        if (!r["fidelity"].is_null()) {
            out << fmt::format("  {:<14}{:>12}\n", "fidelity", detail::fixed(r["fidelity"].get<double>(), 3));
        }
        const auto& v = r.at("variances");
        if (v.contains("we.signal.x")) {
            out << fmt::format("  {:<14}{:>12}\n", "Var x_s|x_m", detail::fixed(v["we.signal.x"].get<double>(), 3));
            out << fmt::format("  {:<14}{:>12}\n", "Var p_s|x_m", detail::fixed(v["we.signal.p"].get<double>(), 3));
        }
    }
    return out.str();
}

/// Flat CSV of the result document.
inline std::string to_csv(const json& doc) {
    std::ostringstream out;
    if (doc.contains("sweep")) {
        out << "squeeze_dB,n_x_label,n_p_signal,n_p_erased\n";
        for (const auto& row : doc["sweep"]) {
            out << fmt::format("{:.10g},{:.10g},{:.10g},{:.10g}\n", row["squeeze_dB"].get<double>(),
                               row["n_x_label"].get<double>(), row["n_p_signal"].get<double>(),
                               row["n_p_erased"].get<double>());
        }
        return out.str();
    }
    out << "branch,quantity,value\n";
    for (const auto& [branch, r] : doc.at("results").items()) {
        auto row = [&](const std::string& key, const json& value) {
            if (value.is_number()) out << fmt::format("{},{},{:.10g}\n", branch, key, value.get<double>());
        };
        for (const char* key : {"n_x_label", "n_p_signal", "n_p_erased", "n_x_erased", "product"}) {
            row(fmt::format("noise.{}", key), r["noise"][key]);
        }
        for (const auto& [key, value] : r["noise"]["dB"].items()) row(fmt::format("dB.{}", key), value);
        row("gain", r["gain"]);
        row("fidelity", r["fidelity"]);
        for (const auto& [key, value] : r["variances"].items()) row(fmt::format("var.{}", key), value);
    }
    return out.str();
}

inline std::string contours_csv(const ExperimentResult& r, double level) {
    std::string out = "panel,level,center_x,center_p,semi_major,semi_minor,orientation\n";
    for (const auto& c : r.contours) {
        const auto& e = c.ellipse;
        out += fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", c.panel, level, e.center_x,
                           e.center_p, e.semi_major, e.semi_minor, e.orientation);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::size_t samples = mc::kDefaultSamples;
    double level = kOneSigmaLevel;
    bool quiet = false;
    /// Validation only: sample from a covariance inflated by 10%.
    bool corrupt = false;
};

namespace detail {

inline std::filesystem::path output_prefix(const CommandOptions& o, const Scenario& s) {
    if (o.out) return *o.out;
    if (s.output) return *s.output;
    return o.config.stem();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    f << text;
}

/// Runs `body`, mapping failures onto exit codes.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const PhysicalityError& e) {
        err << "error: " << e.what() << '\n';
        return kUnphysical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kBadConfig;
    }
}

struct Stage {
    std::string name;
    GaussianState state;
    std::vector<mc::Functional> functionals;
};

inline std::vector<mc::Functional> both_quadratures(std::size_t n_modes) {
    std::vector<mc::Functional> f;
    for (std::size_t m = 0; m < n_modes; ++m) {
        for (const auto& a : {QuadratureAddress::amplitude(m), QuadratureAddress::phase(m)}) {
            f.push_back({mc::address_label(a), {{a, 1.0}}});
        }
    }
    return f;
}

inline void add_erasure_stages(std::vector<Stage>& stages, const EraserParams& p, const std::string& suffix) {
    const auto joint = joint_state(p);
    const auto sp = QuadratureAddress::phase(kSignalMode);
    const auto mp = QuadratureAddress::phase(kMarkerMode);
    const double g = resolve_gain(p.gain_strategy, joint, sp, mp, p.transmittance);
    auto f = both_quadratures(2);
    f.push_back({"pc", {{sp, 1.0}, {mp, -g}}});
    stages.push_back({"input" + suffix, prepare_input(p), both_quadratures(2)});
    stages.push_back({"qnd" + suffix, joint, std::move(f)});
}

inline std::vector<Stage> validation_stages(const Scenario& s) {
    std::vector<Stage> stages;
    if (s.experiment == Experiment::sweep) {
        for (double dB : s.sweep) {
            EraserParams p = s.params;
            p.marker_squeeze_dB = dB;
            add_erasure_stages(stages, p, fmt::format("[{}dB]", dB));
        }
        return stages;
    }
    add_erasure_stages(stages, s.params, "");
    if (s.experiment == Experiment::erase_feedforward) {
        const auto r = run_erasure_feedforward(s.params, s.contour_level);
        stages.push_back({"restored", *r.output_state, both_quadratures(1)});
    }
    if (s.experiment == Experiment::delayed_choice && s.marker_basis != MarkerBasis::phase) {
        const auto joint = joint_state(s.params);
        const auto mx = QuadratureAddress::amplitude(kMarkerMode);
        const auto rec = homodyne_condition(joint, mx, quad_mean(joint, mx));
        stages.push_back({"we", rec.conditioned_state, both_quadratures(1)});
    }
    return stages;
}

}  // namespace detail

/// `run`: writes <prefix>.json and <prefix>.csv and prints the summary.
inline int run_command(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        auto s = load_scenario(o.config);
        if (o.seed) s.seed = o.seed;
        const json doc = run_scenario(s);
        const auto prefix = detail::output_prefix(o, s);
        detail::write_file(prefix.string() + ".json", doc.dump(2) + "\n");
        detail::write_file(prefix.string() + ".csv", to_csv(doc));
        if (!o.quiet) out << summarize(doc);
        return int(kSuccess);
    });
}

/// `validate`: Monte-Carlo check of every stage of the scenario.
inline int validate_command(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    if (o.samples < 1000) {
        err << fmt::format("error: --n must be at least 1000 (got {})\n", o.samples);
        return kBadConfig;
    }
    return detail::guarded(err, [&] {
        auto s = load_scenario(o.config);
        const std::uint64_t seed = o.seed.value_or(s.seed.value_or(0));
        bool ok = true;
        std::uint64_t index = 0;
        for (const auto& stage : detail::validation_stages(s)) {
            const GaussianState sampled =
                o.corrupt ? GaussianState::assume_symmetric(stage.state.mean(), 1.1 * stage.state.cov()) : stage.state;
            const auto batch = mc::sample_functionals(sampled, stage.functionals, o.samples, seed + index++);
            const auto report = mc::compare_with_analytic(stage.state, stage.functionals, batch);
            ok = ok && report.passed();
            for (const auto& e : report.entries) {
                if (!o.quiet || !e.pass) {
                    out << fmt::format("{:<14}{:<22}{:>16.6g}{:>16.6g}{:>9.2f}  {}\n", stage.name, e.label, e.analytic,
                                       e.empirical, e.z, e.pass ? "ok" : "FAIL");
                }
            }
        }
        out << (ok ? "validation passed\n" : "validation FAILED\n");
        return int(ok ? kSuccess : kValidationFailed);
    });
}

/// `contours`: Wigner ellipses of input, post-coupler and restored signal.
inline int contours_command(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto s = load_scenario(o.config);
        if (s.experiment != Experiment::erase_feedforward) {
            throw ConfigError("contours need an erase-feedforward scenario");
        }
        if (!(o.level > 0 && o.level < 1)) throw ConfigError("--level must lie in (0, 1)");
        const auto r = run_erasure_feedforward(s.params, o.level);
        const auto csv = contours_csv(r, o.level);
        detail::write_file(detail::output_prefix(o, s).string() + ".contours.csv", csv);
        if (!o.quiet) out << csv;
        return int(kSuccess);
    });
}

}  // namespace cverase::scenario
