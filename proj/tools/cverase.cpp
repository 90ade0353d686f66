#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cverase/scenario.hpp"

namespace sc = cverase::scenario;

int main(int argc, char** argv) {
    CLI::App app{"Continuous-variable quantum eraser simulator"};
    app.require_subcommand(1);

    sc::CommandOptions opts;
    std::string out_prefix;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config, "Scenario file (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out_prefix, "Output path prefix");
        cmd->add_option("--seed", seed, "Random seed");
        cmd->add_flag("--quiet", opts.quiet, "Suppress the printed table");
    };

    auto* run = app.add_subcommand("run", "Run a scenario and write <prefix>.json / <prefix>.csv");
    add_common(run);

    auto* validate = app.add_subcommand("validate", "Check every analytic moment by Monte-Carlo sampling");
    add_common(validate);
    validate->add_option("--n", opts.samples, "Samples per stage (>= 1000)");
    validate->add_flag("--debug-corrupt", opts.corrupt, "Sample from a covariance inflated by 10%");

    auto* contours = app.add_subcommand("contours", "Write Wigner contour ellipses of a feed-forward scenario");
    add_common(contours);
    contours->add_option("--level", opts.level, "Contour level as a fraction of the peak");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sc::kBadConfig;
    }

    if (!out_prefix.empty()) opts.out = out_prefix;
    auto* cmd = app.get_subcommands().front();
    if (cmd->count("--seed") > 0) opts.seed = seed;

    if (cmd == run) return sc::run_command(opts, std::cout, std::cerr);
    if (cmd == validate) return sc::validate_command(opts, std::cout, std::cerr);
    return sc::contours_command(opts, std::cout, std::cerr);
}
