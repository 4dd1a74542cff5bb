#include "kepmix/cli.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <string>

namespace {

const char* const SCENARIOS[] = {"orbit-check",  "period-table", "transform-check",
                                 "linear-decay", "frozen-decay", "nonlinear-run"};

const char* const DESCRIPTIONS[] = {
    "integrate one orbit and emit per-step angle, energy and jacobian data",
    "emit numeric vs closed-form radial periods over the support window",
    "emit element-transform identity checks for random sampled states",
    "emit the phase-mixing decay of the mode-pipeline field, free streaming",
    "emit the phase-mixing decay in a frozen self-consistent potential",
    "run the self-consistent loop and emit mass, support and decay series",
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"action-angle phase-mixing toolkit"};
    app.require_subcommand(1);

    std::string configPath, outDir;
    int workers = 0;
    unsigned long long seed = 0;
    bool seedSet = false;

    std::string scenario;
    for (size_t i = 0; i < std::size(SCENARIOS); ++i) {
        CLI::App* sub = app.add_subcommand(SCENARIOS[i], DESCRIPTIONS[i]);
        sub->add_option("--config", configPath, "config file path");
        sub->add_option("--out", outDir, "output directory");
        sub->add_option("--workers", workers, "worker thread count");
        sub->add_option("--seed", seed, "seed for randomized sampling")
            ->each([&](const std::string&) { seedSet = true; });
        sub->callback([&, i] { scenario = SCENARIOS[i]; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    kepmix::cli::FlagOverrides flags;
    flags.scenario = scenario;
    if (!outDir.empty())
        flags.outDir = outDir;
    if (workers > 0)
        flags.workers = workers;
    if (seedSet)
        flags.seed = seed;

    try {
        const kepmix::cli::RunConfig config =
            configPath.empty() ? kepmix::cli::parse_config("", flags)
                               : kepmix::cli::parse_config_file(configPath, flags);
        return kepmix::cli::run_scenario(config);
    } catch (const kepmix::cli::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
}
