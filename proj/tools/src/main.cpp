#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hetlb_tools/commands.hpp"

int main(int argc, char** argv) {
    using hetlb::tools::CommandOptions;
    CLI::App app{"hetlb: dispatching-policy stability and heavy-traffic laboratory"};
    app.set_version_flag("--version", hetlb::tools::tool_version());
    app.require_subcommand(1);
    app.footer("Thread count: set HETLB_THREADS (default: hardware concurrency).");

    CommandOptions options;
    std::uint64_t seed = 0, slots = 0, monte_carlo = 0;
    std::uint32_t replications = 0;
    std::string ftable;

    const std::vector<std::pair<std::string, std::string>> subs{
        {"fvector", "Compute the f-table of the configured policy"},
        {"stability", "Stability threshold, minimizers and optimality verdicts"},
        {"simulate", "Steady-state simulation with batch-means intervals"},
        {"sweep", "Heavy-traffic sweep over the [sweep] epsilons"},
        {"distcheck", "Limiting-distribution fit of eps*||Q||_1"}};
    for (const auto& [name, help] : subs) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", options.config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Override the top-level seed");
        sub->add_option("--out", options.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--replications", replications, "Override the replication count")->check(CLI::PositiveNumber);
        sub->add_option("--slots", slots, "Override slots per replication (burn-in included)")->check(CLI::PositiveNumber);
        sub->add_option("--monte-carlo", monte_carlo, "Estimate the f-table by Monte Carlo with this many cycles per permutation")
            ->check(CLI::PositiveNumber);
        sub->add_option("--ftable", ftable, "Use a precomputed f-table file")->check(CLI::ExistingFile);
        sub->add_flag("--dump-samples", options.dump_samples, "Write raw ||Q||_1 histograms (sweep, distcheck)");
    }
    CLI11_PARSE(app, argc, argv);

    const auto* chosen = app.get_subcommands().front();
    if (chosen->count("--seed")) options.seed = seed;
    if (chosen->count("--slots")) options.slots = slots;
    if (chosen->count("--replications")) options.replications = replications;
    if (chosen->count("--monte-carlo")) options.monte_carlo = monte_carlo;
    if (chosen->count("--ftable")) options.ftable = ftable;

    const auto result = hetlb::tools::run_command(chosen->get_name(), options, std::cout);
    if (!result.failures.empty()) {
        nlohmann::json failures{{"failures", result.failures}, {"exit_code", result.exit_code}};
        std::cerr << failures.dump() << '\n';
    }
    return result.exit_code;
}
