#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wlkf/harness.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;
constexpr int exit_io = 1;

int exit_code(const wlkf::Error& e) {
    if (wlkf::is_numerical(e.code())) return exit_numerical;
    if (e.code() == wlkf::ErrorCode::io) return exit_io;
    return exit_config;
}

wlkf::ScenarioConfig resolve_scenario(const std::string& name) {
    if (auto builtin = wlkf::builtin_config(name)) return *builtin;
    return wlkf::load_config(name);
}

void print_summary(const wlkf::MseSeries& series) {
    std::printf("%-12s %-8s %-12s %14s %12s %14s\n", "scenario", "eta", "variant", "steady_mse", "std_err",
                "theory");
    for (const auto& p : series.points) {
        for (const auto& v : p.variants) {
            const std::string theory =
                v.report ? std::to_string(v.report->network_theoretical) : std::string("-");
            std::printf("%-12s %-8.3g %-12s %14.6g %12.3g %14s\n", series.scenario.c_str(), p.eta,
                        std::string(wlkf::to_string(v.variant)).c_str(), v.network_steady(), v.standard_error(),
                        theory.c_str());
        }
    }
    if (!series.diagnostics.empty())
        std::fprintf(stderr, "%zu trial(s) aborted; first: %s\n", series.diagnostics.size(),
                     series.diagnostics.front().c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed widely-linear complex Kalman filtering simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a Monte-Carlo scenario and write per-node MSE as CSV");
    std::string scenario;
    std::string out;
    std::string variants;
    std::string eta_sweep;
    int trials = 0;
    long long seed = -1;
    int threads = -1;
    int horizon = 0;
    bool quiet = false;
    run->add_option("--scenario", scenario, "ar2, projectile, or a config file path")->required();
    run->add_option("--trials", trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "master seed")->check(CLI::NonNegativeNumber);
    run->add_option("--out", out, "CSV output path");
    run->add_option("--variants", variants, "comma-separated filter variants, or 'all'");
    run->add_option("--eta-sweep", eta_sweep, "comma-separated circularity degrees");
    run->add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    run->add_option("--horizon", horizon, "time steps per trial")->check(CLI::PositiveNumber);
    run->add_flag("--quiet", quiet, "do not print the summary table");

    auto* list = app.add_subcommand("list-scenarios", "List the builtin scenarios");

    auto* validate = app.add_subcommand("validate", "Check a config file");
    std::string config_path;
    validate->add_option("config", config_path, "config file")->required();

    auto* topo = app.add_subcommand("make-topology", "Write a random geometric topology fixture");
    int topo_nodes = 10;
    double topo_radius = 0.5;
    long long topo_seed = 7;
    std::string topo_out;
    topo->add_option("--nodes", topo_nodes, "node count")->check(CLI::PositiveNumber);
    topo->add_option("--radius", topo_radius, "connection radius in the unit square")->check(CLI::PositiveNumber);
    topo->add_option("--seed", topo_seed, "generator seed")->check(CLI::NonNegativeNumber);
    topo->add_option("--out", topo_out, "fixture path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*list) {
            for (const auto& name : wlkf::builtin_scenarios()) {
                const auto c = *wlkf::builtin_config(name);
                std::cout << name << "\t" << c.topology.nodes << " nodes, horizon " << c.horizon << ", "
                          << c.trials << " trials, eta sweep on " << wlkf::to_string(c.eta_target) << " noise\n";
            }
            return 0;
        }
        if (*topo) {
            wlkf::save_topology(topo_out, wlkf::random_geometric_topology(topo_nodes, topo_radius,
                                                                          static_cast<std::uint64_t>(topo_seed)));
            return 0;
        }
        if (*validate) {
            const auto c = wlkf::load_config(config_path);
            c.validate();
            std::cout << config_path << ": ok (" << wlkf::to_string(c.kind) << ", " << c.node_count() << " nodes, "
                      << c.eta_sweep.size() << " eta point(s), " << c.variants.size() << " variant(s))\n";
            return 0;
        }

        auto c = resolve_scenario(scenario);
        if (trials > 0) c.trials = trials;
        if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
        if (!out.empty()) c.out = out;
        if (!variants.empty()) c.variants = wlkf::parse_variant_list(variants);
        if (!eta_sweep.empty()) c.eta_sweep = wlkf::parse_double_list(eta_sweep);
        if (threads >= 0) c.threads = threads;
        if (horizon > 0) c.horizon = horizon;

        const auto series = wlkf::run_scenario(c);
        if (!c.out.empty()) wlkf::emit_csv(series, c.out);
        else wlkf::write_csv(std::cout, series);
        if (!quiet && !c.out.empty()) print_summary(series);
        return 0;
    } catch (const wlkf::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    }
}
