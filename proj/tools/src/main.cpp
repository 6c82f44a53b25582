#include "featrisk/errors.hpp"
#include "featrisk_tools/config.hpp"
#include "featrisk_tools/experiments.hpp"

#include "criteria.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

// exit codes
constexpr int kOk = 0;
constexpr int kConfig = 1;
constexpr int kNumeric = 2;
constexpr int kIo = 3;

struct CommandArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = 1;
};

int run_command(const std::string& name, const CommandArgs& args) {
    using namespace featrisk::tools;
    ExperimentConfig cfg;
    try {
        cfg = parse_config(load_document(args.config));
        if (args.seed) cfg.seed = *args.seed;
        const auto kinds = kinds_for_command(name);
        bool ok = false;
        std::string allowed;
        for (ExperimentKind k : kinds) {
            ok = ok || k == cfg.kind;
            allowed += (allowed.empty() ? "" : ", ") + std::string(to_string(k));
        }
        if (!ok) {
            throw ConfigError("experiment '" + std::string(to_string(cfg.kind)) + "' cannot run under '" + name +
                              "' (expected " + allowed + ")");
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    }

    try {
        const RunReport rep = run_experiment(cfg, {args.out, args.threads, name});
        std::cout << name << ": " << rep.rows << " rows written to " << args.out;
        if (rep.failed_rows > 0) std::cout << " (" << rep.failed_rows << " rows not ok)";
        std::cout << '\n';
        return kOk;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    }
}

// The selftest covers the fast criteria at reduced size; --all runs the full
// acceptance suite.
int run_selftest(bool all, int threads) {
    using namespace featrisk::acceptance;
    const std::vector<int> fast = {1, 3, 4, 5, 6, 7, 9, 11, 12};
    int failed = 0;
    for (const CriterionInfo& c : criterion_list()) {
        const bool in_fast = std::find(fast.begin(), fast.end(), c.id) != fast.end();
        if (!all && !in_fast) continue;
        const CriterionResult r = run_criterion(c.id, all ? Scale::full : Scale::quick, threads);
        std::cout << format_line(r) << std::endl;
        failed += r.pass ? 0 : 1;
    }
    return failed == 0 ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"featrisk: asymptotic risk of featurized ridgeless regression"};
    app.set_version_flag("--version", FEATRISK_VERSION);
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"asymptotics", "asymptotic risk curves and task concentration (no simulation)"},
        {"simulate", "Monte Carlo risk curves against the asymptotic values"},
        {"spectrum-opt", "closed-form and convex spectrum optimization"},
        {"full-opt", "gradient optimization of representation and regularization"},
        {"ablation", "sweeps over n, m, k, q, snr or rho"},
        {"heatmap", "alignment of a learned representation with B* and Sigma"},
        {"upstream", "risk error from an estimated representation"},
    };
    std::vector<CommandArgs> args(commands.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        CLI::App* sub = app.add_subcommand(commands[i].first, commands[i].second);
        sub->add_option("--config", args[i].config, "YAML or JSON experiment file")->required();
        sub->add_option("--seed", args[i].seed, "override the config seed");
        sub->add_option("--out", args[i].out, "output directory")->required();
        sub->add_option("--threads", args[i].threads, "worker threads")->check(CLI::PositiveNumber);
        subs.push_back(sub);
    }
    bool all = false;
    int st_threads = 1;
    CLI::App* selftest = app.add_subcommand("selftest", "property and oracle checks");
    selftest->add_flag("--all", all, "run every acceptance criterion at full size");
    selftest->add_option("--threads", st_threads, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    if (selftest->parsed()) return run_selftest(all, st_threads);
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (subs[i]->parsed()) return run_command(commands[i].first, args[i]);
    }
    return kConfig;
}
