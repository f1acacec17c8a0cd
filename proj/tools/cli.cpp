#include "cli.hpp"

#include <algorithm>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "echomem/config.hpp"
#include "echomem/experiments.hpp"
#include "echomem/parallel.hpp"

namespace echomem::cli {

namespace {

struct RunOptions {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

void add_run_options(CLI::App* sub, RunOptions& opts)
{
    sub->add_option("--config", opts.config, "JSON experiment configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir, "Output directory for CSV files (overrides output_dir)");
    sub->add_option("--seed", opts.seed, "Random seed (overrides the config seed)");
    sub->add_option("--threads", opts.threads, "Worker threads; affects speed only")->check(CLI::PositiveNumber);
}

int run_experiment(Subcommand cmd, const RunOptions& opts, std::ostream& out, std::ostream& err)
{
    try {
        set_thread_count(opts.threads);
        ExperimentConfig cfg = load_config(opts.config);
        if (opts.seed) {
            cfg.seed = *opts.seed;
        }
        std::string dir = opts.out_dir.empty() ? cfg.output_dir : opts.out_dir;
        if (dir.empty()) {
            dir = std::string("out_") + to_string(cmd);
        }
        out << run_subcommand(cmd, cfg, dir) << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "echomem " << to_string(cmd) << ": " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Two-pulse photon-echo memory simulator"};
    app.require_subcommand(1);

    std::string validate_path;
    std::string validate_for;
    auto* validate = app.add_subcommand("validate", "Check a configuration without simulating");
    validate->add_option("--config", validate_path, "JSON experiment configuration")->required();
    validate->add_option("--for", validate_for, "Check requirements of one subcommand")
        ->check(CLI::IsMember({"echo", "fringe", "decay", "multimode"}));

    RunOptions echo_opts;
    RunOptions fringe_opts;
    RunOptions decay_opts;
    RunOptions multimode_opts;
    auto* echo = app.add_subcommand("echo", "Single-arm trace and echo records");
    auto* fringe = app.add_subcommand("fringe", "Dual-arm fringe scan");
    auto* decay = app.add_subcommand("decay", "Storage-time sweep, T2 fit and visibility vs storage time");
    auto* multimode = app.add_subcommand("multimode", "Multimode storage with per-mode visibility");
    add_run_options(echo, echo_opts);
    add_run_options(fringe, fringe_opts);
    add_run_options(decay, decay_opts);
    add_run_options(multimode, multimode_opts);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream help;
        const int code = app.exit(e, help, help);
        (code == 0 ? out : err) << help.str();
        return code;
    }

    if (validate->parsed()) {
        std::optional<Subcommand> cmd;
        if (!validate_for.empty()) {
            cmd = parse_subcommand(validate_for);
        }
        const auto report = validate_config(validate_path, cmd);
        for (const auto& w : report.warnings) {
            out << "warning: " << w << '\n';
        }
        for (const auto& v : report.violations) {
            out << "violation: " << v << '\n';
        }
        if (report.valid()) {
            out << "valid (" << report.warnings.size() << " warnings)\n";
            return 0;
        }
        out << "invalid (" << report.violations.size() << " violations)\n";
        return 2;
    }
    if (echo->parsed()) {
        return run_experiment(Subcommand::echo, echo_opts, out, err);
    }
    if (fringe->parsed()) {
        return run_experiment(Subcommand::fringe, fringe_opts, out, err);
    }
    if (decay->parsed()) {
        return run_experiment(Subcommand::decay, decay_opts, out, err);
    }
    return run_experiment(Subcommand::multimode, multimode_opts, out, err);
}

}  // namespace echomem::cli
