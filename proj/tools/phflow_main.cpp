#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "phflow/phflow.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--config", opts.config_path, "experiment config file")
        ->required();
    sub->add_option("--out", opts.out_override, "output directory override");
    sub->add_option("--seed", opts.seed_override, "seed override")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
}

int run(const std::string& task, const CommonOpts& opts) {
    std::ifstream in(opts.config_path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open config file '" << opts.config_path
                  << "'\n";
        return phflow::exit_error;
    }
    std::ostringstream buf;
    buf << in.rdbuf();

    phflow::ExperimentConfig cfg;
    try {
        cfg = phflow::parse_config(buf.str(), task);
        if (!opts.out_override.empty()) cfg.output = opts.out_override;
        if (opts.seed_set) cfg.seed = opts.seed_override;
    } catch (const phflow::error& e) {
        std::cerr << "error: " << opts.config_path << ": " << e.what() << "\n";
        return phflow::exit_error;
    }
    return phflow::run_experiment(cfg);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadratic-form cone criterion experiments for Jacobi dynamics"};
    app.require_subcommand(1);

    static const char* kTasks[] = {"criterion", "gap",    "lyapunov",
                                   "cones",     "badset", "epsilon"};
    static const char* kHelp[] = {
        "sampled positivity check of the criterion form",
        "spectral gap functions along a direction family",
        "Lyapunov spectrum and splitting dimensions",
        "finite-horizon cone retention under the flow",
        "time fraction spent where the criterion degrades",
        "largest tolerated projection-derivative norm"};

    CommonOpts opts[6];
    for (int i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(kTasks[i], kHelp[i]);
        add_common(sub, opts[i]);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        // CLI11 returns 0 for --help; map real parse failures to exit 2.
        return rc == 0 ? 0 : phflow::exit_error;
    }

    for (int i = 0; i < 6; ++i)
        if (app.get_subcommand(kTasks[i])->parsed()) return run(kTasks[i], opts[i]);
    return phflow::exit_error;
}
