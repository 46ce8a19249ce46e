#include "membrane/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
    using namespace membrane;

    CLI::App app{"Cutting-pattern optimization for tension membranes"};
    app.require_subcommand(1);

    CliOptions opt;
    std::string config, out_dir, log_path;

    auto add_common = [&](CLI::App *sub, bool needs_config) {
        auto *c = sub->add_option("--config", config, "Run configuration (JSON)");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory (overrides output.directory)");
        sub->add_option("--log", log_path, "Write solver progress to this file");
        sub->add_flag("--csv", opt.csv, "Print results as CSV");
    };

    auto *optimize = app.add_subcommand("optimize", "Run the reduction-stress pattern loop");
    auto *equilibrium = app.add_subcommand("equilibrium", "Single equilibrium solve, report residual");
    auto *flatten = app.add_subcommand("flatten", "Project and fit the cutting sheets");
    auto *cable = app.add_subcommand("cable-demo", "Print the single-cable iteration");
    auto *gradients = app.add_subcommand("check-gradients", "Finite-difference gradient checks");
    for (auto *s : {optimize, equilibrium, flatten, gradients}) add_common(s, true);
    add_common(cable, false);
    gradients->add_flag("--inject-fault", opt.inject_fault, "Flip the strain-energy gradient sign")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    opt.config = config;
    if (!out_dir.empty()) opt.out = out_dir;
    if (!log_path.empty()) opt.log = log_path;

    if (*optimize) return cmd_optimize(opt, std::cout, std::cerr);
    if (*equilibrium) return cmd_equilibrium(opt, std::cout, std::cerr);
    if (*flatten) return cmd_flatten(opt, std::cout, std::cerr);
    if (*cable) return cmd_cable_demo(opt, std::cout, std::cerr);
    return cmd_check_gradients(opt, std::cout, std::cerr);
}
