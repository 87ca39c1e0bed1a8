#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "toda/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Periodic Toda GGE laboratory"};
    app.require_subcommand(1);
    std::string config_path, out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> n;
    std::optional<double> ell, theta, fuzz, t;
    std::optional<std::size_t> samples;
    std::optional<std::string> input, model;

    for (const auto& name : toda::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--N", n);
        sub->add_option("--ell", ell);
        sub->add_option("--theta", theta);
        sub->add_option("--model", model, "constrained or theta");
        sub->add_option("--samples", samples);
        sub->add_option("--t", t);
        sub->add_option("--input", input, "samples CSV for spectrum-hist");
        sub->add_option("--fuzz", fuzz, "perturbation injected into the identity suite");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    toda::Json user;
    if (!config_path.empty()) {
        try {
            user = toda::Json::parse(toda::read_text(config_path));
        } catch (const toda::IoError& e) {
            std::cerr << e.what() << "\n";
            return toda::exit_io;
        } catch (const std::exception& e) {
            std::cerr << "config: " << e.what() << "\n";
            return toda::exit_usage;
        }
    }
    toda::ExperimentConfig cfg;
    try {
        cfg = toda::ExperimentConfig::from_json(user);
    } catch (const std::exception& e) {
        std::cerr << "config: " << e.what() << "\n";
        return toda::exit_usage;
    }
    if (seed) cfg.j["seed"] = *seed;
    if (n) cfg.j["N"] = *n;
    if (ell) cfg.j["ell"] = *ell;
    if (theta) cfg.j["theta"] = *theta;
    if (model) cfg.j["model"] = *model;
    if (samples) cfg.j["samples"] = *samples;
    if (t) cfg.j["t"] = *t;
    if (input) cfg.j["input"] = *input;
    if (fuzz) cfg.j["fuzz"] = *fuzz;
    return toda::run_command(command, cfg, out_dir);
}
