// pam: experiment runner for the lattice polymer model.

#include "polymer/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw polymer::ConfigError("cannot read config file " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw polymer::ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo and quadrature experiments for the fractional Anderson polymer"};
    app.set_version_flag("--version", "pam 1.0");

    std::string subcommand, config_path, out, format;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers, dimension;
    std::optional<double> hurst, kappa, t, grid_step;
    std::optional<std::int64_t> replicas;
    std::vector<double> t_grid;
    bool zero_field = false, append = false;

    std::string names;
    for (const auto& s : polymer::subcommands()) names += (names.empty() ? "" : ", ") + s;
    app.add_option("subcommand", subcommand, "One of: " + names);
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed (overrides PAM_SEED and the config file)");
    app.add_option("--out", out, "Primary output path; secondary tables go next to it");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--workers", workers, "Worker threads (0 = all cores)");
    app.add_flag("--zero-field", zero_field, "Replace every environment by 0 (test injection)");
    app.add_flag("--append", append, "Append to existing outputs with the same config digest");
    app.add_option("--hurst", hurst, "Hurst parameter H");
    app.add_option("--kappa", kappa, "Jump rate");
    app.add_option("--dimension", dimension, "Lattice dimension d");
    app.add_option("--t", t, "Horizon");
    app.add_option("--t-grid", t_grid, "Horizon grid")->delimiter(',');
    app.add_option("--grid-step", grid_step, "Time discretization step h");
    app.add_option("--replicas", replicas, "Environment replicas");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        nlohmann::json j = config_path.empty() ? nlohmann::json::object() : load_config(config_path);
        if (const char* env = std::getenv("PAM_SEED")) {
            try {
                j["seed"] = std::stoull(env);
            } catch (const std::exception&) {
                throw polymer::ConfigError("PAM_SEED must be a nonnegative integer");
            }
        }
        if (!subcommand.empty()) j["subcommand"] = subcommand;
        if (seed) j["seed"] = *seed;
        if (!out.empty()) j["out"] = out;
        if (!format.empty()) j["format"] = format;
        if (workers) j["workers"] = *workers;
        if (zero_field) j["zero_field"] = true;
        if (append) j["append"] = true;
        if (hurst) j["hurst"] = *hurst;
        if (kappa) j["kappa"] = *kappa;
        if (dimension) j["dimension"] = *dimension;
        if (t) j["t"] = *t;
        if (!t_grid.empty()) j["t_grid"] = t_grid;
        if (grid_step) j["grid_step"] = *grid_step;
        if (replicas) j["env_replicas"] = *replicas;

        const auto config = polymer::RunConfig::from_json(j);
        const int status = polymer::run(config);
        if (status != 0) std::cerr << "pam: invariant violated; see " << config.out.string() << "\n";
        return status;
    } catch (const polymer::ConfigError& e) {
        std::cerr << "pam: configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "pam: " << e.what() << "\n";
        return 1;
    }
}
