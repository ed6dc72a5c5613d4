#pragma once

#include "polymer/table.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace polymer {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

const std::vector<std::string>& subcommands();

struct RunConfig {
    std::string subcommand;
    double hurst = 0.5;
    double kappa = 1.0;
    int dimension = 1;
    double t = 2.0;
    std::vector<double> t_grid;
    double grid_step = 0.1;
    int box_radius = 1;            // sample-field window
    std::int64_t env_replicas = 100;
    std::uint64_t seed = 0;

    // Subcommand knobs.
    int cells = 6;                 // partition: grid cells per environment
    std::optional<std::int64_t> cap;  // partition: jump cap (none = untruncated)
    bool truncated = true;         // estimate-U: U-hat instead of U
    int n = 4;                     // concentration
    int n_max = 6;                 // superadd: (n, m) in {2..n_max}^2
    std::vector<int> m_values{1, 2, 3, 4};  // lower-bound
    std::vector<int> n_grid{4, 8, 16, 32};  // residue Lipschitz scan
    std::vector<double> fourier{0.0, 1.0};  // circle kernel coefficients
    std::int64_t samples = 10000;  // bounds: sampled paths and 100x MC pairs

    // Execution, excluded from the digest.
    std::filesystem::path out;
    Format format = Format::csv;
    int workers = 0;
    bool zero_field = false;
    bool append = false;

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;   // digest-relevant fields only
    std::string digest() const;
    // Checks the preconditions of the selected subcommand.
    void validate() const;
};

// Result tables of one run; the first is the primary output.
struct RunResult {
    std::deque<Table> tables;
    std::vector<std::string> violations;
    std::vector<std::string> notes;
};

// Computes without touching the filesystem.
RunResult execute(const RunConfig& config);

// Executes and persists: primary table at config.out, the others beside it.
// Exit status 0 on success, 3 when an invariant was violated.
int run(const RunConfig& config);

}  // namespace polymer
