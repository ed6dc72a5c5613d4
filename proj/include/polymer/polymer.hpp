#pragma once

#include "polymer/gaussian_env.hpp"
#include "polymer/records.hpp"
#include "polymer/rng.hpp"
#include "polymer/walk.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace polymer {

struct PathAction {
    double value = 0.0;
};

struct PartitionValue {
    double u = 1.0;
    double log_u = 0.0;
    bool truncated = false;
};

// Sum over segments of the environment increments at the occupied site.
// Jump times and the horizon must sit on the environment grid.
PathAction path_action(const WalkPath& path, const EnvField& env);

// Exact variance of the action over the environment law: same-site segment
// pairs contribute increment_cov, distinct sites are independent.
double path_variance(const WalkPath& path, Hurst hurst);

// Largest p_jump = kappa * grid_step accepted by the grid solvers.
constexpr double kMaxJumpProbability = 0.2;

// Bernoulli-per-cell walk: at the start of every cell the walker stays with
// probability 1 - p or takes one of the 2d unit steps with probability p/(2d),
// then collects exp(increment) of the site it occupies during that cell.
struct GridWalk {
    double kappa = 1.0;
    std::optional<std::int64_t> cap;  // max number of jumps; none = untruncated
    std::optional<int> cells;         // prefix of the env grid; none = all cells
};

// Forward recursion over (cell, site[, jumps used]) in log space.
PartitionValue dp_partition(const EnvField& env, const GridWalk& walk);

// log u after each of the first `cells` cells (entry k = time (k+1) h).
std::vector<double> dp_log_trace(const EnvField& env, const GridWalk& walk);

// Exhaustive sum over all grid skeletons; the oracle for dp_partition.
PartitionValue brute_force_partition(const EnvField& env, const GridWalk& walk);

// Monte Carlo over continuous-time paths of exp(var/2) = E[exp(action) | path].
EstimateRecord annealed_mean(double kappa, double t, Hurst hurst, int dimension,
                             std::int64_t replicas, const RngStream& stream, int workers = 1);

// Numerically stable log(exp(a) + exp(b)).
double log_add(double a, double b);

}  // namespace polymer
