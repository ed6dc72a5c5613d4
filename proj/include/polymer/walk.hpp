#pragma once

#include "polymer/gaussian_env.hpp"
#include "polymer/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace polymer {

using Site = std::vector<int>;

// Continuous-time nearest-neighbour path started at the origin.
class WalkPath {
public:
    WalkPath(double horizon, std::vector<double> jump_times, std::vector<Site> sites);

    // Path that never leaves the origin of Z^d.
    static WalkPath constant(double horizon, int dimension);

    double horizon() const { return horizon_; }
    int dimension() const { return static_cast<int>(sites_.front().size()); }
    std::size_t jumps() const { return jump_times_.size(); }
    const std::vector<double>& jump_times() const { return jump_times_; }
    const std::vector<Site>& sites() const { return sites_; }

    // One JSON line: horizon, jump_times and unit-step deltas (+/-(axis+1)).
    nlohmann::json to_json() const;
    static WalkPath from_json(const nlohmann::json& j);

private:
    double horizon_;
    std::vector<double> jump_times_;
    std::vector<Site> sites_;
};

// Occupation intervals grouped by site, ascending within each site.
using SegmentList = std::map<Site, std::vector<Interval>>;

SegmentList segments(const WalkPath& path);

WalkPath sample_path(double kappa, double t, int dimension, Philox& rng);

struct TruncationSpec {
    Hurst hurst{0.5};
    double kappa = 1.0;

    // max{e^6, 1/kappa}
    double rho() const;
};

// Jump budget: floor(t^2) for H > 1/2, floor(rho kappa t) otherwise.
std::int64_t jump_cap(double t, const TruncationSpec& spec);

// One decision of the grid walk: 0 = stay, otherwise +/-(axis+1).
using GridSkeleton = std::vector<int>;

// Visits every length-m decision sequence of the Bernoulli-per-cell walk
// with its exact probability. Throws std::length_error when (2d+1)^m > 1e7.
void enumerate_grid_paths(int m, int dimension, double p_jump,
                          const std::function<void(const GridSkeleton&, double)>& visit);

constexpr double kEnumerationLimit = 1e7;

}  // namespace polymer
