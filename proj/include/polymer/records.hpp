#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace polymer {

// Monte Carlo estimate; std_error = sample std / sqrt(replicas).
struct EstimateRecord {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t replicas = 0;
    std::uint64_t seed = 0;
    std::string config_digest;
};

// An analytic (or fitted) bound next to the quantity it must dominate.
// margin = bound - empirical; satisfied iff empirical <= bound.
struct BoundReport {
    std::string name;
    std::string params;
    double bound_value = 0.0;
    double empirical_value = 0.0;
    bool satisfied = false;
    double margin = 0.0;
};

BoundReport make_bound_report(std::string name, std::string params, double bound,
                              double empirical);

// Fixed-order pairwise summation; the result does not depend on how the
// values were produced, only on their order.
double pairwise_sum(std::span<const double> xs);

EstimateRecord summarize(std::span<const double> samples, std::uint64_t seed,
                         std::string digest);

}  // namespace polymer
