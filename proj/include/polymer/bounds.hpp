#pragma once

#include "polymer/estimators.hpp"
#include "polymer/gaussian_env.hpp"
#include "polymer/records.hpp"
#include "polymer/rng.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <vector>

namespace polymer {

// e^{-lambda} (e lambda / n)^n, valid for n > lambda.
double poisson_tail_bound(double lambda, double n);

// Exact P(N >= n) for N ~ Poisson(lambda).
double poisson_upper_tail(double lambda, std::int64_t n);

// Largest action variance over paths with n_jumps jumps on [0,t]:
// t^{2H} for H > 1/2, (N+1)^{1-2H} t^{2H} for H <= 1/2.
double variance_upper(double t, std::int64_t n_jumps, Hurst hurst);

// (rho T + 1) / 2; only meaningful for H <= 1/2.
double u_hat_linear_bound(double horizon, double kappa, Hurst hurst);

using BigInt = boost::multiprecision::cpp_int;

// Walks of length 2m with steps +/-1 whose first return to 0 is at step 2m.
BigInt first_return_count(int m);

// Same count by exhaustive enumeration of the 2^{2m} sign sequences.
std::int64_t first_return_count_brute(int m);

// E max(Y1, Y2) for independent Y_i ~ N(0, sigma^2): sigma / sqrt(pi).
double emax_two_gaussians(double sigma);

// Monte Carlo version of the same expectation.
EstimateRecord emax_two_gaussians_mc(double sigma, std::int64_t pairs, const RngStream& stream);

struct StirlingMass {
    double horizon = 0.0;  // T = 2md / kappa
    double exact = 0.0;    // Poisson(2md) mass at 2md
    double bound = 0.0;    // 1 / (2 e sqrt(pi m d))
};

StirlingMass stirling_pm(int m, int dimension, double kappa);

// Jump sequences of the restricted class: each coordinate makes exactly 2m
// unit jumps and returns to 0 for the first time on its last one. Entries are
// +/-(axis+1).
std::vector<std::vector<int>> first_return_skeletons(int m, int dimension);

// (2md)! / (m!^{2d} (2m-1)^d).
BigInt first_return_class_size(int m, int dimension);

// Refuses experiments with more skeletons than this.
constexpr std::int64_t kSkeletonLimit = 200000;

struct LowerBoundResult {
    int m = 0;
    double horizon = 0.0;
    std::int64_t skeletons = 0;
    double log_pm = 0.0;
    double zero_field_value = 0.0;  // (1/T)(log p_m + log(|D| / (2d)^{2md}))
    EstimateRecord estimate;        // (1/T) E log E^X[e^S 1_{B0}]
};

// Restricted expectation over first-return skeletons with the 2md jumps placed
// uniformly on distinct grid cells 1..M-1 (M = T / grid_step). Environments
// are drawn as in estimate_U, so both see the same increments per replica.
LowerBoundResult lower_bound_experiment(int m, const ModelParams& params,
                                        std::int64_t env_replicas, const RngStream& stream);

}  // namespace polymer
