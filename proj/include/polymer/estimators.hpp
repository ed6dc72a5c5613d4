#pragma once

#include "polymer/gaussian_env.hpp"
#include "polymer/polymer.hpp"
#include "polymer/records.hpp"
#include "polymer/rng.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace polymer {

// Model and execution parameters shared by the statistical layer.
struct ModelParams {
    Hurst hurst{0.5};
    double kappa = 1.0;
    int dimension = 1;
    double grid_step = 0.1;
    bool zero_field = false;  // test injection: every environment is identically 0
    int workers = 1;

    TruncationSpec truncation() const { return {hurst, kappa}; }
    void validate() const;
    std::string digest(const std::string& op, const nlohmann::json& extra = {}) const;
};

// Largest horizon accepted by the trace-style estimators.
constexpr double kDeskHorizon = 32.0;

// log u (or log u-hat with the cap jump_cap(t)) at each requested time, all
// computed on one environment drawn from `stream` (replica already set).
std::vector<double> replica_log_partitions(std::span<const double> times, const ModelParams& params,
                                           const RngStream& stream, bool truncated);

// Per-replica log partitions: result[r][i] is replica r at times[i].
std::vector<std::vector<double>> log_partition_table(std::span<const double> times,
                                                     const ModelParams& params,
                                                     std::int64_t env_replicas,
                                                     const RngStream& stream, bool truncated);

// U(t) = E log u(t), or U-hat(t) when truncated.
EstimateRecord estimate_U(double t, const ModelParams& params, std::int64_t env_replicas,
                          const RngStream& stream, bool truncated);

struct LinearFit {
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
    double intercept_se = 0.0;
    double ci_low = 0.0;   // 95% band on the slope
    double ci_high = 0.0;
};

// Weighted least squares with weights 1/se^2; falls back to ordinary least
// squares (residual-based errors) when any se is zero.
LinearFit weighted_fit(std::span<const double> x, std::span<const double> y,
                       std::span<const double> se);

struct LyapunovTrace {
    std::vector<double> t;
    std::vector<EstimateRecord> u_hat;        // U-hat(t)
    std::vector<EstimateRecord> u_hat_over_t; // U-hat(t) / t
    LinearFit fit;                            // U-hat(t) against t
};

// Independent environments per grid point (child stream per index).
LyapunovTrace lyapunov_trace(std::span<const double> t_grid, const ModelParams& params,
                             std::int64_t env_replicas, const RngStream& stream);

// Whether a trace rises over the last `tail_fraction` of its grid: the WLS
// slope there is significantly positive (lower 95% limit above 0).
struct TrendReport {
    LinearFit tail_fit;
    bool upward = false;
    double max_value = 0.0;
};
TrendReport tail_trend(std::span<const double> x, std::span<const double> y,
                       std::span<const double> se, double tail_fraction = 0.5);

struct DefectReport {
    int n = 0;
    int m = 0;
    EstimateRecord defect;      // U-hat(n+m+1) - U-hat(n) - U-hat(m)
    double normalized = 0.0;    // defect / ((n+m)^H sqrt(log(n+m)))
    double normalized_se = 0.0;
};

DefectReport superadditivity_defect(int n, int m, const ModelParams& params,
                                    std::int64_t env_replicas, const RngStream& stream);

// All pairs share one environment per replica.
std::vector<DefectReport> superadditivity_scan(std::span<const std::pair<int, int>> pairs,
                                               const ModelParams& params,
                                               std::int64_t env_replicas,
                                               const RngStream& stream);

// Common lower bound c-hat = max(0, -min normalized defect). The scan diverges
// when the smallest normalized defect among the larger half of n+m falls
// below the smallest among the smaller half by more than 3 standard errors.
struct DefectSummary {
    double c_hat = 0.0;
    double min_lower = 0.0;
    double min_upper = 0.0;
    double slack = 0.0;
    bool diverges = false;
};

DefectSummary summarize_defects(std::span<const DefectReport> defects);

struct FeketeReport {
    std::vector<double> ratios;         // f(n)/n
    std::vector<double> running_max;
    std::vector<double> running_min;
    std::vector<double> eps_over_n;     // condition (i) diagnostic
    std::vector<double> dyadic_partial_sums;  // sum_k eps(2^k)/2^k, condition (ii)
    double limit_estimate = 0.0;
    bool diverges = false;
};

// values[i] = f(i+1), eps[i] = eps(i+1).
FeketeReport fekete_limit_diagnostic(std::span<const double> values, std::span<const double> eps);

struct ConcentrationReport {
    BoundReport report;          // empirical exceedance vs 2 n^-2 + 3 binomial SE
    double threshold = 0.0;      // threshold_scale * 2 n^H sqrt(log n)
    double pooled_mean = 0.0;
    std::int64_t exceedances = 0;
    std::int64_t replicas = 0;
};

ConcentrationReport concentration_check(int n, const ModelParams& params,
                                        std::int64_t env_replicas, const RngStream& stream,
                                        double threshold_scale = 1.0);

struct SandwichRow {
    double t = 0.0;
    int n = 0;
    double u_n = 0.0;
    double u_t = 0.0;
    double u_n1 = 0.0;
    double left_k = 0.0;   // (U-hat(n) - U-hat(t)) / sqrt(log n)
    double right_k = 0.0;  // (U-hat(t) - U-hat(n+1)) / sqrt(log t)
};

struct SandwichReport {
    std::vector<SandwichRow> rows;
    double k_hat = 0.0;    // smallest K making every row's sandwich hold
    BoundReport report;    // k_hat against the supplied ceiling
};

SandwichReport quantization_sandwich(std::span<const double> ts, const ModelParams& params,
                                     std::int64_t env_replicas, const RngStream& stream,
                                     double k_ceiling = 10.0);

struct GapRow {
    double t = 0.0;
    EstimateRecord gap;        // E[log u - log u-hat]
    std::int64_t violations = 0;  // replicas with log u-hat > log u
};

// Untruncated and truncated solvers on the same environment per replica.
std::vector<GapRow> truncation_gap(std::span<const double> ts, const ModelParams& params,
                                   std::int64_t env_replicas, const RngStream& stream);

}  // namespace polymer
