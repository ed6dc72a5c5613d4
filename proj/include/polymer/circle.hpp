#pragma once

#include "polymer/estimators.hpp"
#include "polymer/gaussian_env.hpp"
#include "polymer/records.hpp"
#include "polymer/rng.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace polymer {

// 2*pi-periodic spatial covariance on the real line with a declared Hoelder
// envelope |Q(x,y) - Q(x,x)/2 - Q(y,y)/2| <= C |x-y|^alpha.
struct PeriodicKernel {
    std::function<double(double, double)> q;
    std::vector<double> fourier;  // a_k of sum_k a_k cos(k(x-y)) when built from coefficients
    double alpha = 2.0;
    double holder_c = 0.0;

    double operator()(double x, double y) const { return q(x, y); }

    // Nonnegative coefficients give a PSD kernel; C defaults to sum_k k^2 a_k / 2.
    static PeriodicKernel fourier_series(std::vector<double> coefficients);
    // Q(x,y) = cos(x-y), alpha = 2, C = 1/2.
    static PeriodicKernel cosine();
    // Arbitrary evaluator with a declared envelope.
    static PeriodicKernel custom(std::function<double(double, double)> q, double alpha, double c);
};

struct KernelValidation {
    double periodicity_error = 0.0;  // max |Q(x+2pi,y) - Q(x,y)|, |Q(x,y+2pi) - Q(x,y)|
    double min_eigenvalue = 0.0;     // of [Q(x_i, x_j)] over the grid
    double holder_excess = 0.0;      // max of |Q(x,y) - Q(x,x)/2 - Q(y,y)/2| - C|x-y|^alpha
    BoundReport report;              // worst violation against 0
};

// Checks periodicity, PSD (eigenvalues >= -1e-9) and the Hoelder envelope on
// the grid. Violations are reported, never thrown.
KernelValidation validate_kernel(const PeriodicKernel& q, std::span<const double> site_grid);

// Spatial Gram of the integer window -radius..radius.
Eigen::MatrixXd window_gram(const PeriodicKernel& q, int radius);

// Field on the integer window of config (dimension must be 1) with covariance
// timeGram (x) Q, drawn as X = A_Q Z A_G^T from the two PSD roots. Row j of Z
// reads the substream of the site that owns pivot column j, so a diagonal Q
// reproduces sample_env for the same stream.
EnvField sample_circle_env(const PeriodicKernel& q, const EnvConfig& config, const RngStream& stream);

// Same with both roots precomputed (space root over the window, time root over the grid).
EnvField sample_circle_env(const EnvConfig& config, const RngStream& stream, const PsdFactor& space,
                           const PsdFactor& time);

struct KroneckerCheck {
    double max_abs_z = 0.0;  // worst |empirical - Q(x,y) G(j,k)| / SE over all entries
    std::int64_t entries = 0;
    std::int64_t replicas = 0;
};

KroneckerCheck kronecker_moment_check(const PeriodicKernel& q, const EnvConfig& config,
                                      std::int64_t replicas, const RngStream& stream);

struct CircleGrowth {
    std::vector<double> t;
    std::vector<EstimateRecord> log_u_over_t;      // (1/t) E log u_c(t)
    std::vector<EstimateRecord> log_u_normalized;  // (1/(t sqrt(log t))) E log u_c(t)
    double lambda_hat = 0.0;                       // max over t of value + 2 SE
    TrendReport trend;
    TrendReport normalized_trend;
    BoundReport report;  // lower 95% limit of the tail slope against 0
};

// Untruncated grid walk on Z (window radius = number of cells) in the
// periodic field; independent environments per t via child streams.
CircleGrowth circle_linear_growth(const PeriodicKernel& q, std::span<const double> t_grid,
                                  const ModelParams& params, std::int64_t env_replicas,
                                  const RngStream& stream);

}  // namespace polymer
