#pragma once

#include "polymer/gaussian_env.hpp"
#include "polymer/records.hpp"

#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace polymer {

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Absolute tolerance the residue quadratures must certify.
constexpr double kQuadratureTolerance = 1e-8;

struct KernelEval {
    double t = 0.0;
    double s = 0.0;
    double value = 0.0;
    double quadrature_error = 0.0;
};

// Normalisation of K_H so that int_0^{t^s} K(t,r) K(s,r) dr = R_H(t,s):
// H > 1/2: sqrt(H(2H-1) / B(2-2H, H-1/2));
// H < 1/2: sqrt(2H / ((1-2H) B(1-2H, H+1/2))); H = 1/2: 1.
double kernel_constant(Hurst hurst);

// Constant in dK/dt(u,s) = c (u-s)^{H-3/2} (u/s)^{H-1/2}; equals
// kernel_constant for H > 1/2 and kernel_constant * (H - 1/2) for H < 1/2.
double kernel_rate_constant(Hurst hurst);

// Volterra kernel K_H(t,s), 0 < s < t.
KernelEval volterra_kernel(double t, double s, Hurst hurst);

// int_0^{min(t,s)} K_H(t,r) K_H(s,r) dr; should reproduce r_h(t,s).
KernelEval kernel_isometry(double t, double s, Hurst hurst);

struct YCovQuery {
    int n = 1;
    int k = 1;
    double u = 0.0;  // in [n+k, n+k+1]
    void validate() const;
};

// E[Y_n(u) Y_n(v)] = int_0^n f(u,s) f(v,s) ds with
// f(u,s) = (u-s)^{H-3/2} (u/s)^{H-1/2} (no kernel constant).
KernelEval y_cov(const YCovQuery& a, const YCovQuery& b, Hurst hurst);

// E[(Y_n(u) - Y_n(v))^2], integrated directly from the squared difference.
KernelEval y_increment_var(const YCovQuery& a, const YCovQuery& b, Hurst hurst);

struct LipschitzRow {
    int n = 0;
    int k = 0;
    double u = 0.0;
    double v = 0.0;
    double hurst = 0.0;
    double ratio1 = 0.0;  // E[(Y(u)-Y(v))^2] / ((1+k/n)^{2H-1} k^{2H-4} (u-v)^2)
    double ratio2 = 0.0;  // E[Y(u)^2] / ((1+k/n)^{2H-1} k^{2H-2})
    double quadrature_error = 0.0;
};

struct LipschitzScan {
    std::vector<LipschitzRow> rows;
    double max_ratio1 = 0.0;
    double max_ratio2 = 0.0;
    // Maxima before the last n of the grid was added.
    double prior_max_ratio1 = 0.0;
    double prior_max_ratio2 = 0.0;
    // |max - prior_max| / prior_max, the stability diagnostic.
    double refinement_change1 = 0.0;
    double refinement_change2 = 0.0;
};

// Minimum |u - v| admitted by the scan.
constexpr double kMinSeparation = 1e-3;

// Offsets (a, b) inside [0,1]; each window [n+k, n+k+1] gets u = n+k+a, v = n+k+b.
std::vector<std::pair<double, double>> default_window_pairs();

// Scans k = 1..n for every n in n_grid (ascending).
LipschitzScan lipschitz_ratio_scan(std::span<const int> n_grid,
                                   std::span<const std::pair<double, double>> pairs, Hurst hurst);

struct DecompositionCheck {
    int l = 0;
    double t1 = 0.0;
    double t2 = 0.0;
    double total = 0.0;       // (t2 - t1)^{2H}
    double residue = 0.0;     // int_0^{l-1} (K(t2,s) - K(t1,s))^2 ds
    double innovation = 0.0;  // int_{l-1}^{t2} (K(t2,s) - K(t1,s) 1_{s<t1})^2 ds
    double gap = 0.0;         // |total - residue - innovation|
    double quadrature_error = 0.0;
    BoundReport report;       // gap against the 1e-5 tolerance
};

// (l, t1, t2) cases used by the runner and the acceptance suite.
std::vector<std::tuple<int, double, double>> default_decomposition_cases();

// Time points of the isometry grid.
std::vector<double> default_isometry_grid();

DecompositionCheck decomposition_variance_check(int l, double t1, double t2, Hurst hurst,
                                                double tolerance = 1e-5);

}  // namespace polymer
