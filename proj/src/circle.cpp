#include "polymer/circle.hpp"

#include "polymer/digest.hpp"
#include "polymer/parallel.hpp"
#include "polymer/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace polymer {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int cells_for(double t, double step) {
    const double ratio = t / step;
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("time " + format_double(t) + " is not a positive multiple of the grid step");
    return static_cast<int>(k);
}

}  // namespace

PeriodicKernel PeriodicKernel::fourier_series(std::vector<double> coefficients) {
    if (coefficients.empty()) throw std::invalid_argument("fourier_series: no coefficients");
    double c = 0.0;
    for (std::size_t k = 0; k < coefficients.size(); ++k) {
        if (!(coefficients[k] >= 0.0))
            throw std::invalid_argument("fourier_series: coefficients must be nonnegative");
        c += 0.5 * static_cast<double>(k * k) * coefficients[k];
    }
    PeriodicKernel kernel;
    kernel.fourier = coefficients;
    kernel.q = [a = std::move(coefficients)](double x, double y) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * std::cos(static_cast<double>(k) * (x - y));
        return s;
    };
    kernel.alpha = 2.0;
    kernel.holder_c = c;
    return kernel;
}

PeriodicKernel PeriodicKernel::cosine() { return fourier_series({0.0, 1.0}); }

PeriodicKernel PeriodicKernel::custom(std::function<double(double, double)> q, double alpha, double c) {
    if (!(alpha > 0.0) || !(c >= 0.0)) throw std::invalid_argument("kernel: need alpha > 0, C >= 0");
    PeriodicKernel kernel;
    kernel.q = std::move(q);
    kernel.alpha = alpha;
    kernel.holder_c = c;
    return kernel;
}

KernelValidation validate_kernel(const PeriodicKernel& q, std::span<const double> site_grid) {
    if (site_grid.empty()) throw std::invalid_argument("validate_kernel: empty site grid");
    KernelValidation v;
    const auto n = static_cast<Eigen::Index>(site_grid.size());
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = site_grid[i];
        for (Eigen::Index j = 0; j < n; ++j) {
            const double y = site_grid[j];
            const double qxy = q(x, y);
            gram(i, j) = qxy;
            v.periodicity_error = std::max({v.periodicity_error, std::abs(q(x + kTwoPi, y) - qxy),
                                            std::abs(q(x, y + kTwoPi) - qxy)});
            const double lhs = std::abs(qxy - 0.5 * q(x, x) - 0.5 * q(y, y));
            const double rhs = q.holder_c * std::pow(std::abs(x - y), q.alpha);
            v.holder_excess = std::max(v.holder_excess, lhs - rhs);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (gram + gram.transpose()), Eigen::EigenvaluesOnly);
    v.min_eigenvalue = eig.eigenvalues().minCoeff();
    const double worst = std::max({v.periodicity_error - 1e-12, -v.min_eigenvalue - 1e-9,
                                   v.holder_excess - 1e-12});
    v.report = make_bound_report("kernel_validation", "sites=" + std::to_string(site_grid.size()), 0.0,
                                 std::max(worst, -1.0));
    return v;
}

Eigen::MatrixXd window_gram(const PeriodicKernel& q, int radius) {
    const int n = 2 * radius + 1;
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = q(i - radius, j - radius);
    return g;
}

EnvField sample_circle_env(const PeriodicKernel& q, const EnvConfig& config, const RngStream& stream) {
    if (config.dimension != 1) throw std::invalid_argument("circle field lives on Z (dimension 1)");
    return sample_circle_env(config, stream, psd_factor(window_gram(q, config.box_radius)),
                             psd_factor(time_gram(config)));
}

EnvField sample_circle_env(const EnvConfig& config, const RngStream& stream, const PsdFactor& space,
                           const PsdFactor& time) {
    config.validate();
    if (config.dimension != 1) throw std::invalid_argument("circle field lives on Z (dimension 1)");
    const SiteBox box = config.box();
    if (space.root.rows() != static_cast<Eigen::Index>(box.size()) || time.root.rows() != config.cells())
        throw std::invalid_argument("sample_circle_env: factor size mismatch");

    const auto rq = space.root.cols();
    const auto rg = time.root.cols();
    Eigen::MatrixXd z(rq, rg);
    for (Eigen::Index j = 0; j < rq; ++j) {
        const auto owner = box.coords(static_cast<std::size_t>(space.column_ids[j]));
        Philox g = stream.substream(site_stream_id(owner));
        for (Eigen::Index c = 0; c < rg; ++c) z(j, c) = g.normal();
    }
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x =
        space.root * z * time.root.transpose();
    return EnvField(config, stream.replica, std::vector<double>(x.data(), x.data() + x.size()));
}

KroneckerCheck kronecker_moment_check(const PeriodicKernel& q, const EnvConfig& config,
                                      std::int64_t replicas, const RngStream& stream) {
    if (replicas < 2) throw std::invalid_argument("kronecker_moment_check: replicas must be >= 2");
    const Eigen::MatrixXd space = window_gram(q, config.box_radius);
    const Eigen::MatrixXd time = time_gram(config);
    const int m = config.cells();
    const auto n = static_cast<Eigen::Index>(config.box().size()) * m;

    const PsdFactor space_root = psd_factor(space), time_root = psd_factor(time);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n), sum_sq = Eigen::MatrixXd::Zero(n, n);
    for (std::int64_t r = 0; r < replicas; ++r) {
        const EnvField env = sample_circle_env(config, stream.with_replica(static_cast<std::uint64_t>(r)),
                                               space_root, time_root);
        const Eigen::Map<const Eigen::VectorXd> v(env.increments().data(), n);
        const Eigen::MatrixXd outer = v * v.transpose();
        sum += outer;
        sum_sq += outer.cwiseProduct(outer);
    }
    KroneckerCheck out;
    out.replicas = replicas;
    const double rn = static_cast<double>(replicas);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b <= a; ++b) {
            const double target = space(a / m, b / m) * time(a % m, b % m);
            const double mean = sum(a, b) / rn;
            const double var = std::max(0.0, (sum_sq(a, b) / rn - mean * mean) * rn / (rn - 1.0));
            const double se = std::sqrt(var / rn);
            ++out.entries;
            if (se == 0.0) {
                if (std::abs(mean - target) > 1e-12) out.max_abs_z = std::numeric_limits<double>::infinity();
                continue;
            }
            out.max_abs_z = std::max(out.max_abs_z, std::abs(mean - target) / se);
        }
    }
    return out;
}

CircleGrowth circle_linear_growth(const PeriodicKernel& q, std::span<const double> t_grid,
                                  const ModelParams& params, std::int64_t env_replicas,
                                  const RngStream& stream) {
    params.validate();
    if (params.dimension != 1) throw std::invalid_argument("circle: dimension must be 1");
    if (!params.hurst.above_half()) throw std::invalid_argument("circle: requires H > 1/2");
    if (env_replicas < 2) throw std::invalid_argument("circle: env_replicas must be >= 2");
    if (t_grid.size() < 3) throw std::invalid_argument("circle: need at least 3 grid times");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > 1.0) || t_grid[i] > kDeskHorizon)
            throw std::invalid_argument("circle: grid times must lie in (1, 32]");
        if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("circle: grid must be strictly increasing");
    }

    CircleGrowth out;
    std::vector<double> y, se, yn, sen;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        const int cells = cells_for(t, params.grid_step);
        const EnvConfig config{params.hurst, 1, cells, cells * params.grid_step, params.grid_step, stream.seed};
        const RngStream child = stream.child(i);
        std::optional<PsdFactor> space, time;
        if (!params.zero_field) {
            space = psd_factor(window_gram(q, cells));
            time = psd_factor(time_gram(config));
        }
        const auto logs = parallel_map(static_cast<std::size_t>(env_replicas), params.workers, [&](std::size_t r) {
            const EnvField env = params.zero_field ? EnvField::zero(config)
                                                   : sample_circle_env(config, child.with_replica(r), *space, *time);
            return dp_partition(env, {params.kappa, std::nullopt, std::nullopt}).log_u;
        });
        std::vector<double> a(logs.size()), b(logs.size());
        const double norm = t * std::sqrt(std::log(t));
        for (std::size_t r = 0; r < logs.size(); ++r) {
            a[r] = logs[r] / t;
            b[r] = logs[r] / norm;
        }
        const auto digest = params.digest("circle", {{"t", t}, {"fourier", q.fourier}});
        out.t.push_back(t);
        out.log_u_over_t.push_back(summarize(a, stream.seed, digest));
        out.log_u_normalized.push_back(summarize(b, stream.seed, digest));
        y.push_back(out.log_u_over_t.back().value);
        se.push_back(out.log_u_over_t.back().std_error);
        yn.push_back(out.log_u_normalized.back().value);
        sen.push_back(out.log_u_normalized.back().std_error);
        const double upper = y.back() + 2.0 * se.back();
        out.lambda_hat = i == 0 ? upper : std::max(out.lambda_hat, upper);
    }
    out.trend = tail_trend(out.t, y, se);
    out.normalized_trend = tail_trend(out.t, yn, sen);
    out.report = make_bound_report("circle_tail_slope_lower95", "H=" + format_double(params.hurst.value()) +
                                       ";kappa=" + format_double(params.kappa),
                                   0.0, out.trend.tail_fit.ci_low);
    return out;
}

}  // namespace polymer
