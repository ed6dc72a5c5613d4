#include "polymer/estimators.hpp"

#include "polymer/digest.hpp"
#include "polymer/parallel.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <map>
#include <stdexcept>

namespace polymer {

void ModelParams::validate() const {
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
    if (dimension < 1) throw std::invalid_argument("dimension must be positive");
    if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
    if (kappa * grid_step > kMaxJumpProbability)
        throw std::invalid_argument("kappa * grid_step must not exceed 0.2");
}

std::string ModelParams::digest(const std::string& op, const nlohmann::json& extra) const {
    nlohmann::json j = {{"op", op},
                        {"hurst", hurst.value()},
                        {"kappa", kappa},
                        {"dimension", dimension},
                        {"grid_step", grid_step},
                        {"zero_field", zero_field},
                        {"extra", extra}};
    return hex_digest(j.dump());
}

namespace {

int cells_for(double t, double step) {
    const double ratio = t / step;
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("time " + format_double(t) + " is not a positive multiple of the grid step");
    return static_cast<int>(k);
}

struct Plan {
    EnvConfig config;
    std::vector<int> cells;
    std::vector<std::optional<std::int64_t>> caps;
};

Plan make_plan(std::span<const double> times, const ModelParams& params, std::uint64_t seed,
               bool truncated) {
    params.validate();
    if (times.empty()) throw std::invalid_argument("no evaluation times");
    Plan plan;
    double t_max = 0.0;
    int radius = 0;
    for (double t : times) {
        const int c = cells_for(t, params.grid_step);
        std::optional<std::int64_t> cap;
        if (truncated) cap = jump_cap(t, params.truncation());
        radius = std::max<int>(radius, static_cast<int>(cap ? std::min<std::int64_t>(*cap, c) : c));
        plan.cells.push_back(c);
        plan.caps.push_back(cap);
        t_max = std::max(t_max, t);
    }
    plan.config = EnvConfig{params.hurst, params.dimension, radius,
                            cells_for(t_max, params.grid_step) * params.grid_step,
                            params.grid_step, seed};
    return plan;
}

EnvField draw_env(const Plan& plan, const ModelParams& params, const RngStream& stream,
                  const PsdFactor* root) {
    if (params.zero_field) return EnvField::zero(plan.config);
    return sample_env(plan.config, stream, *root);
}

std::vector<double> evaluate(const Plan& plan, const ModelParams& params, const EnvField& env) {
    std::vector<double> out(plan.cells.size());
    const bool any_binding = std::any_of(plan.caps.begin(), plan.caps.end(), [&](const auto& cap) {
        const auto i = &cap - plan.caps.data();
        return cap && *cap < plan.cells[i];
    });
    if (!any_binding) {
        const auto trace = dp_log_trace(env, {params.kappa, std::nullopt, std::nullopt});
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = trace[plan.cells[i] - 1];
        return out;
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = dp_partition(env, {params.kappa, plan.caps[i], plan.cells[i]}).log_u;
    return out;
}

std::vector<double> column(const std::vector<std::vector<double>>& table, std::size_t i) {
    std::vector<double> out(table.size());
    for (std::size_t r = 0; r < table.size(); ++r) out[r] = table[r][i];
    return out;
}

std::vector<double> sorted_unique(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

std::size_t position(const std::vector<double>& xs, double x) {
    return static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
}

}  // namespace

std::vector<double> replica_log_partitions(std::span<const double> times, const ModelParams& params,
                                           const RngStream& stream, bool truncated) {
    const Plan plan = make_plan(times, params, stream.seed, truncated);
    std::optional<PsdFactor> root;
    if (!params.zero_field) root = psd_factor(time_gram(plan.config));
    const EnvField env = draw_env(plan, params, stream, root ? &*root : nullptr);
    return evaluate(plan, params, env);
}

std::vector<std::vector<double>> log_partition_table(std::span<const double> times,
                                                     const ModelParams& params,
                                                     std::int64_t env_replicas,
                                                     const RngStream& stream, bool truncated) {
    if (env_replicas < 1) throw std::invalid_argument("env_replicas must be >= 1");
    const Plan plan = make_plan(times, params, stream.seed, truncated);
    std::optional<PsdFactor> root;
    if (!params.zero_field) root = psd_factor(time_gram(plan.config));
    return parallel_map(static_cast<std::size_t>(env_replicas), params.workers, [&](std::size_t r) {
        const EnvField env = draw_env(plan, params, stream.with_replica(r), root ? &*root : nullptr);
        return evaluate(plan, params, env);
    });
}

EstimateRecord estimate_U(double t, const ModelParams& params, std::int64_t env_replicas,
                          const RngStream& stream, bool truncated) {
    if (env_replicas < 2) throw std::invalid_argument("estimate_U: env_replicas must be >= 2");
    const double times[] = {t};
    const auto table = log_partition_table(times, params, env_replicas, stream, truncated);
    return summarize(column(table, 0), stream.seed,
                     params.digest("estimate_U", {{"t", t}, {"truncated", truncated},
                                                  {"replicas", env_replicas}}));
}

LinearFit weighted_fit(std::span<const double> x, std::span<const double> y,
                       std::span<const double> se) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n || se.size() != n)
        throw std::invalid_argument("weighted_fit: need at least two matching points");
    const bool weighted = std::all_of(se.begin(), se.end(), [](double s) { return s > 0.0; });
    std::vector<double> w(n, 1.0);
    if (weighted)
        for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (se[i] * se[i]);

    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double xbar = sx / sw, ybar = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    }
    if (sxx <= 0.0) throw std::invalid_argument("weighted_fit: abscissae are all equal");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    double scale = 1.0;
    if (!weighted) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double res = y[i] - fit.intercept - fit.slope * x[i];
            rss += res * res;
        }
        scale = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
    }
    fit.slope_se = std::sqrt(scale / sxx);
    fit.intercept_se = std::sqrt(scale * (1.0 / sw + xbar * xbar / sxx));
    fit.ci_low = fit.slope - 1.96 * fit.slope_se;
    fit.ci_high = fit.slope + 1.96 * fit.slope_se;
    return fit;
}

LyapunovTrace lyapunov_trace(std::span<const double> t_grid, const ModelParams& params,
                             std::int64_t env_replicas, const RngStream& stream) {
    if (t_grid.size() < 2) throw std::invalid_argument("lyapunov_trace: need at least two times");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (t_grid[i] > kDeskHorizon) throw std::invalid_argument("lyapunov_trace: t beyond desk guard");
        if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("lyapunov_trace: t grid must increase strictly");
    }
    LyapunovTrace trace;
    std::vector<double> ys, ses;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double t = t_grid[i];
        EstimateRecord rec = estimate_U(t, params, env_replicas, stream.child(i), true);
        EstimateRecord scaled = rec;
        scaled.value /= t;
        scaled.std_error /= t;
        trace.t.push_back(t);
        ys.push_back(rec.value);
        ses.push_back(rec.std_error);
        trace.u_hat.push_back(std::move(rec));
        trace.u_hat_over_t.push_back(std::move(scaled));
    }
    trace.fit = weighted_fit(trace.t, ys, ses);
    return trace;
}

TrendReport tail_trend(std::span<const double> x, std::span<const double> y,
                       std::span<const double> se, double tail_fraction) {
    const std::size_t n = x.size();
    const auto tail = std::max<std::size_t>(
        3, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n))));
    if (n < tail) throw std::invalid_argument("tail_trend: not enough points");
    const std::size_t start = n - tail;
    TrendReport rep;
    rep.tail_fit = weighted_fit(x.subspan(start), y.subspan(start), se.subspan(start));
    rep.max_value = *std::max_element(y.begin(), y.end());
    // slopes at round-off level are not a trend
    double scale = 1.0;
    for (double v : y) scale = std::max(scale, std::abs(v));
    rep.upward = rep.tail_fit.ci_low > 1e-12 * scale;
    return rep;
}

std::vector<DefectReport> superadditivity_scan(std::span<const std::pair<int, int>> pairs,
                                               const ModelParams& params,
                                               std::int64_t env_replicas,
                                               const RngStream& stream) {
    if (env_replicas < 2) throw std::invalid_argument("superadditivity: env_replicas must be >= 2");
    std::vector<double> times;
    for (auto [n, m] : pairs) {
        if (n < 2 || m < 2) throw std::invalid_argument("superadditivity: n, m must be >= 2");
        if (n + m + 1 > kDeskHorizon) throw std::invalid_argument("superadditivity: beyond desk guard");
        times.insert(times.end(), {double(n), double(m), double(n + m + 1)});
    }
    times = sorted_unique(std::move(times));
    const auto table = log_partition_table(times, params, env_replicas, stream, true);
    const double h = params.hurst.value();

    std::vector<DefectReport> out;
    for (auto [n, m] : pairs) {
        const auto in = position(times, n), im = position(times, m), inm = position(times, n + m + 1);
        std::vector<double> d(table.size());
        for (std::size_t r = 0; r < table.size(); ++r)
            d[r] = table[r][inm] - table[r][in] - table[r][im];
        DefectReport rep;
        rep.n = n;
        rep.m = m;
        rep.defect = summarize(d, stream.seed,
                               params.digest("superadditivity", {{"n", n}, {"m", m},
                                                                 {"replicas", env_replicas}}));
        const double scale = std::pow(n + m, h) * std::sqrt(std::log(double(n + m)));
        rep.normalized = rep.defect.value / scale;
        rep.normalized_se = rep.defect.std_error / scale;
        out.push_back(std::move(rep));
    }
    return out;
}

DefectReport superadditivity_defect(int n, int m, const ModelParams& params,
                                    std::int64_t env_replicas, const RngStream& stream) {
    const std::pair<int, int> pair[] = {{n, m}};
    return superadditivity_scan(pair, params, env_replicas, stream).front();
}

DefectSummary summarize_defects(std::span<const DefectReport> defects) {
    if (defects.size() < 2) throw std::invalid_argument("summarize_defects: need at least two defects");
    std::vector<int> sizes;
    for (const auto& d : defects) sizes.push_back(d.n + d.m);
    std::sort(sizes.begin(), sizes.end());
    const int median = sizes[sizes.size() / 2];
    DefectSummary s;
    s.min_lower = s.min_upper = std::numeric_limits<double>::infinity();
    double min_all = std::numeric_limits<double>::infinity();
    for (const auto& d : defects) {
        min_all = std::min(min_all, d.normalized);
        s.slack = std::max(s.slack, 3.0 * d.normalized_se);
        auto& slot = d.n + d.m >= median ? s.min_upper : s.min_lower;
        slot = std::min(slot, d.normalized);
    }
    if (!std::isfinite(s.min_lower)) s.min_lower = s.min_upper;
    s.c_hat = std::max(0.0, -min_all);
    s.diverges = s.min_upper < s.min_lower - s.slack;
    return s;
}

FeketeReport fekete_limit_diagnostic(std::span<const double> values, std::span<const double> eps) {
    if (values.empty() || eps.size() != values.size())
        throw std::invalid_argument("fekete: values and eps must be nonempty and equally long");
    FeketeReport rep;
    const std::size_t n = values.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (eps[i] < 0.0) throw std::invalid_argument("fekete: eps must be nonnegative");
        const double k = static_cast<double>(i + 1);
        const double r = values[i] / k;
        rep.ratios.push_back(r);
        rep.running_max.push_back(i == 0 ? r : std::max(rep.running_max.back(), r));
        rep.running_min.push_back(i == 0 ? r : std::min(rep.running_min.back(), r));
        rep.eps_over_n.push_back(eps[i] / k);
    }
    double partial = 0.0;
    std::vector<double> dyadic_ratio;
    for (std::size_t p = 1; p <= n; p *= 2) {
        partial += eps[p - 1] / static_cast<double>(p);
        rep.dyadic_partial_sums.push_back(partial);
        dyadic_ratio.push_back(rep.ratios[p - 1]);
    }
    // Convergent ratio sequences have shrinking dyadic increments; f(n) = n log n
    // keeps a constant increment of log 2 per doubling.
    if (dyadic_ratio.size() >= 3) {
        const double first = dyadic_ratio[1] - dyadic_ratio[0];
        const double last = dyadic_ratio.back() - dyadic_ratio[dyadic_ratio.size() - 2];
        const double tol = 1e-12 * std::max(1.0, std::abs(dyadic_ratio.back()));
        rep.diverges = last > tol && last >= 0.5 * first;
    }
    rep.limit_estimate = rep.diverges ? std::numeric_limits<double>::infinity() : rep.ratios.back();
    return rep;
}

ConcentrationReport concentration_check(int n, const ModelParams& params,
                                        std::int64_t env_replicas, const RngStream& stream,
                                        double threshold_scale) {
    if (n < 2) throw std::invalid_argument("concentration_check: n must be >= 2");
    if (env_replicas < 200) throw std::invalid_argument("concentration_check: need >= 200 replicas");
    const double times[] = {double(n)};
    const auto logs = column(log_partition_table(times, params, env_replicas, stream, true), 0);
    ConcentrationReport rep;
    rep.replicas = env_replicas;
    rep.pooled_mean = pairwise_sum(logs) / static_cast<double>(logs.size());
    rep.threshold = threshold_scale * 2.0 * std::pow(n, params.hurst.value()) * std::sqrt(std::log(double(n)));
    for (double v : logs)
        if (std::abs(v - rep.pooled_mean) > rep.threshold) ++rep.exceedances;
    const double freq = static_cast<double>(rep.exceedances) / static_cast<double>(env_replicas);
    const double tail = std::min(1.0, 2.0 / (double(n) * n));
    const double slack = 3.0 * std::sqrt(tail * (1.0 - tail) / static_cast<double>(env_replicas));
    rep.report = make_bound_report("concentration_tail",
                                   "n=" + std::to_string(n) + ";threshold=" + format_double(rep.threshold),
                                   tail + slack, freq);
    return rep;
}

SandwichReport quantization_sandwich(std::span<const double> ts, const ModelParams& params,
                                     std::int64_t env_replicas, const RngStream& stream,
                                     double k_ceiling) {
    if (env_replicas < 2) throw std::invalid_argument("quantization_sandwich: env_replicas must be >= 2");
    std::vector<double> times;
    for (double t : ts) {
        const int n = static_cast<int>(std::floor(t));
        if (n < 2) throw std::invalid_argument("quantization_sandwich: floor(t) must be >= 2");
        times.insert(times.end(), {double(n), t, double(n + 1)});
    }
    times = sorted_unique(std::move(times));
    const auto table = log_partition_table(times, params, env_replicas, stream, true);
    std::vector<double> means(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto col = column(table, i);
        means[i] = pairwise_sum(col) / static_cast<double>(col.size());
    }

    SandwichReport rep;
    for (double t : ts) {
        SandwichRow row;
        row.t = t;
        row.n = static_cast<int>(std::floor(t));
        row.u_n = means[position(times, row.n)];
        row.u_t = means[position(times, t)];
        row.u_n1 = means[position(times, row.n + 1)];
        row.left_k = (row.u_n - row.u_t) / std::sqrt(std::log(double(row.n)));
        row.right_k = (row.u_t - row.u_n1) / std::sqrt(std::log(t));
        rep.k_hat = std::max({rep.k_hat, row.left_k, row.right_k});
        rep.rows.push_back(row);
    }
    rep.report = make_bound_report("quantization_sandwich_K", "points=" + std::to_string(ts.size()),
                                   k_ceiling, rep.k_hat);
    return rep;
}

std::vector<GapRow> truncation_gap(std::span<const double> ts, const ModelParams& params,
                                   std::int64_t env_replicas, const RngStream& stream) {
    if (env_replicas < 2) throw std::invalid_argument("truncation_gap: env_replicas must be >= 2");
    std::vector<GapRow> out;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts[i];
        const double times[] = {t};
        const Plan plan = make_plan(times, params, stream.seed, false);
        const auto cap = jump_cap(t, params.truncation());
        std::optional<PsdFactor> root;
        if (!params.zero_field) root = psd_factor(time_gram(plan.config));
        const RngStream sub = stream.child(i);
        const auto pairs = parallel_map(static_cast<std::size_t>(env_replicas), params.workers, [&](std::size_t r) {
            const EnvField env = draw_env(plan, params, sub.with_replica(r), root ? &*root : nullptr);
            const double full = dp_partition(env, {params.kappa, std::nullopt, std::nullopt}).log_u;
            const double trunc = dp_partition(env, {params.kappa, cap, std::nullopt}).log_u;
            return std::array<double, 2>{full, trunc};
        });
        GapRow row;
        row.t = t;
        std::vector<double> gaps(pairs.size());
        for (std::size_t r = 0; r < pairs.size(); ++r) {
            gaps[r] = pairs[r][0] - pairs[r][1];
            if (pairs[r][1] > pairs[r][0] + 1e-12) ++row.violations;
        }
        row.gap = summarize(gaps, stream.seed,
                            params.digest("truncation_gap", {{"t", t}, {"replicas", env_replicas}}));
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace polymer
