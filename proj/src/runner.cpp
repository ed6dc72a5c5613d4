#include "polymer/runner.hpp"

#include "polymer/bounds.hpp"
#include "polymer/circle.hpp"
#include "polymer/digest.hpp"
#include "polymer/estimators.hpp"
#include "polymer/parallel.hpp"
#include "polymer/polymer.hpp"
#include "polymer/residue.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

namespace polymer {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "subcommand", "hurst", "kappa",  "dimension", "t",         "t_grid",   "grid_step",
        "box_radius", "env_replicas", "seed", "cells", "cap",       "truncated", "n",
        "n_max",      "m_values", "n_grid", "fourier", "samples",   "out",       "format",
        "workers",    "zero_field", "append"};
    return keys;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

bool on_grid(double t, double step) {
    const double r = t / step;
    return r >= 1.0 - 1e-9 && std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

std::vector<double> default_t_grid(const std::string& sub) {
    std::vector<double> g;
    if (sub == "circle")
        for (int t = 4; t <= 16; t += 2) g.push_back(t);
    else
        for (int t = 2; t <= 12; ++t) g.push_back(t);
    return g;
}

std::vector<double> effective_t_grid(const RunConfig& c) {
    return c.t_grid.empty() ? default_t_grid(c.subcommand) : c.t_grid;
}

ModelParams model(const RunConfig& c) {
    return ModelParams{Hurst(c.hurst), c.kappa, c.dimension, c.grid_step, c.zero_field, c.workers};
}

std::string join_coords(const std::vector<int>& x) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ";" : "") + std::to_string(x[i]);
    return s;
}

struct Emitter {
    const RunConfig& config;
    std::string digest;
    RunResult result;

    Table& table(std::string name, std::vector<std::string> columns) {
        Table t;
        t.name = std::move(name);
        t.columns = {"digest", "seed"};
        t.columns.insert(t.columns.end(), columns.begin(), columns.end());
        result.tables.push_back(std::move(t));
        return result.tables.back();
    }

    void row(Table& t, std::vector<json> cells) {
        std::vector<json> full{digest, config.seed};
        full.insert(full.end(), cells.begin(), cells.end());
        t.add(std::move(full));
    }

    void report(Table& t, const BoundReport& r) {
        row(t, {r.name, r.params, r.bound_value, r.empirical_value, r.margin, r.satisfied});
        if (!r.satisfied) result.violations.push_back(r.name + " [" + r.params + "]");
    }
};

const std::vector<std::string> kReportColumns{"name", "params", "bound", "empirical", "margin", "satisfied"};

void sample_field(Emitter& e) {
    const auto& c = e.config;
    const EnvConfig cfg{Hurst(c.hurst), c.dimension, c.box_radius, c.t, c.grid_step, c.seed};
    cfg.validate();
    const auto root = psd_factor(time_gram(cfg));
    auto& t = e.table("field", {"replica", "site", "coords", "cell", "t_start", "t_end", "increment"});
    const auto fields = parallel_map(static_cast<std::size_t>(c.env_replicas), c.workers, [&](std::size_t r) {
        return c.zero_field ? EnvField::zero(cfg).increments() : sample_env(cfg, env_stream(c.seed, r), root).increments();
    });
    for (std::size_t r = 0; r < fields.size(); ++r) {
        const EnvField env(cfg, r, fields[r]);
        for (std::size_t s = 0; s < env.box().size(); ++s)
            for (int k = 0; k < env.cells(); ++k)
                e.row(t, {r, s, join_coords(env.box().coords(s)), k, k * c.grid_step, (k + 1) * c.grid_step,
                          env.increment(s, k)});
    }
}

void partition(Emitter& e) {
    const auto& c = e.config;
    const int reach = static_cast<int>(c.cap ? std::min<std::int64_t>(*c.cap, c.cells) : c.cells);
    const EnvConfig cfg{Hurst(c.hurst), c.dimension, reach, c.cells * c.grid_step, c.grid_step, c.seed};
    const auto root = psd_factor(time_gram(cfg));
    const GridWalk walk{c.kappa, c.cap, std::nullopt};
    const auto pairs = parallel_map(static_cast<std::size_t>(c.env_replicas), c.workers, [&](std::size_t r) {
        const EnvField env = c.zero_field ? EnvField::zero(cfg) : sample_env(cfg, env_stream(c.seed, r), root);
        return std::array<double, 2>{dp_partition(env, walk).log_u, brute_force_partition(env, walk).log_u};
    });
    auto& t = e.table("partition", {"replica", "t", "H", "kappa", "truncated", "cap", "log_u", "log_u_enumeration",
                                    "abs_diff"});
    double worst = 0.0;
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const double diff = std::abs(pairs[r][0] - pairs[r][1]);
        worst = std::max(worst, diff);
        e.row(t, {r, cfg.t_max, c.hurst, c.kappa, c.cap.has_value(), c.cap ? *c.cap : -1, pairs[r][0], pairs[r][1],
                  diff});
    }
    auto& s = e.table("summary", kReportColumns);
    e.report(s, make_bound_report("dp_vs_enumeration_max_diff", "replicas=" + std::to_string(pairs.size()),
                                  1e-12, worst));
}

void estimate(Emitter& e) {
    const auto& c = e.config;
    const auto rec = estimate_U(c.t, model(c), c.env_replicas, env_stream(c.seed), c.truncated);
    auto& t = e.table("estimate", {"t", "value", "se", "replicas", "truncated"});
    e.row(t, {c.t, rec.value, rec.std_error, rec.replicas, c.truncated});
}

void lyapunov(Emitter& e) {
    const auto& c = e.config;
    const auto grid = effective_t_grid(c);
    const auto trace = lyapunov_trace(grid, model(c), c.env_replicas, env_stream(c.seed));
    auto& t = e.table("trace", {"t", "U_hat", "U_hat_se", "U_hat_over_t", "se"});
    for (std::size_t i = 0; i < trace.t.size(); ++i)
        e.row(t, {trace.t[i], trace.u_hat[i].value, trace.u_hat[i].std_error, trace.u_hat_over_t[i].value,
                  trace.u_hat_over_t[i].std_error});
    auto& f = e.table("fit", {"slope", "slope_se", "ci_low", "ci_high", "intercept", "intercept_se"});
    e.row(f, {trace.fit.slope, trace.fit.slope_se, trace.fit.ci_low, trace.fit.ci_high, trace.fit.intercept,
              trace.fit.intercept_se});
}

void superadd(Emitter& e) {
    const auto& c = e.config;
    std::vector<std::pair<int, int>> pairs;
    for (int n = 2; n <= c.n_max; ++n)
        for (int m = 2; m <= c.n_max; ++m) pairs.emplace_back(n, m);
    const auto defects = superadditivity_scan(pairs, model(c), c.env_replicas, env_stream(c.seed));
    auto& t = e.table("defects", {"n", "m", "defect", "se", "normalized", "normalized_se"});
    for (const auto& d : defects)
        e.row(t, {d.n, d.m, d.defect.value, d.defect.std_error, d.normalized, d.normalized_se});
    const auto s = summarize_defects(defects);
    auto& sum = e.table("summary", {"c_hat", "min_lower_half", "min_upper_half", "slack", "diverges"});
    e.row(sum, {s.c_hat, s.min_lower, s.min_upper, s.slack, s.diverges});
    if (s.diverges) e.result.notes.push_back("normalized defects drift downward across the grid");
}

void concentration(Emitter& e) {
    const auto& c = e.config;
    const auto rep = concentration_check(c.n, model(c), c.env_replicas, env_stream(c.seed));
    auto& t = e.table("concentration", {"n", "threshold", "pooled_mean", "exceedances", "replicas",
                                        "frequency", "bound"});
    e.row(t, {c.n, rep.threshold, rep.pooled_mean, rep.exceedances, rep.replicas, rep.report.empirical_value,
              rep.report.bound_value});
    if (!rep.report.satisfied) e.result.violations.push_back(rep.report.name);
}

void bounds(Emitter& e) {
    const auto& c = e.config;
    auto& t = e.table("bounds", kReportColumns);

    for (double lambda : {0.5, 1.0, 2.0, 5.0, 10.0}) {
        for (int n = static_cast<int>(std::floor(lambda)) + 1; n <= static_cast<int>(lambda) + 12; ++n) {
            e.report(t, make_bound_report("poisson_tail", "lambda=" + format_double(lambda) + ";n=" + std::to_string(n),
                                          poisson_tail_bound(lambda, n), poisson_upper_tail(lambda, n)));
        }
    }

    for (double h : {0.3, 0.5, 0.75}) {
        const RngStream paths{c.seed, 0x50415448ull, 0};  // "PATH"
        const auto excess = parallel_map(static_cast<std::size_t>(c.samples), c.workers, [&](std::size_t r) {
            Philox g = paths.with_replica(r).substream(static_cast<std::uint32_t>(h * 100));
            const WalkPath p = sample_path(c.kappa, c.t, c.dimension, g);
            return path_variance(p, Hurst(h)) -
                   variance_upper(c.t, static_cast<std::int64_t>(p.jumps()), Hurst(h));
        });
        e.report(t, make_bound_report("variance_envelope", "H=" + format_double(h) + ";t=" + format_double(c.t) +
                                                               ";paths=" + std::to_string(c.samples),
                                      1e-9, *std::max_element(excess.begin(), excess.end())));
    }

    if (c.hurst <= 0.5) {
        const double horizon = 10.0;
        const auto rec = estimate_U(horizon, model(c), c.env_replicas, env_stream(c.seed), true);
        e.report(t, make_bound_report("u_hat_linear", "T=10;H=" + format_double(c.hurst),
                                      u_hat_linear_bound(horizon, c.kappa, Hurst(c.hurst)), rec.value));
    } else {
        e.result.notes.push_back("u_hat_linear skipped: requires H <= 1/2");
    }

    for (int m = 1; m <= 6; ++m) {
        const auto closed = static_cast<double>(first_return_count(m));
        const auto brute = static_cast<double>(first_return_count_brute(m));
        BoundReport r = make_bound_report("first_return_count", "m=" + std::to_string(m), brute, closed);
        r.satisfied = closed == brute;
        e.report(t, r);
    }

    for (int d = 1; d <= 2; ++d) {
        for (int m = 1; m <= 8; ++m) {
            const auto s = stirling_pm(m, d, c.kappa);
            e.report(t, make_bound_report("stirling_pm_lower", "m=" + std::to_string(m) + ";d=" + std::to_string(d),
                                          s.exact, s.bound));
        }
    }

    const std::int64_t pairs = 100 * c.samples;
    const auto mc = emax_two_gaussians_mc(1.0, pairs, RngStream{c.seed, 0x454D4158ull, 0});  // "EMAX"
    e.report(t, make_bound_report("emax_two_gaussians", "sigma=1;pairs=" + std::to_string(pairs),
                                  3.0 * mc.std_error, std::abs(mc.value - emax_two_gaussians(1.0))));
}

void residue(Emitter& e) {
    const auto& c = e.config;
    const Hurst h(c.hurst);
    auto& t = e.table("residue", kReportColumns);
    for (double a : default_isometry_grid()) {
        for (double b : default_isometry_grid()) {
            const auto k = kernel_isometry(a, b, h);
            const double exact = r_h(a, b, h);
            e.report(t, make_bound_report("kernel_isometry_rel_err",
                                          "t=" + format_double(a) + ";s=" + format_double(b), 1e-5,
                                          std::abs(k.value - exact) / std::abs(exact)));
        }
    }
    const auto pairs = default_window_pairs();
    const auto scan = lipschitz_ratio_scan(c.n_grid, pairs, h);
    const std::string np = "n_max=" + std::to_string(c.n_grid.back());
    for (auto [name, value] : {std::pair{"lipschitz_ratio1_change", scan.refinement_change1},
                               std::pair{"lipschitz_ratio2_change", scan.refinement_change2}})
        e.report(t, make_bound_report(name, np, 0.05, value));
    for (auto [name, value] : {std::pair{"lipschitz_ratio1_max", scan.max_ratio1},
                               std::pair{"lipschitz_ratio2_max", scan.max_ratio2}}) {
        BoundReport r = make_bound_report(name, np, std::numeric_limits<double>::max(), value);
        r.satisfied = std::isfinite(value);
        e.report(t, r);
    }
    for (const auto& [l, t1, t2] : default_decomposition_cases())
        e.report(t, decomposition_variance_check(l, t1, t2, h).report);

    auto& rows = e.table("lipschitz", {"n", "k", "u", "v", "H", "ratio1", "ratio2", "quadrature_error"});
    for (const auto& r : scan.rows)
        e.row(rows, {r.n, r.k, r.u, r.v, c.hurst, r.ratio1, r.ratio2, r.quadrature_error});
}

void circle(Emitter& e) {
    const auto& c = e.config;
    const auto kernel = PeriodicKernel::fourier_series(c.fourier);
    const auto grid = effective_t_grid(c);
    const auto growth = circle_linear_growth(kernel, grid, model(c), c.env_replicas, env_stream(c.seed));
    auto& t = e.table("trace", {"t", "log_u_over_t", "se", "log_u_over_t_sqrt_log_t", "normalized_se"});
    for (std::size_t i = 0; i < growth.t.size(); ++i)
        e.row(t, {growth.t[i], growth.log_u_over_t[i].value, growth.log_u_over_t[i].std_error,
                  growth.log_u_normalized[i].value, growth.log_u_normalized[i].std_error});

    auto& r = e.table("reports", kReportColumns);
    std::vector<double> sites;
    for (int x = -8; x <= 8; ++x) sites.push_back(0.5 * x);
    e.report(r, validate_kernel(kernel, sites).report);
    const EnvConfig small{Hurst(c.hurst), 1, 2, 4 * c.grid_step, c.grid_step, c.seed};
    const auto kron = kronecker_moment_check(kernel, small, std::max<std::int64_t>(c.env_replicas, 2000),
                                             RngStream{c.seed, 0x4B524F4Eull, 0});  // "KRON"
    e.report(r, make_bound_report("kronecker_max_abs_z", "entries=" + std::to_string(kron.entries), 5.0,
                                  kron.max_abs_z));
    BoundReport trend = growth.report;
    trend.params += ";lambda_hat=" + format_double(growth.lambda_hat);
    e.report(r, trend);
}

void lower_bound(Emitter& e) {
    const auto& c = e.config;
    const auto params = model(c);
    auto& t = e.table("lower_bound", {"m", "T", "skeletons", "value", "se", "zero_field_value", "U_hat_over_T",
                                      "U_hat_over_T_se", "consistent"});
    for (int m : c.m_values) {
        const auto lb = lower_bound_experiment(m, params, c.env_replicas, env_stream(c.seed));
        const auto u = estimate_U(lb.horizon, params, c.env_replicas, env_stream(c.seed), true);
        const double ut = u.value / lb.horizon, ut_se = u.std_error / lb.horizon;
        const bool ok = lb.estimate.value + 2.0 * lb.estimate.std_error <= ut;
        e.row(t, {m, lb.horizon, lb.skeletons, lb.estimate.value, lb.estimate.std_error, lb.zero_field_value, ut,
                  ut_se, ok});
        if (!ok) e.result.violations.push_back("lower bound exceeds U_hat/T at m=" + std::to_string(m));
    }
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"sample-field", "partition", "estimate-U", "lyapunov",
                                                "superadd",     "concentration", "bounds", "residue",
                                                "circle",       "lower-bound"};
    return names;
}

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
    RunConfig c;
    try {
        c.subcommand = j.value("subcommand", c.subcommand);
        c.hurst = j.value("hurst", c.hurst);
        c.kappa = j.value("kappa", c.kappa);
        c.dimension = j.value("dimension", c.dimension);
        c.t = j.value("t", c.t);
        c.t_grid = j.value("t_grid", c.t_grid);
        c.grid_step = j.value("grid_step", c.grid_step);
        c.box_radius = j.value("box_radius", c.box_radius);
        c.env_replicas = j.value("env_replicas", c.env_replicas);
        c.seed = j.value("seed", c.seed);
        c.cells = j.value("cells", c.cells);
        if (j.contains("cap") && !j.at("cap").is_null()) c.cap = j.at("cap").get<std::int64_t>();
        c.truncated = j.value("truncated", c.truncated);
        c.n = j.value("n", c.n);
        c.n_max = j.value("n_max", c.n_max);
        c.m_values = j.value("m_values", c.m_values);
        c.n_grid = j.value("n_grid", c.n_grid);
        c.fourier = j.value("fourier", c.fourier);
        c.samples = j.value("samples", c.samples);
        if (j.contains("out")) c.out = j.at("out").get<std::string>();
        if (j.contains("format")) c.format = parse_format(j.at("format").get<std::string>());
        c.workers = j.value("workers", c.workers);
        c.zero_field = j.value("zero_field", c.zero_field);
        c.append = j.value("append", c.append);
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("config has a value of the wrong type: ") + ex.what());
    }
    return c;
}

json RunConfig::to_json() const {
    json j = {{"subcommand", subcommand}, {"hurst", hurst},     {"kappa", kappa},
              {"dimension", dimension},   {"zero_field", zero_field}};
    auto add_t_grid = [&] { j["t_grid"] = effective_t_grid(*this); };
    if (subcommand != "bounds" && subcommand != "residue") j["grid_step"] = grid_step;
    if (subcommand == "sample-field") {
        j["t"] = t;
        j["box_radius"] = box_radius;
        j["env_replicas"] = env_replicas;
    } else if (subcommand == "partition") {
        j["cells"] = cells;
        j["cap"] = cap ? json(*cap) : json(nullptr);
        j["env_replicas"] = env_replicas;
    } else if (subcommand == "estimate-U") {
        j["t"] = t;
        j["truncated"] = truncated;
        j["env_replicas"] = env_replicas;
    } else if (subcommand == "lyapunov" || subcommand == "circle") {
        add_t_grid();
        j["env_replicas"] = env_replicas;
        if (subcommand == "circle") j["fourier"] = fourier;
    } else if (subcommand == "superadd") {
        j["n_max"] = n_max;
        j["env_replicas"] = env_replicas;
    } else if (subcommand == "concentration") {
        j["n"] = n;
        j["env_replicas"] = env_replicas;
    } else if (subcommand == "bounds") {
        j["t"] = t;
        j["samples"] = samples;
        j["env_replicas"] = env_replicas;
        j["grid_step"] = grid_step;
    } else if (subcommand == "residue") {
        j["n_grid"] = n_grid;
    } else if (subcommand == "lower-bound") {
        j["m_values"] = m_values;
        j["env_replicas"] = env_replicas;
    }
    return j;
}

std::string RunConfig::digest() const { return hex_digest(to_json().dump()); }

void RunConfig::validate() const {
    const auto& subs = subcommands();
    require(std::find(subs.begin(), subs.end(), subcommand) != subs.end(),
            "unknown subcommand '" + subcommand + "'");
    require(hurst > 0.0 && hurst < 1.0, "hurst must lie in (0,1)");
    require(kappa > 0.0, "kappa must be positive");
    require(dimension >= 1 && dimension <= 4, "dimension must be between 1 and 4");
    require(grid_step > 0.0, "grid_step must be positive");
    require(kappa * grid_step <= kMaxJumpProbability + 1e-12,
            "kappa * grid_step must not exceed 0.2; lower grid_step");
    require(workers >= 0, "workers must be >= 0 (0 = all cores)");
    const std::int64_t min_replicas = subcommand == "sample-field" ? 1 : 2;
    require(env_replicas >= min_replicas, "env_replicas must be >= " + std::to_string(min_replicas));

    if (subcommand == "sample-field") {
        require(box_radius >= 0, "box_radius must be >= 0");
        require(on_grid(t, grid_step), "t must be a positive multiple of grid_step");
    } else if (subcommand == "partition") {
        require(cells >= 1, "cells must be >= 1");
        require(std::pow(2.0 * dimension + 1.0, cells) <= kEnumerationLimit,
                "(2d+1)^cells exceeds the enumeration limit; lower cells");
        require(!cap || *cap >= 0, "cap must be >= 0");
    } else if (subcommand == "estimate-U") {
        require(on_grid(t, grid_step), "t must be a positive multiple of grid_step");
        require(t <= kDeskHorizon, "t must be <= 32");
    } else if (subcommand == "lyapunov" || subcommand == "circle") {
        const auto g = effective_t_grid(*this);
        require(g.size() >= 3, "t_grid needs at least 3 points");
        for (std::size_t i = 0; i < g.size(); ++i) {
            require(on_grid(g[i], grid_step), "every t_grid point must be a multiple of grid_step");
            require(g[i] <= kDeskHorizon, "t_grid points must be <= 32");
            require(i == 0 || g[i] > g[i - 1], "t_grid must increase strictly");
        }
        if (subcommand == "circle") {
            require(hurst > 0.5, "circle requires hurst > 0.5");
            require(dimension == 1, "circle requires dimension 1");
            require(g.front() > 1.0, "circle t_grid points must exceed 1");
            require(!fourier.empty(), "fourier must list at least one coefficient");
            for (double a : fourier) require(a >= 0.0, "fourier coefficients must be nonnegative");
        }
    } else if (subcommand == "superadd") {
        require(n_max >= 3 && 2 * n_max + 1 <= kDeskHorizon, "n_max must lie in [3, 15]");
    } else if (subcommand == "concentration") {
        require(n >= 2 && n <= kDeskHorizon, "n must lie in [2, 32]");
        require(env_replicas >= 200, "concentration needs env_replicas >= 200");
    } else if (subcommand == "bounds") {
        require(t > 0.0, "t must be positive");
        require(samples >= 2, "samples must be >= 2");
        require(hurst > 0.5 || on_grid(10.0, grid_step), "grid_step must divide 10");
    } else if (subcommand == "residue") {
        require(!n_grid.empty(), "n_grid must not be empty");
        for (std::size_t i = 0; i < n_grid.size(); ++i)
            require(n_grid[i] >= 1 && (i == 0 || n_grid[i] > n_grid[i - 1]), "n_grid must increase strictly");
    } else if (subcommand == "lower-bound") {
        require(!m_values.empty(), "m_values must not be empty");
        for (int m : m_values) {
            require(m >= 1 && 2.0 * m * dimension / kappa <= kDeskHorizon, "2 m d / kappa must lie in (0, 32]");
            require(on_grid(2.0 * m * dimension / kappa, grid_step), "2 m d / kappa must be a multiple of grid_step");
        }
    }
}

RunResult execute(const RunConfig& config) {
    config.validate();
    Emitter e{config, config.digest(), {}};
    const std::string& s = config.subcommand;
    if (s == "sample-field") sample_field(e);
    else if (s == "partition") partition(e);
    else if (s == "estimate-U") estimate(e);
    else if (s == "lyapunov") lyapunov(e);
    else if (s == "superadd") superadd(e);
    else if (s == "concentration") concentration(e);
    else if (s == "bounds") bounds(e);
    else if (s == "residue") residue(e);
    else if (s == "circle") circle(e);
    else if (s == "lower-bound") lower_bound(e);
    return std::move(e.result);
}

int run(const RunConfig& config) {
    if (config.out.empty()) throw ConfigError("--out is required");
    const RunResult result = execute(config);
    const std::string digest = config.digest();
    for (std::size_t i = 0; i < result.tables.size(); ++i) {
        const auto path = i == 0 ? config.out : sibling_path(config.out, result.tables[i].name, config.format);
        write_table(result.tables[i], path, config.format, digest, config.append);
    }
    return result.violations.empty() ? 0 : 3;
}

}  // namespace polymer
