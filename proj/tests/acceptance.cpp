// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "polymer/bounds.hpp"
#include "polymer/circle.hpp"
#include "polymer/estimators.hpp"
#include "polymer/polymer.hpp"
#include "polymer/residue.hpp"
#include "polymer/runner.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace polymer;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [violated]");
    }
};

std::string num(double x) {
    std::ostringstream s;
    s.precision(4);
    s << x;
    return s.str();
}

ModelParams model(double h, double kappa = 1.0) {
    ModelParams p;
    p.hurst = Hurst(h);
    p.kappa = kappa;
    p.workers = 0;
    return p;
}

Outcome covariance_fidelity() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    for (double h : {0.3, 0.5, 0.75}) {
        const EnvConfig cfg{Hurst(h), 1, 0, 3.2, 0.1, kSeed};
        const auto root = psd_factor(time_gram(cfg));
        const int replicas = 20000;
        Eigen::MatrixXd samples(replicas, cfg.cells());
        for (int r = 0; r < replicas; ++r) {
            const auto env = sample_env(cfg, env_stream(kSeed, r), root);
            for (int k = 0; k < cfg.cells(); ++k) samples(r, k) = env.increment(0, k);
        }
        const auto cells = cfg.grid_cells();
        const double z = testing::max_moment_z(samples, increment_gram(cells, Hurst(h)));
        o.require(z < 5.0, "H=" + num(h) + " max z " + num(z));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs <= 60.0, "runtime " + num(secs) + " s");
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 gen(kSeed);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const int m = 1 + static_cast<int>(gen() % 6);
        const double h = 0.1 + 0.8 * std::uniform_real_distribution<double>(0.0, 1.0)(gen);
        const EnvConfig cfg{Hurst(h), 1, m, m * 0.1, 0.1, kSeed};
        const auto env = sample_env(cfg, env_stream(kSeed, rep));
        const double kappa = 0.5 + 1.5 * std::uniform_real_distribution<double>(0.0, 1.0)(gen);
        const std::int64_t cap = static_cast<std::int64_t>(gen() % (m + 1));
        for (std::optional<std::int64_t> c : {std::optional<std::int64_t>{}, std::optional<std::int64_t>{cap}}) {
            const GridWalk walk{kappa, c, std::nullopt};
            worst = std::max(worst, std::abs(dp_partition(env, walk).log_u - brute_force_partition(env, walk).log_u));
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(worst <= 1e-12, "max |log u_dp - log u_enum| " + num(worst));
    o.require(secs <= 60.0, "runtime " + num(secs) + " s");
    return o;
}

Outcome annealed_exactness() {
    Outcome o;
    for (double t : {1.0, 2.0, 4.0}) {
        const auto rec = annealed_mean(1.0, t, Hurst(0.5), 1, 2000, RngStream{kSeed, 1, 0}, 0);
        const double err = std::abs(rec.value - std::exp(t / 2.0));
        o.require(err <= 1e-12 && rec.std_error <= 1e-12,
                  "t=" + num(t) + " |mean - e^{t/2}| " + num(err) + " spread " + num(rec.std_error));
    }
    return o;
}

Outcome variance_envelope() {
    Outcome o;
    for (double h : {0.3, 0.5, 0.75}) {
        int violations = 0;
        double worst = -INFINITY;
        for (int r = 0; r < 10000; ++r) {
            Philox g = RngStream{kSeed, 2, static_cast<std::uint64_t>(r)}.substream(static_cast<std::uint32_t>(100 * h));
            const auto p = sample_path(1.0, 4.0, 1 + r % 2, g);
            const double excess = path_variance(p, Hurst(h)) -
                                  variance_upper(4.0, static_cast<std::int64_t>(p.jumps()), Hurst(h));
            worst = std::max(worst, excess);
            violations += excess > 1e-9;
        }
        o.require(violations == 0, "H=" + num(h) + " violations " + std::to_string(violations) +
                                       " worst excess " + num(worst));
    }
    return o;
}

Outcome combinatorics() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    int bad = 0, checked = 0;
    for (double lambda : {0.5, 1.0, 2.0, 3.5, 5.0, 10.0, 20.0})
        for (int n = static_cast<int>(std::floor(lambda)) + 1; n <= static_cast<int>(lambda) + 30; ++n, ++checked)
            bad += poisson_upper_tail(lambda, n) > poisson_tail_bound(lambda, n);
    o.require(bad == 0, "Poisson tails " + std::to_string(checked - bad) + "/" + std::to_string(checked));
    bool counts = true;
    for (int m = 1; m <= 6; ++m) counts = counts && first_return_count(m) == first_return_count_brute(m);
    o.require(counts, "first-return counts m<=6");
    bool stirling = true;
    for (int d = 1; d <= 2; ++d)
        for (int m = 1; m <= 8; ++m) {
            const auto s = stirling_pm(m, d, 1.0);
            stirling = stirling && s.exact >= s.bound;
        }
    o.require(stirling, "Stirling mass m<=8 d<=2");
    const auto mc = emax_two_gaussians_mc(1.0, 1000000, RngStream{kSeed, 3, 0});
    const double z = std::abs(mc.value - emax_two_gaussians(1.0)) / mc.std_error;
    o.require(z <= 3.0, "E max z " + num(z));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs <= 120.0, "runtime " + num(secs) + " s");
    return o;
}

Outcome kernel_isometry_check() {
    Outcome o;
    for (double h : {0.3, 0.75}) {
        double worst = 0.0;
        for (double t : default_isometry_grid())
            for (double s : default_isometry_grid()) {
                const double exact = r_h(t, s, Hurst(h));
                worst = std::max(worst, std::abs(kernel_isometry(t, s, Hurst(h)).value - exact) / exact);
            }
        o.require(worst <= 1e-5, "H=" + num(h) + " max rel err " + num(worst));
    }
    return o;
}

Outcome lipschitz_scan() {
    Outcome o;
    const std::vector<int> ns{4, 8, 16, 32};
    for (double h : {0.3, 0.75}) {
        const auto s = lipschitz_ratio_scan(ns, default_window_pairs(), Hurst(h));
        o.require(std::isfinite(s.max_ratio1) && std::isfinite(s.max_ratio2),
                  "H=" + num(h) + " max ratio1 " + num(s.max_ratio1) + " ratio2 " + num(s.max_ratio2));
        o.require(s.refinement_change1 < 0.05, "H=" + num(h) + " ratio1 change " + num(s.refinement_change1));
        o.require(s.refinement_change2 < 0.05, "H=" + num(h) + " ratio2 change " + num(s.refinement_change2));
    }
    return o;
}

Outcome decomposition() {
    Outcome o;
    for (double h : {0.3, 0.75}) {
        double worst = 0.0;
        for (const auto& [l, t1, t2] : default_decomposition_cases())
            worst = std::max(worst, decomposition_variance_check(l, t1, t2, Hurst(h)).gap);
        o.require(worst <= 1e-5, "H=" + num(h) + " max gap " + num(worst) + " over 10 cases");
    }
    return o;
}

Outcome truncation_gap_check() {
    Outcome o;
    const std::vector<double> ts{2.0, 4.0, 6.0};
    for (double h : {0.5, 0.75}) {
        const auto rows = truncation_gap(ts, model(h), 200, env_stream(kSeed));
        std::int64_t violations = 0;
        std::string gaps;
        for (const auto& r : rows) {
            violations += r.violations;
            gaps += (gaps.empty() ? "" : ",") + num(r.gap.value);
        }
        o.require(violations == 0, "H=" + num(h) + " pathwise violations " + std::to_string(violations));
        if (h == 0.5) {
            bool decreasing = true;
            for (std::size_t i = 1; i < rows.size(); ++i)
                decreasing = decreasing && rows[i].gap.value <= rows[i - 1].gap.value;
            o.require(decreasing, "H=0.5 gap(2,4,6) = " + gaps + " nonincreasing");
        } else {
            o.detail += "; H=0.75 gap(2,4,6) = " + gaps;
        }
    }
    return o;
}

Outcome concentration() {
    Outcome o;
    const auto rep = concentration_check(4, model(0.5), 500, env_stream(kSeed));
    o.require(rep.report.satisfied, "exceedance " + num(rep.report.empirical_value) + " vs " +
                                        num(rep.report.bound_value));
    return o;
}

Outcome superadditivity() {
    Outcome o;
    std::vector<std::pair<int, int>> pairs;
    for (int n = 2; n <= 6; ++n)
        for (int m = 2; m <= 6; ++m) pairs.emplace_back(n, m);
    const auto defects = superadditivity_scan(pairs, model(0.5), 200, env_stream(kSeed));
    const auto s = summarize_defects(defects);
    o.require(std::isfinite(s.c_hat), "c_hat " + num(s.c_hat));
    o.require(!s.diverges, "min lower half " + num(s.min_lower) + " upper half " + num(s.min_upper) +
                               " slack " + num(s.slack));
    return o;
}

Outcome positivity_and_upper() {
    Outcome o;
    std::vector<double> grid;
    for (int t = 2; t <= 12; ++t) grid.push_back(t);
    const auto trace = lyapunov_trace(grid, model(0.5), 100, env_stream(kSeed));
    o.require(trace.fit.slope > 0.0 && trace.fit.ci_low > 0.0,
              "H=0.5 slope " + num(trace.fit.slope) + " CI [" + num(trace.fit.ci_low) + ", " +
                  num(trace.fit.ci_high) + "]");

    const auto u = estimate_U(10.0, model(0.3), 100, env_stream(kSeed), true);
    const double bound = u_hat_linear_bound(10.0, 1.0, Hurst(0.3));
    o.require(u.value <= bound, "H=0.3 U_hat(10) " + num(u.value) + " <= " + num(bound));

    const auto rough = lyapunov_trace(grid, model(0.75), 100, env_stream(kSeed));
    std::vector<double> y, se;
    bool finite = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double scale = grid[i] * std::sqrt(std::log(grid[i]));
        y.push_back(rough.u_hat[i].value / scale);
        se.push_back(rough.u_hat[i].std_error / scale);
        finite = finite && std::isfinite(y.back());
    }
    const auto trend = tail_trend(grid, y, se);
    o.require(finite && !trend.upward, "H=0.75 normalized trace max " + num(trend.max_value) +
                                           ", tail slope CI low " + num(trend.tail_fit.ci_low));
    return o;
}

Outcome circle() {
    Outcome o;
    const auto q = PeriodicKernel::cosine();
    const EnvConfig small{Hurst(0.75), 1, 2, 0.4, 0.1, kSeed};
    const auto kron = kronecker_moment_check(q, small, 4000, RngStream{kSeed, 4, 0});
    o.require(kron.max_abs_z <= 5.0, "Kronecker max z " + num(kron.max_abs_z) + " over " +
                                         std::to_string(kron.entries) + " entries");
    std::vector<double> grid;
    for (int t = 4; t <= 16; t += 2) grid.push_back(t);
    const auto g = circle_linear_growth(q, grid, model(0.75), 200, env_stream(kSeed));
    std::string trace;
    for (const auto& r : g.log_u_over_t) trace += (trace.empty() ? "" : ",") + num(r.value);
    o.require(!g.trend.upward, "(1/t) log u_c = " + trace + "; tail slope " + num(g.trend.tail_fit.slope) +
                                   " CI low " + num(g.trend.tail_fit.ci_low) + "; lambda_hat " + num(g.lambda_hat));
    return o;
}

Outcome determinism() {
    Outcome o;
    const auto dir = testing::scratch_dir("acceptance_determinism");
    int compared = 0, differing = 0;
    for (const auto& sub : subcommands()) {
        nlohmann::json base = {{"subcommand", sub}, {"seed", kSeed}, {"env_replicas", 16}};
        if (sub == "concentration") base["env_replicas"] = 200;
        if (sub == "circle") base["hurst"] = 0.75;
        if (sub == "bounds") base["samples"] = 2000;
        if (sub == "superadd") base["n_max"] = 4;
        std::vector<std::string> files[2];
        for (int k = 0; k < 2; ++k) {
            auto j = base;
            j["workers"] = k == 0 ? 1 : 3;
            j["out"] = (dir / (sub + "_" + std::to_string(k) + ".csv")).string();
            const auto c = RunConfig::from_json(j);
            run(c);
            for (const auto& entry : std::filesystem::directory_iterator(dir)) {
                const auto name = entry.path().filename().string();
                if (name.rfind(sub + "_" + std::to_string(k) + ".", 0) == 0)
                    files[k].push_back(testing::slurp(entry.path()));
            }
            std::sort(files[k].begin(), files[k].end());
        }
        ++compared;
        if (files[0] != files[1] || files[0].empty()) {
            ++differing;
            o.detail += (o.detail.empty() ? "" : "; ") + sub + " differs";
        }
    }
    o.require(differing == 0, std::to_string(compared) + " subcommands rerun at 1 and 3 workers");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"covariance fidelity", covariance_fidelity},
        {"oracle equivalence", oracle_equivalence},
        {"annealed exactness at H=1/2", annealed_exactness},
        {"variance envelope", variance_envelope},
        {"Poisson, Stirling and combinatorics", combinatorics},
        {"kernel isometry", kernel_isometry_check},
        {"Lipschitz and variance scan", lipschitz_scan},
        {"decomposition identity", decomposition},
        {"truncation gap", truncation_gap_check},
        {"concentration", concentration},
        {"super-additivity", superadditivity},
        {"positivity and upper bounds", positivity_and_upper},
        {"circle", circle},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !o.pass;
        std::printf("%s %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
