#include "polymer/polymer.hpp"

#include "polymer/digest.hpp"
#include "polymer/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace polymer {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int snap_to_grid(double time, double step) {
    const double ratio = time / step;
    const double k = std::round(ratio);
    if (std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("path_action: time is not on the environment grid");
    return static_cast<int>(k);
}

struct Resolved {
    int cells;
    double log_stay;
    double log_step;
    std::optional<std::int64_t> cap;  // only kept when it actually binds
};

Resolved resolve(const EnvField& env, const GridWalk& walk) {
    const auto& cfg = env.config();
    if (!(walk.kappa > 0.0)) throw std::invalid_argument("grid walk: kappa must be positive");
    const double p = walk.kappa * cfg.grid_step;
    if (p > kMaxJumpProbability)
        throw std::invalid_argument("grid walk: kappa * grid_step exceeds 0.2");
    const int cells = walk.cells.value_or(env.cells());
    if (cells < 1 || cells > env.cells())
        throw std::invalid_argument("grid walk: cell count outside the environment grid");
    if (walk.cap && *walk.cap < 0) throw std::invalid_argument("grid walk: negative jump cap");
    const std::int64_t reach = walk.cap ? std::min<std::int64_t>(*walk.cap, cells) : cells;
    if (env.box().radius() < reach)
        throw std::invalid_argument("grid walk: box radius smaller than min(cap, cells)");
    Resolved r{cells, std::log1p(-p), std::log(p / (2.0 * cfg.dimension)), std::nullopt};
    if (walk.cap && *walk.cap < cells) r.cap = walk.cap;
    return r;
}

std::vector<std::int64_t> neighbour_table(const SiteBox& box) {
    const int d = box.dimension();
    std::vector<std::int64_t> table(box.size() * 2 * d, -1);
    for (std::size_t s = 0; s < box.size(); ++s) {
        auto x = box.coords(s);
        for (int a = 0; a < d; ++a) {
            for (int sign = 0; sign < 2; ++sign) {
                x[a] += sign == 0 ? 1 : -1;
                if (box.contains(x)) table[s * 2 * d + 2 * a + sign] = static_cast<std::int64_t>(box.index(x));
                x[a] -= sign == 0 ? 1 : -1;
            }
        }
    }
    return table;
}

double log_sum(std::span<const double> xs) {
    double mx = kNegInf;
    for (double x : xs) mx = std::max(mx, x);
    if (mx == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace

double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == kNegInf) return a;
    return a + std::log1p(std::exp(b - a));
}

PathAction path_action(const WalkPath& path, const EnvField& env) {
    const auto& cfg = env.config();
    const int end_cell = snap_to_grid(path.horizon(), cfg.grid_step);
    if (end_cell > env.cells()) throw std::invalid_argument("path_action: horizon beyond t_max");
    if (path.dimension() != cfg.dimension)
        throw std::invalid_argument("path_action: dimension mismatch");
    double total = 0.0;
    int start = 0;
    for (std::size_t i = 0; i <= path.jumps(); ++i) {
        const int stop = i < path.jumps() ? snap_to_grid(path.jump_times()[i], cfg.grid_step) : end_cell;
        const std::size_t site = env.box().index(path.sites()[i]);
        for (int k = start; k < stop; ++k) total += env.increment(site, k);
        start = stop;
    }
    return {total};
}

double path_variance(const WalkPath& path, Hurst hurst) {
    double var = 0.0;
    for (const auto& [site, intervals] : segments(path)) {
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            var += increment_cov(intervals[i], intervals[i], hurst);
            for (std::size_t j = 0; j < i; ++j) var += 2.0 * increment_cov(intervals[i], intervals[j], hurst);
        }
    }
    return var;
}

std::vector<double> dp_log_trace(const EnvField& env, const GridWalk& walk) {
    const Resolved r = resolve(env, walk);
    const SiteBox& box = env.box();
    const auto sites = box.size();
    const int d = box.dimension();
    const auto nbr = neighbour_table(box);
    const std::size_t layers = r.cap ? static_cast<std::size_t>(*r.cap) + 1 : 1;

    // w[site * layers + jumps] = log weight of being at site with that many jumps.
    std::vector<double> w(sites * layers, kNegInf), next(sites * layers);
    w[box.origin() * layers] = 0.0;
    std::vector<double> trace;
    trace.reserve(r.cells);
    std::vector<double> terms;
    terms.reserve(2 * d + 1);

    for (int k = 0; k < r.cells; ++k) {
        for (std::size_t s = 0; s < sites; ++s) {
            const double inc = env.increment(s, k);
            for (std::size_t j = 0; j < layers; ++j) {
                terms.clear();
                terms.push_back(r.log_stay + w[s * layers + j]);
                // Without a cap every step stays on layer 0.
                const bool capped = r.cap.has_value();
                if (!capped || j > 0) {
                    const std::size_t from = capped ? j - 1 : 0;
                    for (int e = 0; e < 2 * d; ++e) {
                        const auto n = nbr[s * 2 * d + e];
                        if (n >= 0) terms.push_back(r.log_step + w[static_cast<std::size_t>(n) * layers + from]);
                    }
                }
                const double lw = log_sum(terms);
                next[s * layers + j] = lw == kNegInf ? kNegInf : lw + inc;
            }
        }
        w.swap(next);
        trace.push_back(log_sum(w));
    }
    return trace;
}

PartitionValue dp_partition(const EnvField& env, const GridWalk& walk) {
    const auto trace = dp_log_trace(env, walk);
    const double lu = trace.back();
    return {std::exp(lu), lu, walk.cap.has_value()};
}

PartitionValue brute_force_partition(const EnvField& env, const GridWalk& walk) {
    const Resolved r = resolve(env, walk);
    const auto& cfg = env.config();
    const SiteBox& box = env.box();
    const double p = walk.kappa * cfg.grid_step;
    const std::int64_t cap = walk.cap.value_or(r.cells);

    double mx = kNegInf, acc = 0.0;
    enumerate_grid_paths(r.cells, cfg.dimension, p, [&](const GridSkeleton& seq, double prob) {
        std::int64_t jumps = 0;
        std::vector<int> x(cfg.dimension, 0);
        double action = 0.0;
        for (int k = 0; k < r.cells; ++k) {
            if (seq[k] != 0) {
                ++jumps;
                x[std::abs(seq[k]) - 1] += seq[k] > 0 ? 1 : -1;
            }
            action += env.increment(box.index(x), k);
        }
        if (jumps > cap || prob <= 0.0) return;
        const double term = std::log(prob) + action;
        if (term > mx) {
            acc = acc * std::exp(mx - term) + 1.0;
            mx = term;
        } else {
            acc += std::exp(term - mx);
        }
    });
    const double lu = mx + std::log(acc);
    return {std::exp(lu), lu, walk.cap.has_value()};
}

EstimateRecord annealed_mean(double kappa, double t, Hurst hurst, int dimension,
                             std::int64_t replicas, const RngStream& stream, int workers) {
    if (replicas < 1) throw std::invalid_argument("annealed_mean: replicas must be >= 1");
    const auto samples = parallel_map(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
        Philox g = stream.with_replica(r).substream(0);
        const WalkPath path = sample_path(kappa, t, dimension, g);
        return std::exp(0.5 * path_variance(path, hurst));
    });
    nlohmann::json cfg = {{"op", "annealed_mean"}, {"kappa", kappa}, {"t", t},
                          {"hurst", hurst.value()}, {"dimension", dimension}, {"replicas", replicas}};
    return summarize(samples, stream.seed, hex_digest(cfg.dump()));
}

}  // namespace polymer
