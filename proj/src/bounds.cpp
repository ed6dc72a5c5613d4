#include "polymer/bounds.hpp"

#include "polymer/digest.hpp"
#include "polymer/parallel.hpp"
#include "polymer/walk.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace polymer {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

BigInt binomial(int n, int k) {
    BigInt r = 1;
    for (int i = 1; i <= k; ++i) {
        r *= n - k + i;
        r /= i;
    }
    return r;
}

BigInt factorial(int n) {
    BigInt r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

void check_desk(int m, int dimension) {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (dimension < 1) throw std::invalid_argument("dimension must be >= 1");
    if (first_return_class_size(m, dimension) > kSkeletonLimit)
        throw std::length_error("first-return skeleton class too large to enumerate");
}

}  // namespace

double poisson_tail_bound(double lambda, double n) {
    if (!(lambda > 0.0)) throw std::invalid_argument("poisson_tail_bound: lambda must be positive");
    if (!(n > lambda)) throw std::invalid_argument("poisson_tail_bound: requires n > lambda");
    return std::exp(-lambda + n * (1.0 + std::log(lambda) - std::log(n)));
}

double poisson_upper_tail(double lambda, std::int64_t n) {
    if (n <= 0) return 1.0;
    return boost::math::gamma_p(static_cast<double>(n), lambda);
}

double variance_upper(double t, std::int64_t n_jumps, Hurst hurst) {
    if (!(t > 0.0)) throw std::invalid_argument("variance_upper: t must be positive");
    if (n_jumps < 0) throw std::invalid_argument("variance_upper: negative jump count");
    const double h = hurst.value();
    if (hurst.above_half()) return std::pow(t, 2.0 * h);
    return std::pow(static_cast<double>(n_jumps + 1), 1.0 - 2.0 * h) * std::pow(t, 2.0 * h);
}

double u_hat_linear_bound(double horizon, double kappa, Hurst hurst) {
    if (hurst.above_half()) throw std::invalid_argument("u_hat_linear_bound: requires H <= 1/2");
    const TruncationSpec spec{hurst, kappa};
    return 0.5 * (spec.rho() * horizon + 1.0);
}

BigInt first_return_count(int m) {
    if (m < 1) throw std::invalid_argument("first_return_count: m must be >= 1");
    return binomial(2 * m, m) / (2 * m - 1);
}

std::int64_t first_return_count_brute(int m) {
    if (m < 1 || m > 12) throw std::invalid_argument("first_return_count_brute: 1 <= m <= 12");
    const int len = 2 * m;
    std::int64_t count = 0;
    for (std::uint32_t bits = 0; bits < (1u << len); ++bits) {
        int pos = 0;
        int first = 0;
        for (int i = 0; i < len && first == 0; ++i) {
            pos += (bits >> i) & 1u ? 1 : -1;
            if (pos == 0) first = i + 1;
        }
        if (first == len) ++count;
    }
    return count;
}

double emax_two_gaussians(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("emax_two_gaussians: sigma must be positive");
    return sigma / std::sqrt(std::numbers::pi);
}

EstimateRecord emax_two_gaussians_mc(double sigma, std::int64_t pairs, const RngStream& stream) {
    if (pairs < 2) throw std::invalid_argument("emax_two_gaussians_mc: need at least 2 pairs");
    Philox g = stream.substream(0);
    std::vector<double> xs(static_cast<std::size_t>(pairs));
    for (auto& x : xs) {
        const double a = sigma * g.normal();
        const double b = sigma * g.normal();
        x = std::max(a, b);
    }
    nlohmann::json cfg = {{"op", "emax"}, {"sigma", sigma}, {"pairs", pairs}};
    return summarize(xs, stream.seed, hex_digest(cfg.dump()));
}

StirlingMass stirling_pm(int m, int dimension, double kappa) {
    if (m < 1 || dimension < 1) throw std::invalid_argument("stirling_pm: m, d must be >= 1");
    if (!(kappa > 0.0)) throw std::invalid_argument("stirling_pm: kappa must be positive");
    const double j = 2.0 * m * dimension;
    StirlingMass s;
    s.horizon = j / kappa;
    s.exact = std::exp(-j + j * std::log(j) - std::lgamma(j + 1.0));
    s.bound = 1.0 / (2.0 * std::numbers::e * std::sqrt(std::numbers::pi * m * dimension));
    return s;
}

BigInt first_return_class_size(int m, int dimension) {
    if (m < 1 || dimension < 1) throw std::invalid_argument("class size: m, d must be >= 1");
    BigInt den = 1;
    const BigInt fm = factorial(m);
    for (int i = 0; i < 2 * dimension; ++i) den *= fm;
    for (int i = 0; i < dimension; ++i) den *= 2 * m - 1;
    return factorial(2 * m * dimension) / den;
}

std::vector<std::vector<int>> first_return_skeletons(int m, int dimension) {
    check_desk(m, dimension);
    const int total = 2 * m * dimension;
    std::vector<std::vector<int>> out;
    std::vector<int> moves(dimension, 0), pos(dimension, 0), seq;
    seq.reserve(total);

    auto recurse = [&](auto&& self) -> void {
        if (static_cast<int>(seq.size()) == total) {
            out.push_back(seq);
            return;
        }
        for (int a = 0; a < dimension; ++a) {
            if (moves[a] == 2 * m) continue;
            for (int sign : {+1, -1}) {
                const int next = pos[a] + sign;
                const bool last = moves[a] + 1 == 2 * m;
                if (last != (next == 0)) continue;
                // Remaining moves must be able to bring the coordinate home.
                if (std::abs(next) > 2 * m - moves[a] - 1) continue;
                ++moves[a];
                pos[a] = next;
                seq.push_back(sign * (a + 1));
                self(self);
                seq.pop_back();
                pos[a] -= sign;
                --moves[a];
            }
        }
    };
    recurse(recurse);
    return out;
}

LowerBoundResult lower_bound_experiment(int m, const ModelParams& params,
                                        std::int64_t env_replicas, const RngStream& stream) {
    params.validate();
    if (env_replicas < 2) throw std::invalid_argument("lower_bound_experiment: env_replicas must be >= 2");
    const int d = params.dimension;
    const auto skeletons = first_return_skeletons(m, d);
    const int jumps = 2 * m * d;

    LowerBoundResult res;
    res.m = m;
    res.horizon = jumps / params.kappa;
    res.skeletons = static_cast<std::int64_t>(skeletons.size());
    const double ratio = res.horizon / params.grid_step;
    const int cells = static_cast<int>(std::round(ratio));
    if (std::abs(ratio - cells) > 1e-9 * ratio)
        throw std::invalid_argument("lower_bound_experiment: T = 2md/kappa is not on the grid");
    if (cells - 1 < jumps)
        throw std::invalid_argument("lower_bound_experiment: grid too coarse for 2md distinct jump cells");

    res.log_pm = std::log(stirling_pm(m, d, params.kappa).exact);
    const double log_prefix = res.log_pm - jumps * std::log(2.0 * d);
    res.zero_field_value = (log_prefix + std::log(static_cast<double>(skeletons.size()))) / res.horizon;

    // Sites visited by each skeleton, in jump order (index 0 = origin).
    EnvConfig config{params.hurst, d, m, cells * params.grid_step, params.grid_step, stream.seed};
    const SiteBox box = config.box();
    std::vector<std::vector<std::size_t>> visits(skeletons.size());
    for (std::size_t j = 0; j < skeletons.size(); ++j) {
        std::vector<int> x(d, 0);
        visits[j].push_back(box.index(x));
        for (int step : skeletons[j]) {
            x[std::abs(step) - 1] += step > 0 ? 1 : -1;
            visits[j].push_back(box.index(x));
        }
    }

    std::optional<PsdFactor> root;
    if (!params.zero_field) root = psd_factor(time_gram(config));
    const double log_placements = log_binomial(cells - 1, jumps);

    const auto samples = parallel_map(static_cast<std::size_t>(env_replicas), params.workers, [&](std::size_t r) {
        const EnvField env = params.zero_field ? EnvField::zero(config)
                                               : sample_env(config, stream.with_replica(r), *root);
        double log_total = kNegInf;
        std::vector<double> g(jumps + 1), next(jumps + 1);
        for (const auto& sites : visits) {
            // g[i]: log sum over placements of i jumps in cells 1..k of exp(action).
            std::fill(g.begin(), g.end(), kNegInf);
            g[0] = env.increment(sites[0], 0);
            for (int k = 1; k < cells; ++k) {
                const int lo = std::max(0, jumps - (cells - 1 - k));
                const int hi = std::min(jumps, k);
                std::fill(next.begin(), next.end(), kNegInf);
                for (int i = lo; i <= hi; ++i) {
                    const double w = i > 0 ? log_add(g[i], g[i - 1]) : g[i];
                    if (w != kNegInf) next[i] = w + env.increment(sites[i], k);
                }
                g.swap(next);
            }
            log_total = log_add(log_total, g[jumps] - log_placements);
        }
        return (log_prefix + log_total) / res.horizon;
    });
    res.estimate = summarize(samples, stream.seed, params.digest("lower-bound", {{"m", m}}));
    return res;
}

}  // namespace polymer
