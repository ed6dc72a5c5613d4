#include "polymer/bounds.hpp"
#include "polymer/polymer.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace polymer;

namespace {

EnvField random_env(double h, int radius, double t, std::uint64_t seed, std::uint64_t replica) {
    const EnvConfig cfg{Hurst(h), 1, radius, t, 0.1, seed};
    return sample_env(cfg, env_stream(seed, replica));
}

// Covariance double sum over all segment pairs, written independently of the
// library's same-site grouping.
double variance_oracle(const WalkPath& p, double h) {
    std::vector<double> times{0.0};
    times.insert(times.end(), p.jump_times().begin(), p.jump_times().end());
    times.push_back(p.horizon());
    double v = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        for (std::size_t j = 0; j + 1 < times.size(); ++j)
            if (p.sites()[i] == p.sites()[j])
                v += increment_cov(times[i], times[i + 1], times[j], times[j + 1], Hurst(h));
    return v;
}

// Direct sum over enumerated skeletons.
double enumeration_oracle(const EnvField& env, double kappa, std::optional<int> cap) {
    const int m = env.cells();
    const double p = kappa * env.config().grid_step;
    double total = 0.0;
    enumerate_grid_paths(m, 1, p, [&](const GridSkeleton& s, double prob) {
        int x = 0, jumps = 0;
        double action = 0.0;
        for (int k = 0; k < m; ++k) {
            if (s[k] != 0) {
                x += s[k] > 0 ? 1 : -1;
                ++jumps;
            }
            action += env.increment(env.box().index(std::vector<int>{x}), k);
        }
        if (!cap || jumps <= *cap) total += prob * std::exp(action);
    });
    return std::log(total);
}

}  // namespace

TEST_CASE("path action on a zero field and on a resting path") {
    const EnvConfig cfg{Hurst(0.7), 1, 2, 2.0, 0.1, 0};
    const WalkPath p(2.0, {0.5, 1.2}, {{0}, {1}, {0}});
    CHECK(path_action(p, EnvField::zero(cfg)).value == 0.0);

    const auto env = random_env(0.7, 2, 2.0, 4, 0);
    const auto origin = env.site_increments(env.box().origin());
    const double sum = std::accumulate(origin.begin(), origin.end(), 0.0);
    CHECK(path_action(WalkPath::constant(2.0, 1), env).value == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("path action matches a cell-by-cell resummation and is linear") {
    const auto e1 = random_env(0.4, 3, 3.0, 8, 1);
    const auto e2 = random_env(0.4, 3, 3.0, 8, 2);
    std::vector<double> summed(e1.increments().size());
    for (std::size_t i = 0; i < summed.size(); ++i) summed[i] = e1.increments()[i] + e2.increments()[i];
    const EnvField e12(e1.config(), 0, summed);

    const WalkPath p(3.0, {0.3, 0.9, 1.0, 2.4}, {{0}, {-1}, {-2}, {-1}, {0}});
    double oracle = 0.0;
    for (int k = 0; k < 30; ++k) {
        const double mid = (k + 0.5) * 0.1;
        std::size_t seg = 0;
        while (seg < p.jumps() && p.jump_times()[seg] <= mid) ++seg;
        oracle += e1.increment(e1.box().index(p.sites()[seg]), k);
    }
    const double a1 = path_action(p, e1).value;
    CHECK(std::abs(a1 - oracle) <= 1e-12);
    CHECK(std::abs(path_action(p, e12).value - a1 - path_action(p, e2).value) <= 1e-12);

    const WalkPath off(3.0, {0.35}, {{0}, {1}});
    CHECK_THROWS(path_action(off, e1));
}

TEST_CASE("path variance examples") {
    CHECK(path_variance(WalkPath::constant(2.0, 1), Hurst(0.75)) == doctest::Approx(2.828427).epsilon(1e-6));
    CHECK(path_variance(WalkPath(2.0, {1.0}, {{0}, {1}}), Hurst(0.5)) == doctest::Approx(2.0));
    const WalkPath loop(3.0, {1.0, 2.0}, {{0}, {1}, {0}});
    const double expected = 2.0 + 2.0 * (0.5 * (1.0 + std::pow(3.0, 1.5) - std::pow(2.0, 1.5)) -
                                         0.5 * std::pow(2.0, 1.5)) + 1.0;
    CHECK(path_variance(loop, Hurst(0.75)) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(3.5393).epsilon(1e-4));
}

TEST_CASE("path variance agrees with the pairwise oracle and the envelope") {
    const RngStream stream{12, 3, 0};
    for (double h : {0.2, 0.3, 0.5, 0.75, 0.9}) {
        for (int r = 0; r < 300; ++r) {
            Philox g = stream.with_replica(r).substream(static_cast<std::uint32_t>(h * 10));
            const auto p = sample_path(1.5, 4.0, 1 + r % 2, g);
            const double v = path_variance(p, Hurst(h));
            CHECK(v == doctest::Approx(variance_oracle(p, h)).epsilon(1e-10));
            CHECK(v <= variance_upper(4.0, static_cast<std::int64_t>(p.jumps()), Hurst(h)) + 1e-9);
        }
    }
}

TEST_CASE("partition function on a zero field is one") {
    const EnvConfig cfg{Hurst(0.3), 1, 6, 0.6, 0.1, 0};
    const auto z = EnvField::zero(cfg);
    for (double kappa : {0.5, 1.0, 2.0}) {
        CHECK(dp_partition(z, {kappa, std::nullopt, std::nullopt}).u == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(brute_force_partition(z, {kappa, std::nullopt, std::nullopt}).u ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("cap zero keeps only the resting path") {
    const auto env = random_env(0.6, 0, 0.6, 3, 0);
    const auto origin = env.site_increments(env.box().origin());
    const double expected = std::accumulate(origin.begin(), origin.end(), 0.0) + 6.0 * std::log1p(-0.1);
    CHECK(dp_partition(env, {1.0, 0, std::nullopt}).log_u == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("DP agrees with enumeration") {
    for (int rep = 0; rep < 20; ++rep) {
        const double h = 0.25 + 0.05 * (rep % 10);
        const auto env = random_env(h, 6, 0.6, 31, rep);
        for (std::optional<int> cap : {std::optional<int>{}, std::optional<int>{0}, std::optional<int>{2}}) {
            const GridWalk walk{1.5, cap ? std::optional<std::int64_t>(*cap) : std::nullopt, std::nullopt};
            const double dp = dp_partition(env, walk).log_u;
            CHECK(std::abs(dp - brute_force_partition(env, walk).log_u) <= 1e-12);
            CHECK(std::abs(dp - enumeration_oracle(env, 1.5, cap)) <= 1e-12);
        }
    }
}

TEST_CASE("truncation never increases the partition function") {
    for (int rep = 0; rep < 20; ++rep) {
        const auto env = random_env(0.75, 20, 2.0, 17, rep);
        const double full = dp_partition(env, {1.0, std::nullopt, std::nullopt}).log_u;
        double prev = -INFINITY;
        for (std::int64_t cap : {0, 1, 2, 4, 8, 20}) {
            const double capped = dp_partition(env, {1.0, cap, std::nullopt}).log_u;
            CHECK(capped <= full + 1e-12);
            CHECK(capped >= prev - 1e-12);
            prev = capped;
        }
        CHECK(std::abs(prev - full) <= 1e-12);
    }
}

TEST_CASE("log trace ends at the partition function") {
    const auto env = random_env(0.5, 12, 1.2, 2, 0);
    const GridWalk walk{1.0, std::nullopt, std::nullopt};
    const auto trace = dp_log_trace(env, walk);
    REQUIRE(trace.size() == 12);
    CHECK(trace.back() == doctest::Approx(dp_partition(env, walk).log_u).epsilon(1e-14));
    const GridWalk prefix{1.0, std::nullopt, 5};
    CHECK(trace[4] == doctest::Approx(dp_partition(env, prefix).log_u).epsilon(1e-14));
}

TEST_CASE("solver guards") {
    const auto env = random_env(0.5, 2, 1.0, 1, 0);
    CHECK_THROWS(dp_partition(env, {3.0, std::nullopt, std::nullopt}));
    CHECK_THROWS(dp_partition(env, {1.0, std::nullopt, std::nullopt}));
    CHECK_NOTHROW(dp_partition(env, {1.0, 2, std::nullopt}));
}

TEST_CASE("annealed mean") {
    for (double t : {1.0, 2.0, 4.0}) {
        const auto rec = annealed_mean(1.3, t, Hurst(0.5), 1, 500, RngStream{1, 2, 0});
        CHECK(std::abs(rec.value - std::exp(t / 2.0)) <= 1e-12 * std::exp(t / 2.0));
        CHECK(rec.std_error <= 1e-14);
    }
    const auto up = annealed_mean(1.0, 1.0, Hurst(0.75), 1, 4000, RngStream{1, 3, 0});
    CHECK(up.value <= std::exp(0.5) + 1e-12);
    CHECK(up.value >= 1.0);
    CHECK(up.std_error > 0.0);
    // Rough fields: each path's term is below exp((N+1)^{1-2H} t^{2H} / 2) by the envelope.
    const auto down = annealed_mean(1.0, 1.0, Hurst(0.3), 1, 4000, RngStream{1, 4, 0});
    CHECK(down.value >= std::exp(0.5) - 1e-12);
}

TEST_CASE("log_add") {
    CHECK(log_add(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)));
    CHECK(log_add(-INFINITY, 1.5) == 1.5);
    CHECK(log_add(1000.0, 1000.0) == doctest::Approx(1000.0 + std::log(2.0)));
}
