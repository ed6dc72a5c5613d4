#include "polymer/records.hpp"

#include <cmath>
#include <stdexcept>

namespace polymer {

BoundReport make_bound_report(std::string name, std::string params, double bound,
                              double empirical) {
    BoundReport r;
    r.name = std::move(name);
    r.params = std::move(params);
    r.bound_value = bound;
    r.empirical_value = empirical;
    r.satisfied = empirical <= bound;
    r.margin = bound - empirical;
    return r;
}

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

EstimateRecord summarize(std::span<const double> samples, std::uint64_t seed,
                         std::string digest) {
    if (samples.empty()) throw std::invalid_argument("summarize: no samples");
    EstimateRecord rec;
    rec.replicas = static_cast<std::int64_t>(samples.size());
    rec.seed = seed;
    rec.config_digest = std::move(digest);
    const double n = static_cast<double>(samples.size());
    rec.value = pairwise_sum(samples) / n;
    if (samples.size() > 1) {
        std::vector<double> dev(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double e = samples[i] - rec.value;
            dev[i] = e * e;
        }
        rec.std_error = std::sqrt(pairwise_sum(dev) / (n - 1.0) / n);
    }
    return rec;
}

}  // namespace polymer
