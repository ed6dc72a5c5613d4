#include "polymer/walk.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace polymer {

namespace {

bool unit_step(const Site& a, const Site& b) {
    if (a.size() != b.size()) return false;
    int diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int delta = std::abs(a[i] - b[i]);
        if (delta > 1) return false;
        diff += delta;
    }
    return diff == 1;
}

}  // namespace

WalkPath::WalkPath(double horizon, std::vector<double> jump_times, std::vector<Site> sites)
    : horizon_(horizon), jump_times_(std::move(jump_times)), sites_(std::move(sites)) {
    if (!(horizon_ > 0.0)) throw std::invalid_argument("WalkPath: horizon must be positive");
    if (sites_.size() != jump_times_.size() + 1)
        throw std::invalid_argument("WalkPath: need exactly one more site than jumps");
    if (sites_.front().empty()) throw std::invalid_argument("WalkPath: empty site coordinates");
    for (int c : sites_.front())
        if (c != 0) throw std::invalid_argument("WalkPath: path must start at the origin");
    double prev = 0.0;
    for (std::size_t i = 0; i < jump_times_.size(); ++i) {
        const double t = jump_times_[i];
        if (!(t > prev) || !(t < horizon_))
            throw std::invalid_argument("WalkPath: jump times must increase strictly in (0,t)");
        prev = t;
        if (!unit_step(sites_[i], sites_[i + 1]))
            throw std::invalid_argument("WalkPath: consecutive sites must differ by a unit step");
    }
}

WalkPath WalkPath::constant(double horizon, int dimension) {
    return WalkPath(horizon, {}, {Site(dimension, 0)});
}

nlohmann::json WalkPath::to_json() const {
    std::vector<int> deltas;
    deltas.reserve(jumps());
    for (std::size_t i = 0; i < jumps(); ++i) {
        for (std::size_t a = 0; a < sites_[i].size(); ++a) {
            const int step = sites_[i + 1][a] - sites_[i][a];
            if (step != 0) deltas.push_back(step * static_cast<int>(a + 1));
        }
    }
    return {{"horizon", horizon_},
            {"dimension", dimension()},
            {"jump_times", jump_times_},
            {"deltas", deltas}};
}

WalkPath WalkPath::from_json(const nlohmann::json& j) {
    const int d = j.at("dimension").get<int>();
    const auto deltas = j.at("deltas").get<std::vector<int>>();
    std::vector<Site> sites{Site(d, 0)};
    for (int delta : deltas) {
        const int axis = std::abs(delta) - 1;
        if (axis < 0 || axis >= d) throw std::invalid_argument("WalkPath: bad step encoding");
        Site next = sites.back();
        next[axis] += delta > 0 ? 1 : -1;
        sites.push_back(std::move(next));
    }
    return WalkPath(j.at("horizon").get<double>(), j.at("jump_times").get<std::vector<double>>(),
                    std::move(sites));
}

SegmentList segments(const WalkPath& path) {
    SegmentList out;
    const auto& times = path.jump_times();
    double start = 0.0;
    for (std::size_t i = 0; i <= times.size(); ++i) {
        const double end = i < times.size() ? times[i] : path.horizon();
        out[path.sites()[i]].push_back({start, end});
        start = end;
    }
    return out;
}

WalkPath sample_path(double kappa, double t, int dimension, Philox& rng) {
    if (!(kappa > 0.0) || !(t > 0.0)) throw std::invalid_argument("sample_path: kappa, t > 0");
    if (dimension < 1) throw std::invalid_argument("sample_path: dimension must be positive");
    // Exponential holding times give Poisson(kappa t) jumps whose times are
    // distributed as uniform order statistics.
    std::vector<double> times;
    std::vector<Site> sites{Site(dimension, 0)};
    double clock = rng.exponential(kappa);
    while (clock < t) {
        times.push_back(clock);
        const auto pick = static_cast<int>(rng.uniform() * 2 * dimension);
        Site next = sites.back();
        next[pick / 2] += (pick % 2 == 0) ? 1 : -1;
        sites.push_back(std::move(next));
        clock += rng.exponential(kappa);
    }
    return WalkPath(t, std::move(times), std::move(sites));
}

double TruncationSpec::rho() const { return std::max(std::exp(6.0), 1.0 / kappa); }

std::int64_t jump_cap(double t, const TruncationSpec& spec) {
    if (!(t > 0.0)) throw std::invalid_argument("jump_cap: t must be positive");
    if (spec.hurst.above_half()) return static_cast<std::int64_t>(std::floor(t * t));
    return static_cast<std::int64_t>(std::floor(spec.rho() * spec.kappa * t));
}

void enumerate_grid_paths(int m, int dimension, double p_jump,
                          const std::function<void(const GridSkeleton&, double)>& visit) {
    if (m < 0 || dimension < 1) throw std::invalid_argument("enumerate_grid_paths: bad sizes");
    if (!(p_jump >= 0.0 && p_jump <= 1.0))
        throw std::invalid_argument("enumerate_grid_paths: p_jump must lie in [0,1]");
    const int choices = 2 * dimension + 1;
    if (std::pow(static_cast<double>(choices), m) > kEnumerationLimit)
        throw std::length_error("enumerate_grid_paths: (2d+1)^m exceeds the enumeration guard");

    const double p_stay = 1.0 - p_jump;
    const double p_step = p_jump / (2 * dimension);
    GridSkeleton seq(m, 0);
    std::vector<double> prob(m + 1, 1.0);
    // Odometer over decisions: 0 stays, 1..2d map to +/-(axis+1).
    auto decision = [dimension](int code) {
        if (code == 0) return 0;
        const int axis = (code - 1) / 2;
        return (code - 1) % 2 == 0 ? axis + 1 : -(axis + 1);
    };
    std::vector<int> code(m, 0);
    for (int i = 0; i < m; ++i) prob[i + 1] = prob[i] * p_stay;
    while (true) {
        visit(seq, prob[m]);
        int pos = m - 1;
        while (pos >= 0 && code[pos] == choices - 1) --pos;
        if (pos < 0) break;
        ++code[pos];
        for (int i = pos; i < m; ++i) {
            if (i > pos) code[i] = 0;
            seq[i] = decision(code[i]);
            prob[i + 1] = prob[i] * (code[i] == 0 ? p_stay : p_step);
        }
    }
}

}  // namespace polymer
