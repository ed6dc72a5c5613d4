#include "polymer/gaussian_env.hpp"

#include "polymer/digest.hpp"

#include <algorithm>
#include <cmath>

namespace polymer {

Hurst::Hurst(double h) : h_(h) {
    if (!(h > 0.0 && h < 1.0)) throw std::domain_error("Hurst parameter must lie in (0,1)");
}

double r_h(double t, double s, Hurst hurst) {
    if (t < 0.0 || s < 0.0) throw std::domain_error("r_h: times must be nonnegative");
    const double e = 2.0 * hurst.value();
    return 0.5 * (std::pow(t, e) + std::pow(s, e) - std::pow(std::abs(t - s), e));
}

double increment_cov(double a, double b, double c, double d, Hurst hurst) {
    if (!(0.0 <= a && a <= b && 0.0 <= c && c <= d))
        throw std::domain_error("increment_cov: intervals must satisfy 0 <= start <= end");
    // Expanded form of R(b,d) - R(b,c) - R(a,d) + R(a,c); the t^2H terms cancel,
    // which keeps far-from-origin intervals free of cancellation error.
    const double e = 2.0 * hurst.value();
    auto p = [e](double x) { return std::pow(std::abs(x), e); };
    return 0.5 * (p(b - c) + p(a - d) - p(b - d) - p(a - c));
}

double increment_cov(Interval x, Interval y, Hurst hurst) {
    return increment_cov(x.start, x.end, y.start, y.end, hurst);
}

IncrementGram increment_gram(std::span<const Interval> intervals, Hurst hurst) {
    if (intervals.empty()) throw std::domain_error("increment_gram: empty interval list");
    const auto n = static_cast<Eigen::Index>(intervals.size());
    IncrementGram g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            g(i, j) = g(j, i) = increment_cov(intervals[i], intervals[j], hurst);
        }
    }
    return g;
}

namespace {

bool try_factor(const Eigen::MatrixXd& a, PsdFactor& out) {
    const double scale = std::max(a.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    const double neg_tol = 1e-9 * scale;
    const double zero_tol = 1e-14 * scale;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    const Eigen::VectorXd d = ldlt.vectorD();
    if (!d.allFinite() || d.minCoeff() < -neg_tol) return false;

    const Eigen::MatrixXd l = ldlt.matrixL();
    Eigen::MatrixXd full = l * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    full = ldlt.transpositionsP().transpose() * full;

    std::vector<int> keep;
    for (Eigen::Index j = 0; j < d.size(); ++j)
        if (d(j) > zero_tol) keep.push_back(static_cast<int>(j));
    out.root.resize(a.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) out.root.col(c) = full.col(keep[c]);
    out.column_ids = std::move(keep);
    return true;
}

}  // namespace

PsdFactor psd_factor(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() == 0)
        throw std::domain_error("psd_factor: matrix must be square and nonempty");
    PsdFactor f;
    if (try_factor(a, f)) return f;
    Eigen::MatrixXd jittered = a;
    jittered.diagonal().array() += 1e-12;
    if (try_factor(jittered, f)) return f;
    throw FactorizationError("covariance matrix is not positive semidefinite within tolerance");
}

SiteBox::SiteBox(int dimension, int radius) : d_(dimension), radius_(radius), size_(1) {
    if (dimension < 1) throw std::domain_error("dimension must be positive");
    if (radius < 0) throw std::domain_error("box radius must be nonnegative");
    for (int i = 0; i < d_; ++i) size_ *= static_cast<std::size_t>(side());
}

bool SiteBox::contains(std::span<const int> x) const {
    if (static_cast<int>(x.size()) != d_) return false;
    return std::all_of(x.begin(), x.end(), [this](int c) { return std::abs(c) <= radius_; });
}

std::size_t SiteBox::index(std::span<const int> x) const {
    if (!contains(x)) throw std::out_of_range("site outside the environment box");
    std::size_t idx = 0;
    for (int i = d_ - 1; i >= 0; --i) idx = idx * side() + static_cast<std::size_t>(x[i] + radius_);
    return idx;
}

std::vector<int> SiteBox::coords(std::size_t index) const {
    std::vector<int> x(d_);
    for (int i = 0; i < d_; ++i) {
        x[i] = static_cast<int>(index % side()) - radius_;
        index /= side();
    }
    return x;
}

std::size_t SiteBox::origin() const {
    std::vector<int> zero(d_, 0);
    return index(zero);
}

int EnvConfig::cells() const {
    if (!(t_max > 0.0) || !(grid_step > 0.0))
        throw std::domain_error("t_max and grid_step must be positive");
    const double ratio = t_max / grid_step;
    const double m = std::round(ratio);
    if (m < 1.0 || std::abs(ratio - m) > 1e-9 * std::max(1.0, ratio))
        throw std::domain_error("t_max must be a positive integer multiple of grid_step");
    return static_cast<int>(m);
}

void EnvConfig::validate() const {
    (void)cells();
    (void)box();
}

std::vector<Interval> EnvConfig::grid_cells() const {
    const int m = cells();
    std::vector<Interval> out(m);
    for (int k = 0; k < m; ++k) out[k] = {k * grid_step, (k + 1) * grid_step};
    return out;
}

std::string config_digest(const EnvConfig& c) {
    nlohmann::json j = {{"hurst", c.hurst.value()},  {"dimension", c.dimension},
                        {"box_radius", c.box_radius}, {"t_max", c.t_max},
                        {"grid_step", c.grid_step}};
    return hex_digest(j.dump());
}

EnvField::EnvField(EnvConfig config, std::uint64_t replica, std::vector<double> increments)
    : config_(config),
      replica_(replica),
      box_(config.box()),
      cells_(config.cells()),
      increments_(std::move(increments)) {
    if (increments_.size() != box_.size() * static_cast<std::size_t>(cells_))
        throw std::invalid_argument("EnvField: increment array has the wrong size");
}

EnvField EnvField::zero(const EnvConfig& config) {
    const auto n = config.box().size() * static_cast<std::size_t>(config.cells());
    return EnvField(config, 0, std::vector<double>(n, 0.0));
}

nlohmann::json EnvField::to_json() const {
    nlohmann::json j;
    j["config"] = {{"hurst", config_.hurst.value()},  {"dimension", config_.dimension},
                   {"box_radius", config_.box_radius}, {"t_max", config_.t_max},
                   {"grid_step", config_.grid_step},   {"seed", config_.seed}};
    j["replica"] = replica_;
    j["digest"] = config_digest(config_);
    j["increments"] = increments_;
    return j;
}

EnvField EnvField::from_json(const nlohmann::json& j) {
    const auto& c = j.at("config");
    EnvConfig config{Hurst(c.at("hurst").get<double>()), c.at("dimension").get<int>(),
                     c.at("box_radius").get<int>(),      c.at("t_max").get<double>(),
                     c.at("grid_step").get<double>(),    c.at("seed").get<std::uint64_t>()};
    if (j.contains("digest") && j.at("digest").get<std::string>() != config_digest(config))
        throw std::invalid_argument("EnvField: digest does not match embedded config");
    return EnvField(config, j.at("replica").get<std::uint64_t>(),
                    j.at("increments").get<std::vector<double>>());
}

IncrementGram time_gram(const EnvConfig& config) {
    const auto cells = config.grid_cells();
    return increment_gram(cells, config.hurst);
}

std::uint32_t site_stream_id(std::span<const int> x) {
    const int d = static_cast<int>(x.size());
    const int bits = 32 / d;
    const std::uint64_t limit = 1ull << bits;
    std::uint64_t id = 0;
    for (int i = d - 1; i >= 0; --i) {
        const std::uint64_t zig = x[i] >= 0 ? 2ull * static_cast<std::uint64_t>(x[i])
                                            : 2ull * static_cast<std::uint64_t>(-static_cast<std::int64_t>(x[i])) - 1;
        if (zig >= limit) throw std::out_of_range("site coordinate too large for a substream id");
        id = (id << bits) | zig;
    }
    return static_cast<std::uint32_t>(id);
}

RngStream env_stream(std::uint64_t seed, std::uint64_t replica) {
    return RngStream{seed, 0x454E56ull, replica};  // "ENV"
}

EnvField sample_env(const EnvConfig& config, const RngStream& stream) {
    return sample_env(config, stream, psd_factor(time_gram(config)));
}

EnvField sample_env(const EnvConfig& config, const RngStream& stream, const PsdFactor& time_root) {
    config.validate();
    const SiteBox box = config.box();
    const int m = config.cells();
    if (time_root.root.rows() != m) throw std::invalid_argument("sample_env: factor size mismatch");
    const auto rank = time_root.root.cols();
    const auto sites = static_cast<Eigen::Index>(box.size());

    Eigen::MatrixXd z(sites, rank);
    for (Eigen::Index s = 0; s < sites; ++s) {
        Philox g = stream.substream(site_stream_id(box.coords(static_cast<std::size_t>(s))));
        for (Eigen::Index j = 0; j < rank; ++j) z(s, j) = g.normal();
    }
    // Row-major result so that each site's increments are contiguous.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x =
        z * time_root.root.transpose();
    return EnvField(config, stream.replica, std::vector<double>(x.data(), x.data() + x.size()));
}

}  // namespace polymer
