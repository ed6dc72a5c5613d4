#pragma once

#include "polymer/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polymer {

class Hurst {
public:
    explicit Hurst(double h);
    double value() const { return h_; }
    // H > 1/2: positively correlated increments.
    bool above_half() const { return h_ > 0.5; }

private:
    double h_;
};

struct Interval {
    double start = 0.0;
    double end = 0.0;
    double length() const { return end - start; }
};

using IncrementGram = Eigen::MatrixXd;

class FactorizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// fBm covariance 1/2 (t^2H + s^2H - |t-s|^2H).
double r_h(double t, double s, Hurst hurst);

// Cov(B_b - B_a, B_d - B_c).
double increment_cov(double a, double b, double c, double d, Hurst hurst);
double increment_cov(Interval x, Interval y, Hurst hurst);

IncrementGram increment_gram(std::span<const Interval> intervals, Hurst hurst);

// Square root F (n x r) with F F^T = A, from a pivoted LDLT. Columns whose
// pivot is numerically zero are dropped, so r is the numerical rank.
// column_ids[j] is the pivot position of the j-th kept column.
struct PsdFactor {
    Eigen::MatrixXd root;
    std::vector<int> column_ids;
};

// Throws FactorizationError when a pivot is below -1e-9 * max|diag| even
// after one 1e-12 diagonal jitter.
PsdFactor psd_factor(const Eigen::MatrixXd& a);

// Sites of the box {x in Z^d : |x|_inf <= radius}, linearly indexed with the
// first coordinate varying fastest.
class SiteBox {
public:
    SiteBox(int dimension, int radius);

    int dimension() const { return d_; }
    int radius() const { return radius_; }
    int side() const { return 2 * radius_ + 1; }
    std::size_t size() const { return size_; }

    bool contains(std::span<const int> x) const;
    std::size_t index(std::span<const int> x) const;
    std::vector<int> coords(std::size_t index) const;
    std::size_t origin() const;

private:
    int d_;
    int radius_;
    std::size_t size_;
};

struct EnvConfig {
    Hurst hurst{0.5};
    int dimension = 1;
    int box_radius = 0;
    double t_max = 1.0;
    double grid_step = 0.1;
    std::uint64_t seed = 0;

    // Number of grid cells m = t_max / grid_step; throws if not an integer.
    int cells() const;
    SiteBox box() const { return SiteBox(dimension, box_radius); }
    void validate() const;
    std::vector<Interval> grid_cells() const;
};

// Hex digest of the configuration without its seed.
std::string config_digest(const EnvConfig& config);

class EnvField {
public:
    EnvField(EnvConfig config, std::uint64_t replica, std::vector<double> increments);

    static EnvField zero(const EnvConfig& config);

    const EnvConfig& config() const { return config_; }
    std::uint64_t replica() const { return replica_; }
    int cells() const { return cells_; }
    const SiteBox& box() const { return box_; }

    double increment(std::size_t site, int cell) const {
        return increments_[site * static_cast<std::size_t>(cells_) + cell];
    }
    std::span<const double> site_increments(std::size_t site) const {
        return {increments_.data() + site * static_cast<std::size_t>(cells_),
                static_cast<std::size_t>(cells_)};
    }
    const std::vector<double>& increments() const { return increments_; }

    nlohmann::json to_json() const;
    static EnvField from_json(const nlohmann::json& j);

private:
    EnvConfig config_;
    std::uint64_t replica_;
    SiteBox box_;
    int cells_;
    std::vector<double> increments_;
};

IncrementGram time_gram(const EnvConfig& config);

// Injective label of a lattice site (zigzag code per coordinate, packed into
// 32/d bits each). Independent of the box, so enlarging the box keeps the
// increments of the sites it already contained.
std::uint32_t site_stream_id(std::span<const int> x);

// Draws one environment: per site, m grid increments with Gram time_gram(config).
// Site x reads standard normals from stream.substream(site_stream_id(x)).
EnvField sample_env(const EnvConfig& config, const RngStream& stream);

// Same as above with the time factor precomputed (reused across replicas).
EnvField sample_env(const EnvConfig& config, const RngStream& stream, const PsdFactor& time_root);

// Stream used when a field is regenerated from (config, seed) alone.
RngStream env_stream(std::uint64_t seed, std::uint64_t replica = 0);

}  // namespace polymer
