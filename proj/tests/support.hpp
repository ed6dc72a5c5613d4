#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testing {

// Largest |mean(x_i x_j) - expected(i,j)| / SE over all entries, for
// zero-mean samples stored one per row.
inline double max_moment_z(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& expected) {
    const auto n = samples.rows();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < samples.cols(); ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const Eigen::ArrayXd prod = samples.col(i).array() * samples.col(j).array();
            const double mean = prod.mean();
            const double var = (prod - mean).square().sum() / double(n - 1);
            const double se = std::sqrt(var / double(n));
            worst = std::max(worst, std::abs(mean - expected(i, j)) / se);
        }
    }
    return worst;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("pam_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
