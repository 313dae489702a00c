#pragma once

// Small helpers shared by the test binaries: scratch directories, seeded
// generators for random instances, and file comparison.

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hstc/hawkes.hpp"
#include "hstc/panel.hpp"
#include "hstc/random.hpp"
#include "hstc/topology.hpp"

namespace hstc::test {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        auto base = std::filesystem::temp_directory_path();
        Rng rng(derive_seed(static_cast<std::uint64_t>(::getpid()), ++counter));
        path_ = base / ("hstc_" + tag + "_" + std::to_string(rng.next_u64() % 1000000000ULL));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::vector<std::string> numbered_ids(const std::string& prefix, std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
    return ids;
}

// Random single-membership topology with every substation nonempty.
inline NetworkTopology random_topology(Rng& rng, std::size_t n, std::size_t m) {
    std::vector<std::size_t> sub(n);
    for (std::size_t i = 0; i < n; ++i) sub[i] = i < m ? i : static_cast<std::size_t>(rng.below(m));
    for (std::size_t i = n; i > 1; --i) std::swap(sub[i - 1], sub[static_cast<std::size_t>(rng.below(i))]);
    std::vector<std::string> labels;
    for (std::size_t s : sub) labels.push_back("S" + std::to_string(s));
    return NetworkTopology::from_assignment(numbered_ids("C", n), labels);
}

inline CountMatrix random_counts(Rng& rng, std::size_t bins, std::size_t n, double mean) {
    CountMatrix y(static_cast<Eigen::Index>(bins), static_cast<Eigen::Index>(n));
    for (Eigen::Index t = 0; t < y.rows(); ++t)
        for (Eigen::Index i = 0; i < y.cols(); ++i) y(t, i) = rng.poisson(mean);
    return y;
}

// Stable random model; the excitation mass stays well inside the stationary
// region so simulated panels do not blow up.
inline HawkesModel random_model(Rng& rng, std::size_t n, double cap = std::numeric_limits<double>::infinity()) {
    Vector mu(static_cast<Eigen::Index>(n));
    Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu(i) = rng.uniform(0.2, 2.0);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.uniform(0.01, 0.4) / static_cast<double>(n);
    const double beta = rng.uniform(0.3, 2.0);
    SaturationParams sat;
    sat.cap = cap;
    auto model = make_model(mu, a, beta, sat);
    model.circuit_ids = numbered_ids("C", n);
    return model;
}

}  // namespace hstc::test
