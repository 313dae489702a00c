#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "hstc/hawkes.hpp"
#include "hstc/panel.hpp"
#include "hstc/topology.hpp"

namespace hstc {

struct SyntheticConfig {
    std::size_t circuits = 20;
    std::size_t substations = 5;
    std::size_t bins = 200;
    double mu_min = 0.2;
    double mu_max = 1.0;
    double beta = 1.0;
    /// Every row of A sums to excitation_row_sum / beta.
    double excitation_row_sum = 0.5;
    double cap = std::numeric_limits<double>::infinity();
    double floor = 0.0;
    BinLength bin_length{};
    std::string start = "2010-01-01";

    /// "small" (n=20, m=5, T=200, no saturation) or "saturating" (same
    /// network, cap 150).
    static SyntheticConfig preset(std::string_view name);
    void validate() const;
};

struct SyntheticData {
    CountPanel panel;
    NetworkTopology topology;
    HawkesModel truth;
};

/// Random partition topology (round-robin then shuffled, so no substation is
/// empty), a ground-truth model drawn from the config, and a panel simulated
/// forward from it. Deterministic in `seed`.
[[nodiscard]] SyntheticData generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

/// Same, with a caller-supplied ground truth; cfg.circuits is taken from it.
[[nodiscard]] SyntheticData generate_synthetic(const SyntheticConfig& cfg, const HawkesModel& truth,
                                               std::uint64_t seed);

[[nodiscard]] NetworkTopology random_topology(std::size_t circuits, std::size_t substations, std::uint64_t seed);

}  // namespace hstc
