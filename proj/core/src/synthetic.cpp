#include "hstc/synthetic.hpp"

#include <cmath>
#include <algorithm>

#include "hstc/error.hpp"
#include "hstc/random.hpp"

namespace hstc {
namespace {

std::string make_id(char prefix, std::size_t index, std::size_t count) {
    std::size_t width = 1;
    for (std::size_t c = count; c >= 10; c /= 10) ++width;
    width = std::max<std::size_t>(width, 3);
    std::string digits = std::to_string(index);
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

}  // namespace

SyntheticConfig SyntheticConfig::preset(std::string_view name) {
    SyntheticConfig cfg;
    if (name == "small") return cfg;
    if (name == "saturating") {
        cfg.cap = 150.0;
        return cfg;
    }
    throw PreconditionError("unknown synthetic preset '" + std::string(name) + "' (expected small or saturating)");
}

void SyntheticConfig::validate() const {
    if (substations == 0) throw PreconditionError("synthetic: need at least one substation");
    if (circuits < substations) {
        throw PreconditionError("synthetic: n (" + std::to_string(circuits) + ") must be >= m (" +
                                std::to_string(substations) + ")");
    }
    if (bins < 2) throw PreconditionError("synthetic: need at least 2 bins");
    if (!(mu_min >= 0.0 && mu_max >= mu_min)) throw PreconditionError("synthetic: need 0 <= mu_min <= mu_max");
    if (!(beta > 0.0)) throw PreconditionError("synthetic: beta must be positive");
    if (!(excitation_row_sum >= 0.0)) throw PreconditionError("synthetic: excitation row sum must be >= 0");
    if (!(cap > 0.0)) throw PreconditionError("synthetic: cap must be positive");
    if (!(floor >= 0.0 && floor < 1.0)) throw PreconditionError("synthetic: floor must lie in [0, 1)");
}

NetworkTopology random_topology(std::size_t circuits, std::size_t substations, std::uint64_t seed) {
    if (substations == 0 || circuits < substations) throw PreconditionError("random_topology: need n >= m >= 1");
    std::vector<std::size_t> assign(circuits);
    for (std::size_t i = 0; i < circuits; ++i) assign[i] = i % substations;
    Rng rng(seed);
    for (std::size_t i = circuits; i > 1; --i) std::swap(assign[i - 1], assign[rng.below(i)]);

    std::vector<std::string> circuit_ids(circuits);
    std::vector<std::string> sub_ids(substations);
    for (std::size_t i = 0; i < circuits; ++i) circuit_ids[i] = make_id('C', i, circuits);
    for (std::size_t j = 0; j < substations; ++j) sub_ids[j] = make_id('S', j, substations);
    IndexMatrix c = IndexMatrix::Zero(static_cast<Eigen::Index>(circuits), static_cast<Eigen::Index>(substations));
    for (std::size_t i = 0; i < circuits; ++i) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(assign[i])) = 1;
    return NetworkTopology(c, std::move(circuit_ids), std::move(sub_ids), EmptySubstationPolicy::reject);
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg, const HawkesModel& truth, std::uint64_t seed) {
    SyntheticConfig c = cfg;
    c.circuits = truth.n();
    c.validate();
    truth.validate();
    NetworkTopology topo = random_topology(c.circuits, c.substations, derive_seed(seed, "topology"));
    HawkesModel model = truth;
    model.circuit_ids = topo.circuit_ids();
    CountMatrix counts = simulate_panel(model, c.bins, derive_seed(seed, "panel"));
    CountPanel panel = make_panel(std::move(counts), topo.circuit_ids(), parse_timestamp(c.start), c.bin_length);
    return {std::move(panel), std::move(topo), std::move(model)};
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(derive_seed(seed, "truth"));
    const auto n = static_cast<Eigen::Index>(cfg.circuits);
    HawkesModel truth;
    truth.mu.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) truth.mu(i) = rng.uniform(cfg.mu_min, cfg.mu_max);
    truth.excitation.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double row = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            truth.excitation(i, k) = rng.uniform_open();
            row += truth.excitation(i, k);
        }
        truth.excitation.row(i) *= cfg.excitation_row_sum / (cfg.beta * row);
    }
    truth.beta = cfg.beta;
    truth.saturation = {cfg.cap, cfg.floor};
    return generate_synthetic(cfg, truth, seed);
}

}  // namespace hstc
