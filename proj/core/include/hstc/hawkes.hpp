#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hstc/panel.hpp"
#include "hstc/topology.hpp"
#include "hstc/types.hpp"

namespace hstc {

/// Linear saturation gamma_t = max(floor, 1 - N_{<t} / cap), where N_{<t} is
/// the network-wide count before bin t. cap = +inf disables saturation.
struct SaturationParams {
    double cap = std::numeric_limits<double>::infinity();
    double floor = 0.0;

    [[nodiscard]] double gamma(double cumulative) const noexcept;
    friend bool operator==(const SaturationParams&, const SaturationParams&) = default;
};

struct FitInfo {
    std::size_t epochs_run = 0;
    double initial_log_likelihood = 0.0;
    double final_log_likelihood = 0.0;
    std::uint64_t seed = 0;
    bool converged = false;

    friend bool operator==(const FitInfo&, const FitInfo&) = default;
};

/// Discrete-time multivariate Hawkes count model. Given history, counts in
/// bin t are independent Poisson with mean
///
///   lambda_it = gamma_t * ( mu_it + sum_{t'<t} sum_i' A(i,i') y_i't' beta e^{-beta (t-t')} )
///
/// with mu_it = mu_i * exp(w . z_{i,t-1}) when covariate weights w are set
/// (bin 0 uses z_{i,0}).
struct HawkesModel {
    Vector mu;
    Matrix excitation;  // A, n x n, row i receives from column i'
    double beta = 1.0;
    SaturationParams saturation;
    Vector covariate_weights;  // empty: covariates not used
    std::vector<std::string> circuit_ids;
    FitInfo fit_info;

    [[nodiscard]] std::size_t n() const noexcept { return static_cast<std::size_t>(mu.size()); }
    [[nodiscard]] bool uses_covariates() const noexcept { return covariate_weights.size() > 0; }

    /// Largest per-circuit expected offspring count, max_i sum_i' A(i,i')
    /// times the discrete kernel mass sum_{l>=1} beta e^{-beta l}.
    [[nodiscard]] double branching_ratio() const;

    /// Rejects invalid parameters; warns when branching_ratio() > 1.
    void validate() const;

    friend bool operator==(const HawkesModel&, const HawkesModel&);
};

[[nodiscard]] HawkesModel make_model(Vector mu, Matrix excitation, double beta, SaturationParams saturation = {});

/// History summary at the start of a bin. Holds the decayed counts
/// h_i = sum_{t'<t} y_it' e^{-beta (t-t')} and the cumulative network total;
/// advancing by one bin is O(n).
class HawkesState {
public:
    explicit HawkesState(const HawkesModel& model);
    /// Consumes every row of `history` (bins 0..t-1).
    HawkesState(const HawkesModel& model, const CountMatrix& history);

    void advance(const CountVector& counts);
    template <class Row>
    void advance_row(const Row& row) {
        CountVector v = row.transpose();
        advance(v);
    }

    /// lambda for the current bin. `covariates_prev` is z_{t-1} (n x p) and is
    /// required iff the model uses covariates.
    [[nodiscard]] Vector intensity(const Matrix* covariates_prev = nullptr) const;

    [[nodiscard]] std::size_t bin() const noexcept { return bin_; }
    [[nodiscard]] double cumulative() const noexcept { return cumulative_; }
    [[nodiscard]] const Vector& decayed() const noexcept { return decayed_; }

private:
    const HawkesModel* model_;
    double decay_;
    Vector decayed_;
    double cumulative_ = 0.0;
    std::size_t bin_ = 0;
};

/// lambda_t for t = history.rows().
[[nodiscard]] Vector intensity(const HawkesModel& model, const CountMatrix& history,
                               const Matrix* covariates_prev = nullptr);

/// Covariates feeding bin t of the panel (z_{t-1}; bin 0 uses z_0), or
/// nullptr when the panel has none.
[[nodiscard]] const Matrix* lagged_covariates(const CountPanel& panel, std::size_t t);

/// Poisson log-likelihood sum_{t in bins} sum_i [y log lambda - lambda], with
/// history taken from panel bins before t. The log(y!) term is omitted.
/// Returns -inf when some lambda_it = 0 while y_it > 0.
[[nodiscard]] double log_likelihood(const HawkesModel& model, const CountPanel& panel, BinRange bins);
[[nodiscard]] double log_likelihood(const HawkesModel& model, const CountPanel& panel);

/// Unconstrained coordinates used for fitting:
///   log mu, log A (row-major), softplus^{-1}(beta), log cap, w.
/// Zero entries of A map to -inf and stay there.
struct ParameterVector {
    Vector values;
    std::size_t n = 0;
    std::size_t covariates = 0;

    [[nodiscard]] static std::size_t size_for(std::size_t n, std::size_t p) { return n + n * n + 2 + p; }
    [[nodiscard]] std::size_t mu_offset() const { return 0; }
    [[nodiscard]] std::size_t excitation_offset() const { return n; }
    [[nodiscard]] std::size_t beta_offset() const { return n + n * n; }
    [[nodiscard]] std::size_t cap_offset() const { return n + n * n + 1; }
    [[nodiscard]] std::size_t covariate_offset() const { return n + n * n + 2; }
};

[[nodiscard]] ParameterVector to_unconstrained(const HawkesModel& model);
/// Maps back onto the constrained model; metadata is copied from `like`.
[[nodiscard]] HawkesModel from_unconstrained(const ParameterVector& params, const HawkesModel& like);

[[nodiscard]] double softplus(double x) noexcept;
[[nodiscard]] double softplus_inverse(double y) noexcept;

struct LikelihoodGradient {
    double value = 0.0;
    /// d value / d unconstrained parameters, laid out as ParameterVector.
    Vector gradient;
};

/// Exact analytic gradient in unconstrained coordinates. Throws
/// NumericalError when the likelihood is not finite.
[[nodiscard]] LikelihoodGradient log_likelihood_gradient(const HawkesModel& model, const CountPanel& panel,
                                                         BinRange bins);
[[nodiscard]] LikelihoodGradient log_likelihood_gradient(const HawkesModel& model, const CountPanel& panel);

enum class ExcitationStructure { dense, same_substation };

struct FitConfig {
    std::size_t epochs = 1000;
    double learning_rate = 1e-2;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
    /// Stop early when |dLL| / max(1, |LL|) falls below this between epochs.
    double convergence_tol = 1e-8;
    bool learn_cap = true;
    double saturation_floor = 0.0;
    ExcitationStructure excitation = ExcitationStructure::dense;
    bool use_covariates = false;
    /// Step-halving retries when an Adam step lands on a non-finite likelihood.
    std::size_t max_backtracks = 30;

    void validate() const;
};

/// Maximum-likelihood fit with Adam ascent in unconstrained coordinates over
/// every bin of `panel`. The returned parameters are the best visited, so the
/// likelihood never falls below the initialization.
[[nodiscard]] HawkesModel fit(const CountPanel& panel, const NetworkTopology& topo, const FitConfig& cfg);

/// The seeded starting point used by fit().
[[nodiscard]] HawkesModel initial_model(const CountPanel& panel, const NetworkTopology& topo, const FitConfig& cfg);

/// K joint count vectors for one bin.
struct ScenarioSet {
    CountMatrix samples;  // K x n
    std::size_t bin = 0;

    [[nodiscard]] std::size_t k() const noexcept { return static_cast<std::size_t>(samples.rows()); }
    [[nodiscard]] std::size_t n() const noexcept { return static_cast<std::size_t>(samples.cols()); }

    friend bool operator==(const ScenarioSet&, const ScenarioSet&);
};

/// Exact draws for bin t = state.bin(). The intensity is constant over the
/// bin because feedback only enters from earlier bins, so thinning reduces to
/// an independent Poisson(lambda_it) draw per circuit. Sample k uses the
/// generator seeded by derive_seed(seed, k), drawing circuits in index order.
[[nodiscard]] ScenarioSet simulate_bin(const HawkesModel& model, const HawkesState& state, std::size_t k,
                                       std::uint64_t seed, const Matrix* covariates_prev = nullptr);
[[nodiscard]] ScenarioSet simulate_bin(const HawkesModel& model, const CountMatrix& history, std::size_t k,
                                       std::uint64_t seed, const Matrix* covariates_prev = nullptr);

/// K independent H x n trajectories, each feeding its own simulated bins
/// back into its history. Trajectory k uses the same generator as sample k of
/// simulate_bin, so H = 1 reproduces simulate_bin exactly. Covariates beyond
/// the supplied history are held at `covariates_last`.
[[nodiscard]] std::vector<CountMatrix> simulate_trajectory(const HawkesModel& model, const CountMatrix& history,
                                                           std::size_t horizon, std::size_t k, std::uint64_t seed,
                                                           const Matrix* covariates_last = nullptr,
                                                           std::size_t threads = 1);

/// Forward simulation of a whole panel from an empty history.
[[nodiscard]] CountMatrix simulate_panel(const HawkesModel& model, std::size_t bins, std::uint64_t seed,
                                         const std::vector<Matrix>* covariates = nullptr);

}  // namespace hstc
