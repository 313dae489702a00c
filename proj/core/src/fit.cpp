#include "hstc/hawkes.hpp"

#include <cmath>

#include "hstc/error.hpp"
#include "hstc/random.hpp"

namespace hstc {
namespace {

constexpr double kMinInitialMu = 1e-3;
constexpr double kInitialExcitation = 1e-2;
constexpr double kInitialBeta = 1.0;
constexpr double kInitialJitter = 0.10;

// 1 where the unconstrained coordinate is free to move.
Vector free_coordinates(const HawkesModel& model, const NetworkTopology& topo, const FitConfig& cfg) {
    ParameterVector layout;
    layout.n = model.n();
    layout.covariates = static_cast<std::size_t>(model.covariate_weights.size());
    Vector mask = Vector::Ones(static_cast<Eigen::Index>(ParameterVector::size_for(layout.n, layout.covariates)));
    const auto n = static_cast<Eigen::Index>(layout.n);
    if (cfg.excitation == ExcitationStructure::same_substation) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (topo.substation_of(static_cast<std::size_t>(i)) != topo.substation_of(static_cast<std::size_t>(j))) {
                    mask(static_cast<Eigen::Index>(layout.excitation_offset()) + i * n + j) = 0.0;
                }
            }
        }
    }
    if (!cfg.learn_cap) mask(static_cast<Eigen::Index>(layout.cap_offset())) = 0.0;
    return mask;
}

}  // namespace

void FitConfig::validate() const {
    if (epochs == 0) throw PreconditionError("fit: epochs must be positive");
    if (!(learning_rate > 0.0)) throw PreconditionError("fit: learning rate must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw PreconditionError("fit: Adam moment decay rates must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw PreconditionError("fit: Adam epsilon must be positive");
    if (!(convergence_tol >= 0.0)) throw PreconditionError("fit: convergence tolerance must be >= 0");
    if (!(saturation_floor >= 0.0 && saturation_floor < 1.0)) {
        throw PreconditionError("fit: saturation floor must lie in [0, 1)");
    }
}

HawkesModel initial_model(const CountPanel& panel, const NetworkTopology& topo, const FitConfig& cfg) {
    cfg.validate();
    if (panel.bins() < 2) throw PreconditionError("fit: need at least 2 training bins");
    if (panel.circuits() != topo.n()) throw PreconditionError("fit: panel and topology circuit counts differ");
    if (cfg.use_covariates && panel.covariates.empty()) {
        throw PreconditionError("fit: covariates requested but the panel has none");
    }

    Rng rng(derive_seed(cfg.seed, "init"));
    auto jitter = [&rng] { return 1.0 + kInitialJitter * (2.0 * rng.uniform() - 1.0); };

    const auto n = static_cast<Eigen::Index>(topo.n());
    HawkesModel m;
    m.circuit_ids = topo.circuit_ids();
    m.mu.resize(n);
    const Vector means = panel.counts.cast<double>().colwise().mean().transpose();
    for (Eigen::Index i = 0; i < n; ++i) m.mu(i) = std::max(means(i), kMinInitialMu) * jitter();
    m.excitation.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const bool allowed = cfg.excitation == ExcitationStructure::dense ||
                                 topo.substation_of(static_cast<std::size_t>(i)) ==
                                     topo.substation_of(static_cast<std::size_t>(j));
            const double a = kInitialExcitation * jitter();
            m.excitation(i, j) = allowed ? a : 0.0;
        }
    }
    m.beta = kInitialBeta * jitter();
    m.saturation.floor = cfg.saturation_floor;
    if (cfg.learn_cap) {
        const double total = static_cast<double>(panel.total());
        m.saturation.cap = std::max(2.0 * total, 1.0) * jitter();
    }
    if (cfg.use_covariates) m.covariate_weights = Vector::Zero(static_cast<Eigen::Index>(panel.covariate_dim()));
    m.fit_info.seed = cfg.seed;
    return m;
}

HawkesModel fit(const CountPanel& panel, const NetworkTopology& topo, const FitConfig& cfg) {
    const HawkesModel init = initial_model(panel, topo, cfg);
    const double init_ll = log_likelihood(init, panel);
    if (!std::isfinite(init_ll)) throw NumericalError("fit: likelihood at the initial point is not finite");

    const Vector free = free_coordinates(init, topo, cfg);
    ParameterVector theta = to_unconstrained(init);
    ParameterVector best = theta;
    double best_ll = init_ll;
    double ll = init_ll;

    const auto dim = theta.values.size();
    Vector m1 = Vector::Zero(dim);
    Vector m2 = Vector::Zero(dim);
    double b1_pow = 1.0;
    double b2_pow = 1.0;

    std::size_t epoch = 0;
    bool converged = false;
    HawkesModel current = init;
    while (epoch < cfg.epochs) {
        ++epoch;
        const Vector grad = log_likelihood_gradient(current, panel).gradient.cwiseProduct(free);
        m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * grad;
        m2 = cfg.adam_beta2 * m2 + (1.0 - cfg.adam_beta2) * grad.cwiseAbs2();
        b1_pow *= cfg.adam_beta1;
        b2_pow *= cfg.adam_beta2;
        Vector step(dim);
        for (Eigen::Index k = 0; k < dim; ++k) {
            const double mhat = m1(k) / (1.0 - b1_pow);
            const double vhat = m2(k) / (1.0 - b2_pow);
            step(k) = free(k) != 0.0 ? cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon) : 0.0;
        }

        // Ascent step; halve it while it lands on an impossible configuration.
        ParameterVector candidate = theta;
        double candidate_ll = -std::numeric_limits<double>::infinity();
        double scale = 1.0;
        for (std::size_t attempt = 0; attempt <= cfg.max_backtracks; ++attempt, scale *= 0.5) {
            for (Eigen::Index k = 0; k < dim; ++k) {
                candidate.values(k) = free(k) != 0.0 ? theta.values(k) + scale * step(k) : theta.values(k);
            }
            candidate_ll = log_likelihood(from_unconstrained(candidate, init), panel);
            if (std::isfinite(candidate_ll)) break;
        }
        if (!std::isfinite(candidate_ll)) {
            throw NumericalError("fit: every backtracked step at epoch " + std::to_string(epoch) +
                                 " gave a non-finite likelihood (last finite value " + std::to_string(ll) + ")");
        }

        const double previous = ll;
        theta = candidate;
        ll = candidate_ll;
        current = from_unconstrained(theta, init);
        if (ll > best_ll) {
            best_ll = ll;
            best = theta;
        }
        if (std::abs(ll - previous) / std::max(1.0, std::abs(ll)) < cfg.convergence_tol) {
            converged = true;
            break;
        }
    }

    HawkesModel out = from_unconstrained(best, init);
    out.fit_info.epochs_run = epoch;
    out.fit_info.initial_log_likelihood = init_ll;
    out.fit_info.final_log_likelihood = best_ll;
    out.fit_info.seed = cfg.seed;
    out.fit_info.converged = converged;
    out.validate();
    return out;
}

}  // namespace hstc
