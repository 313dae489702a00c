#include "hstc/hawkes.hpp"

#include "hstc/error.hpp"
#include "hstc/parallel.hpp"
#include "hstc/random.hpp"

namespace hstc {
namespace {

void draw_bin(Rng& rng, const Vector& lambda, CountVector& out) {
    out.resize(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) out(i) = rng.poisson(lambda(i));
}

}  // namespace

bool operator==(const ScenarioSet& a, const ScenarioSet& b) {
    return a.bin == b.bin && a.samples.rows() == b.samples.rows() && a.samples.cols() == b.samples.cols() &&
           a.samples == b.samples;
}

ScenarioSet simulate_bin(const HawkesModel& model, const HawkesState& state, std::size_t k, std::uint64_t seed,
                         const Matrix* covariates_prev) {
    if (k == 0) throw PreconditionError("simulate_bin: K must be >= 1");
    const Vector lambda = state.intensity(covariates_prev);
    ScenarioSet out;
    out.bin = state.bin();
    out.samples.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(model.n()));
    CountVector draw;
    for (std::size_t s = 0; s < k; ++s) {
        Rng rng(derive_seed(seed, s));
        draw_bin(rng, lambda, draw);
        out.samples.row(static_cast<Eigen::Index>(s)) = draw.transpose();
    }
    return out;
}

ScenarioSet simulate_bin(const HawkesModel& model, const CountMatrix& history, std::size_t k, std::uint64_t seed,
                         const Matrix* covariates_prev) {
    return simulate_bin(model, HawkesState(model, history), k, seed, covariates_prev);
}

std::vector<CountMatrix> simulate_trajectory(const HawkesModel& model, const CountMatrix& history,
                                             std::size_t horizon, std::size_t k, std::uint64_t seed,
                                             const Matrix* covariates_last, std::size_t threads) {
    if (horizon == 0) throw PreconditionError("simulate_trajectory: horizon must be >= 1");
    if (k == 0) throw PreconditionError("simulate_trajectory: K must be >= 1");
    const HawkesState start(model, history);
    std::vector<CountMatrix> out(k);
    parallel_for(k, threads, [&](std::size_t s) {
        HawkesState state = start;
        Rng rng(derive_seed(seed, s));
        CountMatrix traj(static_cast<Eigen::Index>(horizon), static_cast<Eigen::Index>(model.n()));
        CountVector draw;
        for (std::size_t h = 0; h < horizon; ++h) {
            draw_bin(rng, state.intensity(covariates_last), draw);
            traj.row(static_cast<Eigen::Index>(h)) = draw.transpose();
            state.advance(draw);
        }
        out[s] = std::move(traj);
    });
    return out;
}

CountMatrix simulate_panel(const HawkesModel& model, std::size_t bins, std::uint64_t seed,
                           const std::vector<Matrix>* covariates) {
    if (model.uses_covariates() && (covariates == nullptr || covariates->size() < bins)) {
        throw PreconditionError("simulate_panel: model uses covariates; one matrix per bin is required");
    }
    HawkesState state(model);
    Rng rng(seed);
    CountMatrix out(static_cast<Eigen::Index>(bins), static_cast<Eigen::Index>(model.n()));
    CountVector draw;
    for (std::size_t t = 0; t < bins; ++t) {
        const Matrix* z = nullptr;
        if (model.uses_covariates()) z = &(*covariates)[t == 0 ? 0 : t - 1];
        draw_bin(rng, state.intensity(z), draw);
        out.row(static_cast<Eigen::Index>(t)) = draw.transpose();
        state.advance(draw);
    }
    return out;
}

}  // namespace hstc
