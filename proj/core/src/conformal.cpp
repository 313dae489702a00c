#include "hstc/conformal.hpp"

#include <algorithm>
#include <cmath>

#include "hstc/error.hpp"
#include "hstc/parallel.hpp"
#include "hstc/quantile_regression.hpp"
#include "hstc/random.hpp"

namespace hstc {

void ScoreSet::append(std::size_t bin, const Vector& step_scores) {
    if (scores.empty()) scores.resize(static_cast<std::size_t>(step_scores.size()));
    if (static_cast<std::size_t>(step_scores.size()) != scores.size()) {
        throw PreconditionError("ScoreSet::append: circuit count mismatch");
    }
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i].push_back(step_scores(static_cast<Eigen::Index>(i)));
    bins.push_back(bin);
}

std::string_view to_string(QuantileMethod method) noexcept {
    return method == QuantileMethod::empirical ? "empirical" : "qr";
}

QuantileMethod parse_quantile_method(std::string_view text) {
    if (text == "empirical") return QuantileMethod::empirical;
    if (text == "qr" || text == "quantile_regression") return QuantileMethod::quantile_regression;
    throw PreconditionError("unknown quantile method '" + std::string(text) + "' (expected empirical or qr)");
}

bool operator==(const IntervalForecast& a, const IntervalForecast& b) {
    auto same = [](const Vector& x, const Vector& y) { return x.size() == y.size() && x == y; };
    return a.alpha == b.alpha && a.bin == b.bin && same(a.lower, b.lower) && same(a.upper, b.upper) &&
           same(a.sub_lower, b.sub_lower) && same(a.sub_upper, b.sub_upper);
}

Vector standardization_scale(const CountPanel& panel, BinRange train) {
    if (train.empty() || train.end > panel.bins()) throw PreconditionError("standardization_scale: bad training range");
    const auto n = static_cast<Eigen::Index>(panel.circuits());
    Vector s(n);
    const double count = static_cast<double>(train.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t t = train.begin; t < train.end; ++t) {
            sum += static_cast<double>(panel.counts(static_cast<Eigen::Index>(t), i));
        }
        const double mean = sum / count;
        double ss = 0.0;
        for (std::size_t t = train.begin; t < train.end; ++t) {
            const double d = static_cast<double>(panel.counts(static_cast<Eigen::Index>(t), i)) - mean;
            ss += d * d;
        }
        s(i) = std::max(1.0, std::sqrt(ss / count));
    }
    return s;
}

double nonconformity_score(const CountVector& truth, const ScenarioSet& scenarios,
                           std::span<const std::size_t> group, const Vector& scale) {
    if (scenarios.k() == 0) throw PreconditionError("nonconformity_score: no scenarios");
    if (group.empty()) throw PreconditionError("nonconformity_score: empty group");
    if (truth.size() != scenarios.samples.cols() || scale.size() != truth.size()) {
        throw PreconditionError("nonconformity_score: dimension mismatch");
    }
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < scenarios.samples.rows(); ++k) {
        double sme = 0.0;
        for (const auto i : group) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double err =
                std::abs(static_cast<double>(truth(ii) - scenarios.samples(k, ii))) / scale(ii);
            sme = std::max(sme, err);
        }
        if (sme < best) best = sme;
    }
    return best;
}

Vector nonconformity_scores(const CountVector& truth, const ScenarioSet& scenarios, const NetworkTopology& topo,
                            const Vector& scale) {
    if (static_cast<std::size_t>(truth.size()) != topo.n()) {
        throw PreconditionError("nonconformity_scores: truth length does not match topology");
    }
    // Circuits of one substation share a group, so score once per substation.
    Vector by_substation(static_cast<Eigen::Index>(topo.m()));
    for (std::size_t j = 0; j < topo.m(); ++j) {
        by_substation(static_cast<Eigen::Index>(j)) = nonconformity_score(truth, scenarios, topo.members(j), scale);
    }
    Vector out(static_cast<Eigen::Index>(topo.n()));
    for (std::size_t i = 0; i < topo.n(); ++i) {
        out(static_cast<Eigen::Index>(i)) = by_substation(static_cast<Eigen::Index>(topo.substation_of(i)));
    }
    return out;
}

std::uint64_t scenario_seed(std::uint64_t run_seed, std::size_t bin) noexcept {
    return derive_seed(derive_seed(run_seed, "simulate"), static_cast<std::uint64_t>(bin));
}

ScoreSet calibrate(const CountPanel& panel, const HawkesModel& model, const NetworkTopology& topo, BinRange train,
                   BinRange cal, std::size_t k, std::uint64_t seed, double alpha, std::size_t threads) {
    if (cal.empty()) throw PreconditionError("calibrate: calibration range is empty");
    if (cal.end > panel.bins()) throw PreconditionError("calibrate: calibration range outside the panel");
    if (cal.begin < train.end) {
        throw PreconditionError("calibrate: calibration bins overlap the training bins (split integrity)");
    }
    if (k == 0) throw PreconditionError("calibrate: K must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("calibrate: alpha must lie in (0, 1)");
    if (model.n() != topo.n() || panel.circuits() != topo.n()) {
        throw PreconditionError("calibrate: model, panel and topology circuit counts differ");
    }

    ScoreSet out;
    out.alpha = alpha;
    out.scale = standardization_scale(panel, train);

    // Teacher forcing: the state for bin t consumes the observed bins < t.
    std::vector<HawkesState> states;
    states.reserve(cal.size());
    HawkesState state(model);
    for (std::size_t t = 0; t < cal.end; ++t) {
        if (t >= cal.begin) states.push_back(state);
        state.advance_row(panel.counts.row(static_cast<Eigen::Index>(t)));
    }

    std::vector<Vector> step_scores(cal.size());
    parallel_for(cal.size(), threads, [&](std::size_t s) {
        const std::size_t t = cal.begin + s;
        const auto scenarios = simulate_bin(model, states[s], k, scenario_seed(seed, t), lagged_covariates(panel, t));
        const CountVector truth = panel.counts.row(static_cast<Eigen::Index>(t)).transpose();
        step_scores[s] = nonconformity_scores(truth, scenarios, topo, out.scale);
    });
    for (std::size_t s = 0; s < cal.size(); ++s) out.append(cal.begin + s, step_scores[s]);
    return out;
}

std::size_t conformal_rank(std::size_t n, double alpha) {
    if (n == 0) throw PreconditionError("conformal_rank: empty score set");
    const double x = (1.0 - alpha) * static_cast<double>(n + 1);
    // Absorb representation error such as 0.95 * 20 = 19.000000000000004.
    const double adjusted = std::ceil(x - 1e-9);
    const auto r = static_cast<std::size_t>(std::max(1.0, adjusted));
    return std::min(r, n);
}

double empirical_quantile(std::span<const double> scores, double alpha) {
    if (scores.empty()) throw PreconditionError("empirical_quantile: empty score set");
    std::vector<double> sorted(scores.begin(), scores.end());
    const std::size_t r = conformal_rank(sorted.size(), alpha);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(r - 1), sorted.end());
    return sorted[r - 1];
}

QuantileEstimate empirical_quantile(const ScoreSet& scores) {
    if (scores.circuits() == 0) throw PreconditionError("empirical_quantile: empty score set");
    QuantileEstimate q;
    q.method = QuantileMethod::empirical;
    q.q.resize(static_cast<Eigen::Index>(scores.circuits()));
    for (std::size_t i = 0; i < scores.circuits(); ++i) {
        q.q(static_cast<Eigen::Index>(i)) = empirical_quantile(scores.scores[i], scores.alpha);
    }
    return q;
}

double qr_quantile(std::span<const double> scores, std::size_t window, double alpha) {
    if (window == 0) throw PreconditionError("qr_quantile: window must be positive");
    if (scores.size() < window + 1) {
        throw PreconditionError("qr_quantile: need at least window + 1 = " + std::to_string(window + 1) +
                                " scores, have " + std::to_string(scores.size()) +
                                "; use empirical_quantile for short calibration windows");
    }
    const auto samples = static_cast<Eigen::Index>(scores.size() - window);
    const auto w = static_cast<Eigen::Index>(window);
    Matrix lags(samples, w);
    Vector target(samples);
    for (Eigen::Index r = 0; r < samples; ++r) {
        for (Eigen::Index c = 0; c < w; ++c) lags(r, c) = scores[static_cast<std::size_t>(r + c)];
        target(r) = scores[static_cast<std::size_t>(r + w)];
    }
    Vector latest(w);
    for (Eigen::Index c = 0; c < w; ++c) latest(c) = scores[scores.size() - window + static_cast<std::size_t>(c)];

    // Standardize lag features; constant columns carry no information and
    // are dropped so the intercept absorbs them.
    std::vector<Eigen::Index> kept;
    Vector mean(w), sd(w);
    for (Eigen::Index c = 0; c < w; ++c) {
        mean(c) = lags.col(c).mean();
        sd(c) = std::sqrt((lags.col(c).array() - mean(c)).square().mean());
        if (sd(c) > 1e-12 * std::max(1.0, std::abs(mean(c)))) kept.push_back(c);
    }
    const auto p = static_cast<Eigen::Index>(kept.size()) + 1;
    Matrix x(samples, p);
    x.col(0).setOnes();
    Vector x_new(p);
    x_new(0) = 1.0;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kept.size()); ++k) {
        const auto c = kept[static_cast<std::size_t>(k)];
        x.col(k + 1) = (lags.col(c).array() - mean(c)) / sd(c);
        x_new(k + 1) = (latest(c) - mean(c)) / sd(c);
    }
    const auto fit = fit_quantile_regression(x, target, 1.0 - alpha);
    return std::max(0.0, x_new.dot(fit.coefficients));
}

QuantileEstimate qr_quantile(const ScoreSet& scores, std::size_t window) {
    QuantileEstimate q;
    q.method = QuantileMethod::quantile_regression;
    q.q.resize(static_cast<Eigen::Index>(scores.circuits()));
    for (std::size_t i = 0; i < scores.circuits(); ++i) {
        q.q(static_cast<Eigen::Index>(i)) = qr_quantile(scores.scores[i], window, scores.alpha);
    }
    return q;
}

QuantileEstimate estimate_quantiles(const ScoreSet& scores, QuantileMethod method, std::size_t window) {
    return method == QuantileMethod::empirical ? empirical_quantile(scores) : qr_quantile(scores, window);
}

IntervalForecast build_interval(const ScenarioSet& scenarios, const QuantileEstimate& q, const Vector& scale,
                                const NetworkTopology& topo, double alpha) {
    const auto n = static_cast<Eigen::Index>(topo.n());
    if (scenarios.k() == 0) throw PreconditionError("build_interval: no scenarios");
    if (scenarios.samples.cols() != n || q.q.size() != n || scale.size() != n) {
        throw PreconditionError("build_interval: dimension mismatch");
    }
    IntervalForecast f;
    f.alpha = alpha;
    f.bin = scenarios.bin;
    const auto samples = scenarios.samples.cast<double>();
    const Vector widen = q.q.cwiseProduct(scale);
    f.lower = samples.colwise().minCoeff().transpose() - widen;
    f.upper = samples.colwise().maxCoeff().transpose() + widen;
    f.sub_lower = topo.aggregate(f.lower);
    f.sub_upper = topo.aggregate(f.upper);
    return f;
}

}  // namespace hstc
