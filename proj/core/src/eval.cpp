#include "hstc/eval.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "hstc/error.hpp"
#include "hstc/random.hpp"

namespace hstc {

HstConformalPredictor::HstConformalPredictor(const NetworkTopology& topo, const PanelSplit& split,
                                             PipelineConfig cfg, bool refit_each_step)
    : topo_(&topo), split_(split), cfg_(std::move(cfg)), refit_each_step_(refit_each_step) {
    cfg_.validate();
}

void HstConformalPredictor::prepare(const CountPanel& panel, std::size_t t) {
    if (fitted_ && !refit_each_step_) return;
    BinRange train = split_.train;
    BinRange cal = split_.cal;
    if (refit_each_step_) {
        // Slide both windows so the calibration window ends just before t.
        const std::size_t shift = t - split_.cal.end;
        train.end += shift;
        cal = {cal.begin + shift, cal.end + shift};
    }
    FitConfig fit_cfg = cfg_.fit;
    fit_cfg.seed = derive_seed(cfg_.seed, "fit");
    model_ = fit(slice_bins(panel, train), *topo_, fit_cfg);
    scores_ = calibrate(panel, model_, *topo_, train, cal, cfg_.k, cfg_.seed, cfg_.alpha, cfg_.threads);
    fitted_ = true;
}

IntervalForecast HstConformalPredictor::predict(const CountPanel& panel, std::size_t t) {
    if (t < split_.cal.end || t > panel.bins()) throw PreconditionError("predict: bin must follow the calibration window");
    prepare(panel, t);
    last_quantiles_ = estimate_quantiles(scores_, cfg_.method, cfg_.qr_window);
    const HawkesState state(model_, panel.counts.topRows(static_cast<Eigen::Index>(t)));
    last_scenarios_ = simulate_bin(model_, state, cfg_.k, scenario_seed(cfg_.seed, t), lagged_covariates(panel, t));
    return build_interval(last_scenarios_, last_quantiles_, scores_.scale, *topo_, cfg_.alpha);
}

void HstConformalPredictor::observe(const CountPanel& panel, std::size_t t) {
    if (refit_each_step_) return;  // the next prepare() rebuilds the scores
    if (!fitted_ || last_scenarios_.bin != t) predict(panel, t);
    const CountVector truth = panel.counts.row(static_cast<Eigen::Index>(t)).transpose();
    scores_.append(t, nonconformity_scores(truth, last_scenarios_, *topo_, scores_.scale));
}

EvalReport evaluate_predictor(const CountPanel& panel, const NetworkTopology& topo, const PanelSplit& split,
                              IntervalPredictor& predictor) {
    if (split.test.empty()) throw PreconditionError("evaluate: the test window is empty");
    if (split.test.end > panel.bins()) throw PreconditionError("evaluate: test window outside the panel");
    const Vector scale = standardization_scale(panel, split.train);
    const auto n = static_cast<Eigen::Index>(topo.n());
    const auto m = static_cast<Eigen::Index>(topo.m());
    const Vector sub_scale = topo.aggregate(scale);

    EvalReport report;
    report.circuit_ids = topo.circuit_ids();
    report.substation_ids = topo.substation_ids();
    double covered = 0.0, agg_covered = 0.0, size = 0.0, raw_size = 0.0;
    for (std::size_t t = split.test.begin; t < split.test.end; ++t) {
        IntervalForecast f = predictor.predict(panel, t);
        if (f.lower.size() != n || f.sub_lower.size() != m) throw PreconditionError("evaluate: predictor shape mismatch");
        const CountVector y = panel.counts.row(static_cast<Eigen::Index>(t)).transpose();
        const CountVector y_sub = topo.aggregate(y);

        BinMetrics row;
        row.bin = t;
        for (Eigen::Index i = 0; i < n; ++i) {
            CellRecord c;
            c.bin = t;
            c.unit = static_cast<std::size_t>(i);
            c.truth = static_cast<double>(y(i));
            c.lower = f.lower(i);
            c.upper = f.upper(i);
            c.scale = scale(i);
            c.covered = c.lower <= c.truth && c.truth <= c.upper;
            row.val += c.covered ? 1.0 : 0.0;
            row.size += c.width() / c.scale;
            raw_size += c.width();
            report.circuit_cells.push_back(c);
        }
        // Aggregate coverage uses C^T of the raw bounds, never clamped ones.
        for (Eigen::Index j = 0; j < m; ++j) {
            CellRecord c;
            c.bin = t;
            c.unit = static_cast<std::size_t>(j);
            c.truth = static_cast<double>(y_sub(j));
            c.lower = f.sub_lower(j);
            c.upper = f.sub_upper(j);
            c.scale = sub_scale(j);
            c.covered = c.lower <= c.truth && c.truth <= c.upper;
            row.agg_val += c.covered ? 1.0 : 0.0;
            report.substation_cells.push_back(c);
        }
        covered += row.val;
        agg_covered += row.agg_val;
        size += row.size;
        row.val /= static_cast<double>(n);
        row.agg_val /= static_cast<double>(m);
        row.size /= static_cast<double>(n);
        report.per_bin.push_back(row);
        report.intervals.push_back(std::move(f));
        predictor.observe(panel, t);
    }
    const double circuit_cells = static_cast<double>(report.circuit_cells.size());
    report.val = covered / circuit_cells;
    report.agg_val = agg_covered / static_cast<double>(report.substation_cells.size());
    report.size = size / circuit_cells;
    report.raw_size = raw_size / circuit_cells;
    return report;
}

EvalReport rolling_evaluate(const CountPanel& panel, const NetworkTopology& topo, const SplitSpec& spec,
                            const PipelineConfig& cfg, bool refit_each_step) {
    if (spec.test_bins == 0) throw PreconditionError("rolling_evaluate: test window must be nonempty");
    if (panel.circuits() != topo.n()) throw PreconditionError("rolling_evaluate: panel and topology differ");
    const PanelSplit s = split(panel, spec);
    HstConformalPredictor predictor(topo, s, cfg, refit_each_step);
    EvalReport report = evaluate_predictor(panel, topo, s, predictor);
    report.alpha = cfg.alpha;
    report.k = cfg.k;
    report.method = cfg.method;
    report.seed = cfg.seed;
    report.refit_each_step = refit_each_step;
    return report;
}

std::vector<std::size_t> sample_circuits(std::size_t n, std::size_t count, std::uint64_t seed) {
    if (count == 0 || count > n) throw PreconditionError("sample_circuits: count must lie in [1, n]");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

EvalReport half_nodes_trial(const CountPanel& panel, const NetworkTopology& topo, const SplitSpec& spec,
                            const PipelineConfig& cfg, std::uint64_t seed, bool keep_all,
                            std::vector<std::size_t>* kept) {
    const std::size_t n = topo.n();
    if (n < 2) throw PreconditionError("half_nodes_trial: need at least 2 circuits");
    std::vector<std::size_t> keep;
    if (keep_all) {
        keep.resize(n);
        std::iota(keep.begin(), keep.end(), std::size_t{0});
    } else {
        keep = sample_circuits(n, n / 2, derive_seed(seed, "subsample"));
    }
    const NetworkTopology sub_topo = topo.subsample_circuits(keep);
    const CountPanel sub_panel = restrict_circuits(panel, keep);
    if (kept) *kept = keep;
    return rolling_evaluate(sub_panel, sub_topo, spec, cfg);
}

HorizonForecast horizon_forecast(const CountPanel& panel, const NetworkTopology& topo, const SplitSpec& spec,
                                 const PipelineConfig& cfg, std::size_t horizon, const HawkesModel* pretrained) {
    if (horizon == 0) throw PreconditionError("horizon_forecast: horizon must be >= 1");
    const PipelineResult base = hst_conformal_pipeline(panel, topo, spec, cfg, pretrained);
    const auto& audit = base.audit;
    const std::size_t origin = audit.split.cal.end;
    const CountMatrix history = panel.counts.topRows(static_cast<Eigen::Index>(origin));
    const Matrix* z_last = panel.covariates.empty() ? nullptr : &panel.covariates[origin - 1];
    const auto trajectories = simulate_trajectory(audit.model, history, horizon, cfg.k,
                                                  scenario_seed(cfg.seed, origin), z_last, cfg.threads);

    const auto n = static_cast<Eigen::Index>(topo.n());
    const auto h_len = static_cast<Eigen::Index>(horizon);
    const auto k = static_cast<Eigen::Index>(cfg.k);

    HorizonForecast out;
    out.quantiles = audit.quantiles;
    out.scale = audit.scores.scale;
    out.first_bin = origin;
    out.base = history.cast<double>().colwise().sum().transpose();
    const Vector widen = out.quantiles.q.cwiseProduct(out.scale);

    out.cumulative_lower.resize(h_len, n);
    out.cumulative_upper.resize(h_len, n);
    out.sub_cumulative_lower.resize(h_len, static_cast<Eigen::Index>(topo.m()));
    out.sub_cumulative_upper.resize(h_len, static_cast<Eigen::Index>(topo.m()));
    Matrix running = Matrix::Zero(k, n);
    for (Eigen::Index h = 0; h < h_len; ++h) {
        ScenarioSet step;
        step.bin = origin + static_cast<std::size_t>(h);
        step.samples.resize(k, n);
        for (Eigen::Index s = 0; s < k; ++s) step.samples.row(s) = trajectories[static_cast<std::size_t>(s)].row(h);
        running += step.samples.cast<double>();
        out.steps.push_back(build_interval(step, out.quantiles, out.scale, topo, cfg.alpha));

        const Vector lo = out.base + running.colwise().minCoeff().transpose() - widen;
        const Vector hi = out.base + running.colwise().maxCoeff().transpose() + widen;
        out.cumulative_lower.row(h) = lo.transpose();
        out.cumulative_upper.row(h) = hi.transpose();
        out.sub_cumulative_lower.row(h) = topo.aggregate(lo).transpose();
        out.sub_cumulative_upper.row(h) = topo.aggregate(hi).transpose();
    }
    return out;
}

}  // namespace hstc
